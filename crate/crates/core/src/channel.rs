//! Geometric field-response channel model.
//!
//! Each link is a set of far-field paths. A path has one departure direction
//! (shared by every antenna of the transmit region), one arrival direction and
//! one complex gain. Moving an antenna only rotates the phase of its field
//! response, so a [`ChannelGeometry`] sampled once can be re-assembled for any
//! antenna layout.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix_text;
use crate::scenario::{bd_fpa_positions, MaLayout, Node, ScenarioConfig, Vec3};
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAngles {
    pub azimuth: f64,
    pub elevation: f64,
}

impl PathAngles {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        PathAngles { azimuth, elevation }
    }

    /// Unit vector (cos θ cos φ, cos θ sin φ, sin θ).
    pub fn direction(&self) -> Vec3 {
        let (st, ct) = self.elevation.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        Vec3::new(ct * cp, ct * sp, st)
    }
}

/// Path-length difference between `pos` and its region origin along a path.
pub fn propagation_difference(pos: Vec3, angles: PathAngles) -> f64 {
    pos.dot(angles.direction())
}

/// Field-response vector of one antenna position over a set of paths.
pub fn field_response_vector(pos: Vec3, angles: &[PathAngles], wavelength: f64) -> CVector {
    let k = 2.0 * PI / wavelength;
    CVector::from_iterator(
        angles.len(),
        angles
            .iter()
            .map(|a| C64::from_polar(1.0, k * propagation_difference(pos, *a))),
    )
}

/// Field-response matrix: one column per position.
fn field_response_matrix(positions: &[Vec3], angles: &[PathAngles], wavelength: f64) -> CMatrix {
    let k = 2.0 * PI / wavelength;
    let dirs: Vec<Vec3> = angles.iter().map(PathAngles::direction).collect();
    CMatrix::from_fn(angles.len(), positions.len(), |j, n| {
        C64::from_polar(1.0, k * positions[n].dot(dirs[j]))
    })
}

/// One multipath link with diagonal path response.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub tx: Vec<PathAngles>,
    pub rx: Vec<PathAngles>,
    /// Diagonal of the path-response matrix.
    pub gains: Vec<C64>,
    pub distance_m: f64,
}

impl LinkGeometry {
    fn sample<R: Rng + ?Sized>(paths: usize, distance: f64, cfg: &ScenarioConfig, rng: &mut R) -> Self {
        let angle = |rng: &mut R| rng.random_range(-PI / 2.0..=PI / 2.0);
        let draw_angles = |rng: &mut R| -> Vec<PathAngles> {
            (0..paths)
                .map(|_| {
                    let az = angle(rng);
                    let el = angle(rng);
                    PathAngles::new(az, el)
                })
                .collect()
        };
        let tx = draw_angles(rng);
        let rx = draw_angles(rng);
        let std = (cfg.pathloss_ref * distance.powf(-cfg.pathloss_exponent) / paths as f64).sqrt();
        let gains = (0..paths)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re, im) * (std * std::f64::consts::FRAC_1_SQRT_2)
            })
            .collect();
        LinkGeometry {
            tx,
            rx,
            gains,
            distance_m: distance,
        }
    }

    /// `f^H Σ K` for receive offsets `rx_pos` and transmit positions `tx_pos`:
    /// an `rx_pos.len() x tx_pos.len()` matrix.
    fn response(&self, rx_pos: &[Vec3], tx_pos: &[Vec3], wavelength: f64) -> CMatrix {
        let f = field_response_matrix(rx_pos, &self.rx, wavelength);
        let k = field_response_matrix(tx_pos, &self.tx, wavelength);
        let mut sk = k;
        for (j, g) in self.gains.iter().enumerate() {
            let mut row = sk.row_mut(j);
            row *= *g;
        }
        f.adjoint() * sk
    }
}

/// Angles, path gains and distances of every link in one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGeometry {
    /// AP m -> backscatter device.
    pub ap_to_bd: Vec<LinkGeometry>,
    /// AP m -> [PU, Eve, SU].
    pub ap_to_node: Vec<[LinkGeometry; 3]>,
    /// Backscatter device -> [PU, Eve, SU].
    pub bd_to_node: [LinkGeometry; 3],
}

impl ChannelGeometry {
    pub fn num_aps(&self) -> usize {
        self.ap_to_bd.len()
    }

    /// Stable 64-bit fingerprint of every number in the geometry.
    pub fn fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::Hasher;
        let mut h = DefaultHasher::new();
        let mut feed = |l: &LinkGeometry| {
            for a in l.tx.iter().chain(l.rx.iter()) {
                h.write_u64(a.azimuth.to_bits());
                h.write_u64(a.elevation.to_bits());
            }
            for g in &l.gains {
                h.write_u64(g.re.to_bits());
                h.write_u64(g.im.to_bits());
            }
            h.write_u64(l.distance_m.to_bits());
        };
        for m in 0..self.ap_to_bd.len() {
            feed(&self.ap_to_bd[m]);
            for l in &self.ap_to_node[m] {
                feed(l);
            }
        }
        for l in &self.bd_to_node {
            feed(l);
        }
        h.finish()
    }
}

/// Draws every link of one realization: angles uniform on [-π/2, π/2] and
/// path gains CN(0, c0 d^-ϱ / L̄). Distances are center to center.
pub fn sample_geometry<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> ChannelGeometry {
    let paths = cfg.paths_per_link;
    let mut ap_to_bd = Vec::with_capacity(cfg.num_aps);
    let mut ap_to_node = Vec::with_capacity(cfg.num_aps);
    for m in 0..cfg.num_aps {
        let ap = cfg.ap_centers[m];
        ap_to_bd.push(LinkGeometry::sample(paths, ap.distance(cfg.bd_position), cfg, rng));
        let links = Node::ALL.map(|node| {
            LinkGeometry::sample(paths, ap.distance(cfg.position(node)), cfg, rng)
        });
        ap_to_node.push(links);
    }
    let bd_to_node = Node::ALL.map(|node| {
        LinkGeometry::sample(paths, cfg.bd_position.distance(cfg.position(node)), cfg, rng)
    });
    ChannelGeometry {
        ap_to_bd,
        ap_to_node,
        bd_to_node,
    }
}

/// Assembled complex channels for one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `H_m^H`, L x N, AP m -> backscatter device.
    pub ap_to_bd: Vec<CMatrix>,
    /// `h_{m,ξ}` (N), with received amplitude `h^H w_m`; indexed by [`Node::index`].
    pub ap_to_node: Vec<[CVector; 3]>,
    /// `g_{b,ξ}` (L), with BD contribution `g^H H_m^H w_m`.
    pub bd_to_node: [CVector; 3],
}

impl ChannelSet {
    pub fn num_aps(&self) -> usize {
        self.ap_to_bd.len()
    }

    pub fn antennas_per_ap(&self) -> usize {
        self.ap_to_bd.first().map_or(0, |h| h.ncols())
    }

    pub fn direct(&self, m: usize, node: Node) -> &CVector {
        &self.ap_to_node[m][node.index()]
    }

    pub fn backscatter(&self, node: Node) -> &CVector {
        &self.bd_to_node[node.index()]
    }

    /// Text dump: one section per matrix, complex entries as `a+bi`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, h) in self.ap_to_bd.iter().enumerate() {
            matrix_text::write_section(&mut out, &format!("H_{m}^H"), h);
        }
        for (m, links) in self.ap_to_node.iter().enumerate() {
            for node in Node::ALL {
                let v = &links[node.index()];
                matrix_text::write_section(&mut out, &format!("h_{m}_{}", node_tag(node)), &column(v));
            }
        }
        for node in Node::ALL {
            let v = &self.bd_to_node[node.index()];
            matrix_text::write_section(&mut out, &format!("g_b_{}", node_tag(node)), &column(v));
        }
        out
    }
}

fn column(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn node_tag(node: Node) -> &'static str {
    match node {
        Node::Pu => "p",
        Node::Eve => "e",
        Node::Su => "s",
    }
}

/// Builds every channel from a fixed geometry and the current antenna layout.
///
/// Only the AP-side transmit responses depend on `layout`; receive-side
/// responses use offsets from each node's own origin (zero for the
/// single-antenna nodes, the fixed linear array for the backscatter device).
pub fn assemble_channels(geom: &ChannelGeometry, layout: &MaLayout, cfg: &ScenarioConfig) -> Result<ChannelSet> {
    let m_count = geom.num_aps();
    if layout.num_aps() != m_count || cfg.num_aps != m_count {
        return Err(Error::Dimension(format!(
            "geometry has {m_count} APs, layout {} and config {}",
            layout.num_aps(),
            cfg.num_aps
        )));
    }
    if layout.per_ap() != cfg.antennas_per_ap {
        return Err(Error::Dimension(format!(
            "layout has {} antennas per AP, config {}",
            layout.per_ap(),
            cfg.antennas_per_ap
        )));
    }
    let lambda = cfg.wavelength_m;
    let bd_offsets = bd_fpa_positions(Vec3::ZERO, cfg.bd_antennas, lambda);
    let origin = [Vec3::ZERO];
    let mut ap_to_bd = Vec::with_capacity(m_count);
    let mut ap_to_node = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let tx = layout.ap(m);
        ap_to_bd.push(geom.ap_to_bd[m].response(&bd_offsets, tx, lambda));
        let links = Node::ALL.map(|node| {
            let row = geom.ap_to_node[m][node.index()].response(&origin, tx, lambda);
            row.row(0).adjoint()
        });
        ap_to_node.push(links);
    }
    let bd_to_node = Node::ALL.map(|node| {
        let row = geom.bd_to_node[node.index()].response(&origin, &bd_offsets, lambda);
        row.row(0).adjoint()
    });
    Ok(ChannelSet {
        ap_to_bd,
        ap_to_node,
        bd_to_node,
    })
}
