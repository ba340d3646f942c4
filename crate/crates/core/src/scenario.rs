//! Scenario configuration, node geometry and unit conversions.
//!
//! Powers are held in watts and path-loss values in linear scale; dBm and dB
//! only appear in the scenario file.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn get(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::X => self.x = value,
            Axis::Y => self.y = value,
            Axis::Z => self.z = value,
        }
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Receiving nodes served (or threatened) by the access points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Pu,
    Eve,
    Su,
}

impl Node {
    pub const ALL: [Node; 3] = [Node::Pu, Node::Eve, Node::Su];

    pub fn index(self) -> usize {
        match self {
            Node::Pu => 0,
            Node::Eve => 1,
            Node::Su => 2,
        }
    }
}

/// Square movable region of one AP, perpendicular to `normal`, in local
/// coordinates centered on the AP position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPlane {
    pub center: Vec3,
    pub normal: Axis,
    pub half_width: f64,
}

impl RegionPlane {
    /// The two in-plane axes, in (x, y, z) order.
    pub fn free_axes(&self) -> (Axis, Axis) {
        match self.normal {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    pub fn lower(&self) -> Vec3 {
        let mut v = Vec3::new(-self.half_width, -self.half_width, -self.half_width);
        v.set(self.normal, 0.0);
        v
    }

    pub fn upper(&self) -> Vec3 {
        let mut v = Vec3::new(self.half_width, self.half_width, self.half_width);
        v.set(self.normal, 0.0);
        v
    }

    /// Local point from in-plane coordinates.
    pub fn local(&self, u: f64, v: f64) -> Vec3 {
        let (a, b) = self.free_axes();
        let mut p = Vec3::ZERO;
        p.set(a, u);
        p.set(b, v);
        p
    }

    /// Per-coordinate clamp onto the region box.
    pub fn clamp(&self, p: Vec3) -> Vec3 {
        let (lo, hi) = (self.lower(), self.upper());
        Vec3::new(
            p.x.clamp(lo.x, hi.x),
            p.y.clamp(lo.y, hi.y),
            p.z.clamp(lo.z, hi.z),
        )
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        Axis::ALL
            .iter()
            .all(|&a| p.get(a) >= lo.get(a) && p.get(a) <= hi.get(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeNoise {
    pub pu_w: f64,
    pub eve_w: f64,
    pub su_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmParams {
    pub particles: usize,
    pub iterations: usize,
    pub penalty: f64,
    pub c1: f64,
    pub c2: f64,
    pub inertia_max: f64,
    pub inertia_min: f64,
    pub crossover_max: f64,
    pub crossover_min: f64,
    pub mutation_max: f64,
    pub mutation_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// AO stopping threshold on the secrecy-rate gain, bits/s/Hz.
    pub ao: f64,
    /// SCA stopping threshold on the objective gain, bits/s/Hz.
    pub sca: f64,
    /// Relative residual for the beta-star bisection.
    pub bisection: f64,
    /// Duality-measure target of the barrier solver.
    pub barrier: f64,
}

/// Every physical and algorithmic parameter of one scenario, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub bd_antennas: usize,
    pub bandwidth_hz: f64,
    pub p_max_w: f64,
    pub wavelength_m: f64,
    pub min_ma_distance_m: f64,
    pub reflection_coeff: f64,
    pub noise: NodeNoise,
    pub rate_th_primary_bps: f64,
    pub rate_th_secondary_bps: f64,
    /// Side length A of each square movable region.
    pub region_size_m: f64,
    pub region_normal: Axis,
    pub ap_area_center: Vec3,
    pub ap_area_size_m: f64,
    pub ap_centers: Vec<Vec3>,
    pub bd_position: Vec3,
    pub pu_position: Vec3,
    pub su_position: Vec3,
    pub eve_position: Vec3,
    pub paths_per_link: usize,
    /// Path loss at the 1 m reference distance, linear.
    pub pathloss_ref: f64,
    pub pathloss_exponent: f64,
    pub swarm: SwarmParams,
    pub tolerances: Tolerances,
    pub ao_max_rounds: usize,
    pub rng_seed: u64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0 - 3.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Centers of a row-major `k x k` grid of cells covering a square area,
/// `k = ceil(sqrt(count))`, starting from the row with the largest y.
pub fn ap_grid(count: usize, area_center: Vec3, area_size: f64) -> Vec<Vec3> {
    let k = (count as f64).sqrt().ceil().max(1.0) as usize;
    let cell = area_size / k as f64;
    let x0 = area_center.x - area_size / 2.0;
    let y_top = area_center.y + area_size / 2.0;
    (0..count)
        .map(|i| {
            let (row, col) = (i / k, i % k);
            Vec3::new(
                x0 + (col as f64 + 0.5) * cell,
                y_top - (row as f64 + 0.5) * cell,
                area_center.z,
            )
        })
        .collect()
}

/// Number of points at pairwise distance >= `d` that the constructive square
/// and hexagonal lattices fit into a square of side `a`.
pub fn packing_capacity(a: f64, d: f64) -> usize {
    if d <= 0.0 {
        return usize::MAX;
    }
    let per_row = |width: f64| -> usize {
        if width < 0.0 {
            0
        } else {
            (width / d + 1e-9).floor() as usize + 1
        }
    };
    let square = per_row(a).pow(2);
    let row_pitch = d * 3f64.sqrt() / 2.0;
    let rows = (a / row_pitch + 1e-9).floor() as usize + 1;
    let hex: usize = (0..rows)
        .map(|r| if r % 2 == 0 { per_row(a) } else { per_row(a - d / 2.0) })
        .sum();
    square.max(hex)
}

/// Hexagonal (or square, whichever holds more) packing of `n` points at
/// spacing `d`, centered in the square of side `a`, as in-plane (u, v) pairs.
pub fn lattice_points(n: usize, a: f64, d: f64) -> Option<Vec<(f64, f64)>> {
    let per = (a / d + 1e-9).floor() as usize + 1;
    let mut square = Vec::new();
    for r in 0..per {
        for c in 0..per {
            square.push((c as f64 * d, r as f64 * d));
        }
    }
    let pitch = d * 3f64.sqrt() / 2.0;
    let rows = (a / pitch + 1e-9).floor() as usize + 1;
    let mut hex = Vec::new();
    for r in 0..rows {
        let shift = if r % 2 == 0 { 0.0 } else { d / 2.0 };
        let mut c = 0;
        while shift + c as f64 * d <= a + 1e-12 {
            hex.push((shift + c as f64 * d, r as f64 * pitch));
            c += 1;
        }
    }
    let pts = if square.len() >= hex.len() { square } else { hex };
    if pts.len() < n {
        return None;
    }
    let chosen: Vec<(f64, f64)> = pts.into_iter().take(n).collect();
    let (umax, vmax) = chosen
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), &(u, v)| (a.max(u), b.max(v)));
    Some(
        chosen
            .into_iter()
            .map(|(u, v)| (u - umax / 2.0, v - vmax / 2.0))
            .collect(),
    )
}

impl ScenarioConfig {
    pub fn region(&self, ap: usize) -> RegionPlane {
        RegionPlane {
            center: self.ap_centers[ap],
            normal: self.region_normal,
            half_width: self.region_size_m / 2.0,
        }
    }

    pub fn noise_w(&self, node: Node) -> f64 {
        match node {
            Node::Pu => self.noise.pu_w,
            Node::Eve => self.noise.eve_w,
            Node::Su => self.noise.su_w,
        }
    }

    pub fn position(&self, node: Node) -> Vec3 {
        match node {
            Node::Pu => self.pu_position,
            Node::Eve => self.eve_position,
            Node::Su => self.su_position,
        }
    }

    /// SINR the SU needs to decode the primary symbol at `rate_th_primary_bps`.
    pub fn primary_sinr_threshold(&self) -> f64 {
        (self.rate_th_primary_bps / self.bandwidth_hz).exp2() - 1.0
    }

    /// Stacked beamformer length M·N.
    pub fn stacked_len(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }

    /// Changes the AP count and re-places the APs on the uniform grid.
    pub fn set_num_aps(&mut self, m: usize) {
        self.num_aps = m;
        self.ap_centers = ap_grid(m, self.ap_area_center, self.ap_area_size_m);
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {v}")))
            }
        }
        fn nonneg(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be non-negative and finite, got {v}")))
            }
        }
        fn probability_pair(field: &str, lo: f64, hi: f64) -> Result<()> {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                return Err(Error::config(field, "probabilities out of [0,1]"));
            }
            if lo > hi {
                return Err(Error::config(field, "minimum exceeds maximum"));
            }
            Ok(())
        }

        for (field, v) in [
            ("num_aps", self.num_aps),
            ("antennas_per_ap", self.antennas_per_ap),
            ("bd_antennas", self.bd_antennas),
            ("paths_per_link", self.paths_per_link),
            ("particles", self.swarm.particles),
            ("iterations", self.swarm.iterations),
            ("ao_max_rounds", self.ao_max_rounds),
        ] {
            if v < 1 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("p_max", self.p_max_w)?;
        positive("wavelength_m", self.wavelength_m)?;
        positive("min_ma_distance_m", self.min_ma_distance_m)?;
        if !(0.0..=1.0).contains(&self.reflection_coeff) {
            return Err(Error::config("reflection_coeff", "reflection_coeff out of [0,1]"));
        }
        positive("noise.pu", self.noise.pu_w)?;
        positive("noise.eve", self.noise.eve_w)?;
        positive("noise.su", self.noise.su_w)?;
        nonneg("rate_th_primary_bps", self.rate_th_primary_bps)?;
        nonneg("rate_th_secondary_bps", self.rate_th_secondary_bps)?;
        positive("region_size_m", self.region_size_m)?;
        positive("ap_area_size_m", self.ap_area_size_m)?;
        nonneg("pathloss_ref", self.pathloss_ref)?;
        nonneg("pathloss_exponent", self.pathloss_exponent)?;
        if self.ap_centers.len() != self.num_aps {
            return Err(Error::config(
                "ap_centers_m",
                format!("{} centers given for {} APs", self.ap_centers.len(), self.num_aps),
            ));
        }
        let named = [
            ("bd_m", self.bd_position),
            ("pu_m", self.pu_position),
            ("su_m", self.su_position),
            ("eve_m", self.eve_position),
            ("ap_area_center_m", self.ap_area_center),
        ];
        for (field, p) in named.iter().chain(
            self.ap_centers
                .iter()
                .map(|p| ("ap_centers_m", *p))
                .collect::<Vec<_>>()
                .iter(),
        ) {
            if !p.is_finite() {
                return Err(Error::config(*field, "non-finite coordinate"));
            }
        }
        let s = &self.swarm;
        positive("penalty", s.penalty)?;
        nonneg("c1", s.c1)?;
        nonneg("c2", s.c2)?;
        nonneg("inertia_min", s.inertia_min)?;
        if s.inertia_min > s.inertia_max {
            return Err(Error::config("inertia", "inertia_min exceeds inertia_max"));
        }
        probability_pair("crossover", s.crossover_min, s.crossover_max)?;
        probability_pair("mutation", s.mutation_min, s.mutation_max)?;
        let t = &self.tolerances;
        positive("ao_tol", t.ao)?;
        positive("sca_tol", t.sca)?;
        positive("bisection_tol", t.bisection)?;
        positive("barrier_tol", t.barrier)?;
        if packing_capacity(self.region_size_m, self.min_ma_distance_m) < self.antennas_per_ap {
            return Err(Error::config(
                "min_ma_distance_m",
                format!(
                    "{} antennas at spacing {} m do not fit in a {} m square region",
                    self.antennas_per_ap, self.min_ma_distance_m, self.region_size_m
                ),
            ));
        }
        Ok(())
    }
}

/// The reference configuration: 3 APs with 8 movable antennas each, a 4-antenna
/// backscatter device, 35 dBm per AP and -40 dBm noise.
pub fn default_scenario() -> ScenarioConfig {
    let wavelength = 0.1;
    let area_center = Vec3::new(0.0, -50.0, 10.0);
    ScenarioConfig {
        num_aps: 3,
        antennas_per_ap: 8,
        bd_antennas: 4,
        bandwidth_hz: 100e3,
        p_max_w: dbm_to_watts(35.0),
        wavelength_m: wavelength,
        min_ma_distance_m: 0.5 * wavelength,
        reflection_coeff: 0.8,
        noise: NodeNoise {
            pu_w: dbm_to_watts(-40.0),
            eve_w: dbm_to_watts(-40.0),
            su_w: dbm_to_watts(-40.0),
        },
        rate_th_primary_bps: 100e3,
        rate_th_secondary_bps: 600e3,
        region_size_m: 6.0 * wavelength,
        region_normal: Axis::Y,
        ap_area_center: area_center,
        ap_area_size_m: 100.0,
        ap_centers: ap_grid(3, area_center, 100.0),
        bd_position: Vec3::new(-5.0, 5.0, 10.0),
        pu_position: Vec3::new(0.0, 10.0, 10.0),
        su_position: Vec3::new(5.0, 5.0, 10.0),
        eve_position: Vec3::new(1.0, 9.0, 10.0),
        paths_per_link: 10,
        pathloss_ref: db_to_linear(-20.0),
        pathloss_exponent: 1.2,
        swarm: SwarmParams {
            particles: 300,
            iterations: 300,
            penalty: 100.0,
            c1: 1.4,
            c2: 1.4,
            inertia_max: 0.9,
            inertia_min: 0.4,
            crossover_max: 0.95,
            crossover_min: 0.2,
            mutation_max: 0.1,
            mutation_min: 0.01,
        },
        tolerances: Tolerances {
            ao: 1e-2,
            sca: 1e-2,
            bisection: 1e-9,
            barrier: 1e-6,
        },
        ao_max_rounds: 20,
        rng_seed: 42,
    }
}

/// Fixed linear array of `count` antennas along x, spaced half a wavelength and
/// centered on `center`.
pub fn bd_fpa_positions(center: Vec3, count: usize, wavelength: f64) -> Vec<Vec3> {
    let spacing = wavelength / 2.0;
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count)
        .map(|l| center + Vec3::new((l as f64 - mid) * spacing, 0.0, 0.0))
        .collect()
}

/// Local antenna coordinates for every AP, stored AP-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MaLayout {
    per_ap: usize,
    coords: Vec<Vec3>,
}

impl MaLayout {
    pub fn new(per_ap: usize, coords: Vec<Vec3>) -> Result<Self> {
        if per_ap == 0 || coords.len() % per_ap != 0 {
            return Err(Error::Dimension(format!(
                "{} coordinates cannot be split into blocks of {per_ap}",
                coords.len()
            )));
        }
        Ok(MaLayout { per_ap, coords })
    }

    pub fn num_aps(&self) -> usize {
        self.coords.len() / self.per_ap
    }

    pub fn per_ap(&self) -> usize {
        self.per_ap
    }

    pub fn ap(&self, m: usize) -> &[Vec3] {
        &self.coords[m * self.per_ap..(m + 1) * self.per_ap]
    }

    pub fn coords(&self) -> &[Vec3] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [Vec3] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<Vec3> {
        self.coords
    }

    /// True when every antenna lies in its AP's region box.
    pub fn within_regions(&self, cfg: &ScenarioConfig) -> bool {
        (0..self.num_aps()).all(|m| {
            let region = cfg.region(m);
            self.ap(m).iter().all(|&p| region.contains(p))
        })
    }
}

/// Fixed-antenna baseline: a centered square grid at half-wavelength spacing,
/// filled row-major, identical at every AP.
pub fn fpa_baseline_layout(cfg: &ScenarioConfig) -> Result<MaLayout> {
    let n = cfg.antennas_per_ap;
    let spacing = cfg.wavelength_m / 2.0;
    if spacing + 1e-12 < cfg.min_ma_distance_m {
        return Err(Error::config(
            "min_ma_distance_m",
            "packing infeasible: half-wavelength grid violates the minimum distance",
        ));
    }
    let k = (n as f64).sqrt().ceil() as usize;
    if (k as f64 - 1.0) * spacing > cfg.region_size_m + 1e-12 {
        return Err(Error::config(
            "region_size_m",
            format!("packing infeasible: {k}x{k} grid at {spacing} m exceeds the region"),
        ));
    }
    let mid = (k as f64 - 1.0) / 2.0;
    let mut coords = Vec::with_capacity(n * cfg.num_aps);
    for m in 0..cfg.num_aps {
        let region = cfg.region(m);
        for i in 0..n {
            let (row, col) = (i / k, i % k);
            coords.push(region.local((col as f64 - mid) * spacing, (mid - row as f64) * spacing));
        }
    }
    MaLayout::new(n, coords)
}

// ---------------------------------------------------------------------------
// Scenario file

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    rng_seed: u64,
    system: SystemSection,
    noise: NoiseSection,
    geometry: GeometrySection,
    channel: ChannelSection,
    swarm: SwarmSection,
    solver: SolverSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    num_aps: usize,
    antennas_per_ap: usize,
    bd_antennas: usize,
    bandwidth_hz: f64,
    p_max_dbm: f64,
    wavelength_m: f64,
    min_ma_distance_m: f64,
    reflection_coeff: f64,
    rate_th_primary_bps: f64,
    rate_th_secondary_bps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSection {
    pu_dbm: f64,
    eve_dbm: f64,
    su_dbm: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometrySection {
    region_size_m: f64,
    region_normal: Axis,
    ap_area_center_m: [f64; 3],
    ap_area_size_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ap_centers_m: Option<Vec<[f64; 3]>>,
    bd_m: [f64; 3],
    pu_m: [f64; 3],
    su_m: [f64; 3],
    eve_m: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    paths_per_link: usize,
    pathloss_ref_db: f64,
    pathloss_exponent: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwarmSection {
    particles: usize,
    iterations: usize,
    penalty: f64,
    c1: f64,
    c2: f64,
    inertia_max: f64,
    inertia_min: f64,
    crossover_max: f64,
    crossover_min: f64,
    mutation_max: f64,
    mutation_min: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    ao_tol: f64,
    sca_tol: f64,
    bisection_tol: f64,
    barrier_tol: f64,
    ao_max_rounds: usize,
}

impl From<ScenarioFile> for ScenarioConfig {
    fn from(f: ScenarioFile) -> Self {
        let g = &f.geometry;
        let area_center = Vec3::from_array(g.ap_area_center_m);
        let ap_centers = match &g.ap_centers_m {
            Some(list) => list.iter().copied().map(Vec3::from_array).collect(),
            None => ap_grid(f.system.num_aps, area_center, g.ap_area_size_m),
        };
        ScenarioConfig {
            num_aps: f.system.num_aps,
            antennas_per_ap: f.system.antennas_per_ap,
            bd_antennas: f.system.bd_antennas,
            bandwidth_hz: f.system.bandwidth_hz,
            p_max_w: dbm_to_watts(f.system.p_max_dbm),
            wavelength_m: f.system.wavelength_m,
            min_ma_distance_m: f.system.min_ma_distance_m,
            reflection_coeff: f.system.reflection_coeff,
            noise: NodeNoise {
                pu_w: dbm_to_watts(f.noise.pu_dbm),
                eve_w: dbm_to_watts(f.noise.eve_dbm),
                su_w: dbm_to_watts(f.noise.su_dbm),
            },
            rate_th_primary_bps: f.system.rate_th_primary_bps,
            rate_th_secondary_bps: f.system.rate_th_secondary_bps,
            region_size_m: g.region_size_m,
            region_normal: g.region_normal,
            ap_area_center: area_center,
            ap_area_size_m: g.ap_area_size_m,
            ap_centers,
            bd_position: Vec3::from_array(g.bd_m),
            pu_position: Vec3::from_array(g.pu_m),
            su_position: Vec3::from_array(g.su_m),
            eve_position: Vec3::from_array(g.eve_m),
            paths_per_link: f.channel.paths_per_link,
            pathloss_ref: db_to_linear(f.channel.pathloss_ref_db),
            pathloss_exponent: f.channel.pathloss_exponent,
            swarm: SwarmParams {
                particles: f.swarm.particles,
                iterations: f.swarm.iterations,
                penalty: f.swarm.penalty,
                c1: f.swarm.c1,
                c2: f.swarm.c2,
                inertia_max: f.swarm.inertia_max,
                inertia_min: f.swarm.inertia_min,
                crossover_max: f.swarm.crossover_max,
                crossover_min: f.swarm.crossover_min,
                mutation_max: f.swarm.mutation_max,
                mutation_min: f.swarm.mutation_min,
            },
            tolerances: Tolerances {
                ao: f.solver.ao_tol,
                sca: f.solver.sca_tol,
                bisection: f.solver.bisection_tol,
                barrier: f.solver.barrier_tol,
            },
            ao_max_rounds: f.solver.ao_max_rounds,
            rng_seed: f.rng_seed,
        }
    }
}

impl From<&ScenarioConfig> for ScenarioFile {
    fn from(c: &ScenarioConfig) -> Self {
        ScenarioFile {
            rng_seed: c.rng_seed,
            system: SystemSection {
                num_aps: c.num_aps,
                antennas_per_ap: c.antennas_per_ap,
                bd_antennas: c.bd_antennas,
                bandwidth_hz: c.bandwidth_hz,
                p_max_dbm: watts_to_dbm(c.p_max_w),
                wavelength_m: c.wavelength_m,
                min_ma_distance_m: c.min_ma_distance_m,
                reflection_coeff: c.reflection_coeff,
                rate_th_primary_bps: c.rate_th_primary_bps,
                rate_th_secondary_bps: c.rate_th_secondary_bps,
            },
            noise: NoiseSection {
                pu_dbm: watts_to_dbm(c.noise.pu_w),
                eve_dbm: watts_to_dbm(c.noise.eve_w),
                su_dbm: watts_to_dbm(c.noise.su_w),
            },
            geometry: GeometrySection {
                region_size_m: c.region_size_m,
                region_normal: c.region_normal,
                ap_area_center_m: c.ap_area_center.to_array(),
                ap_area_size_m: c.ap_area_size_m,
                ap_centers_m: Some(c.ap_centers.iter().map(|p| p.to_array()).collect()),
                bd_m: c.bd_position.to_array(),
                pu_m: c.pu_position.to_array(),
                su_m: c.su_position.to_array(),
                eve_m: c.eve_position.to_array(),
            },
            channel: ChannelSection {
                paths_per_link: c.paths_per_link,
                pathloss_ref_db: linear_to_db(c.pathloss_ref),
                pathloss_exponent: c.pathloss_exponent,
            },
            swarm: SwarmSection {
                particles: c.swarm.particles,
                iterations: c.swarm.iterations,
                penalty: c.swarm.penalty,
                c1: c.swarm.c1,
                c2: c.swarm.c2,
                inertia_max: c.swarm.inertia_max,
                inertia_min: c.swarm.inertia_min,
                crossover_max: c.swarm.crossover_max,
                crossover_min: c.swarm.crossover_min,
                mutation_max: c.swarm.mutation_max,
                mutation_min: c.swarm.mutation_min,
            },
            solver: SolverSection {
                ao_tol: c.tolerances.ao,
                sca_tol: c.tolerances.sca,
                bisection_tol: c.tolerances.bisection,
                barrier_tol: c.tolerances.barrier,
                ao_max_rounds: c.ao_max_rounds,
            },
        }
    }
}

/// Parses scenario text; `origin` only labels error messages.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let cfg = ScenarioConfig::from(file);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path)
}

/// Serializes to the scenario file format (dBm/dB at the boundary).
pub fn to_scenario_string(cfg: &ScenarioConfig) -> String {
    toml::to_string(&ScenarioFile::from(cfg)).expect("scenario serializes")
}
