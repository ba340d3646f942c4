use std::f64::consts::PI;

use cfsr::channel::{assemble_channels, field_response_vector, sample_geometry, PathAngles};
use cfsr::scenario::{default_scenario, fpa_baseline_layout, MaLayout, Node, Vec3};
use cfsr::streams::{stream_rng, Stream};
use proptest::prelude::*;

/// Largest gap between the empirical CDF and U(-π/2, π/2).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (x + PI / 2.0) / PI;
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn path_gain_variance_matches_pathloss() {
    let cfg = default_scenario();
    let mut rng = stream_rng(21, Stream::Channel);
    let draws = 10_000;
    let mut ap_pu = 0.0;
    let mut bd_su = 0.0;
    let mut count = 0usize;
    for _ in 0..draws {
        let g = sample_geometry(&cfg, &mut rng);
        ap_pu += g.ap_to_node[0][Node::Pu.index()].gains.iter().map(|z| z.norm_sqr()).sum::<f64>();
        bd_su += g.bd_to_node[Node::Su.index()].gains.iter().map(|z| z.norm_sqr()).sum::<f64>();
        count += cfg.paths_per_link;
    }
    let expected = |d: f64| cfg.pathloss_ref * d.powf(-cfg.pathloss_exponent) / cfg.paths_per_link as f64;
    let d_ap = cfg.ap_centers[0].distance(cfg.pu_position);
    let d_bd = cfg.bd_position.distance(cfg.su_position);
    let e1 = ap_pu / count as f64 / expected(d_ap) - 1.0;
    let e2 = bd_su / count as f64 / expected(d_bd) - 1.0;
    assert!(e1.abs() < 0.03, "{e1}");
    assert!(e2.abs() < 0.03, "{e2}");
}

#[test]
fn angles_are_uniform() {
    let cfg = default_scenario();
    let mut rng = stream_rng(22, Stream::Channel);
    let mut az = Vec::new();
    let mut el = Vec::new();
    while az.len() < 20_000 {
        let g = sample_geometry(&cfg, &mut rng);
        for a in g.ap_to_bd[1].tx.iter().chain(g.bd_to_node[0].rx.iter()) {
            az.push(a.azimuth);
            el.push(a.elevation);
        }
    }
    // 1% critical value of the one-sample KS statistic
    let crit = 1.628 / (az.len() as f64).sqrt();
    assert!(ks_uniform(az) < crit);
    assert!(ks_uniform(el) < crit);
}

#[test]
fn array_translation_keeps_channel_power_distribution() {
    let cfg = default_scenario();
    let fpa = fpa_baseline_layout(&cfg).unwrap();
    let shift = Vec3::new(0.037, 0.0, -0.021);
    let moved = MaLayout::new(cfg.antennas_per_ap, fpa.coords().iter().map(|&p| p + shift).collect()).unwrap();
    assert!(moved.within_regions(&cfg));
    let mut rng = stream_rng(23, Stream::Channel);
    let (mut base, mut shifted) = (0.0, 0.0);
    let mut changed = false;
    for _ in 0..20_000 {
        let g = sample_geometry(&cfg, &mut rng);
        let a = assemble_channels(&g, &fpa, &cfg).unwrap();
        let b = assemble_channels(&g, &moved, &cfg).unwrap();
        changed |= a.ap_to_bd[0] != b.ap_to_bd[0];
        base += a.ap_to_bd[0].norm_squared();
        shifted += b.ap_to_bd[0].norm_squared();
    }
    assert!(changed);
    assert!((shifted / base - 1.0).abs() < 0.03, "{}", shifted / base);
}

proptest! {
    #[test]
    fn frv_entries_have_unit_modulus(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
        angles in prop::collection::vec((-PI / 2.0..PI / 2.0, -PI / 2.0..PI / 2.0), 1..12),
    ) {
        let angles: Vec<PathAngles> = angles.into_iter().map(|(a, e)| PathAngles::new(a, e)).collect();
        let v = field_response_vector(Vec3::new(x, y, z), &angles, 0.1);
        for e in v.iter() {
            prop_assert!((e.norm() - 1.0).abs() < 1e-12);
        }
    }
}
