use std::path::Path;

use cfsr::gapso::violation_set_size;
use cfsr::scenario::{
    db_to_linear, dbm_to_watts, default_scenario, fpa_baseline_layout, linear_to_db, load_scenario, packing_capacity,
    parse_scenario, to_scenario_string, watts_to_dbm, ScenarioConfig,
};
use proptest::prelude::*;

fn shipped() -> ScenarioConfig {
    load_scenario(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../default.scenario")).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[test]
fn shipped_file_is_the_default_scenario() {
    let file = shipped();
    let def = default_scenario();
    let mut adjusted = file.clone();
    // powers pass through dBm, so compare them to 1e-12 and the rest exactly
    assert!(close(file.p_max_w, def.p_max_w));
    assert!(close(file.noise.pu_w, def.noise.pu_w));
    assert!(close(file.noise.eve_w, def.noise.eve_w));
    assert!(close(file.noise.su_w, def.noise.su_w));
    assert!(close(file.pathloss_ref, def.pathloss_ref));
    adjusted.p_max_w = def.p_max_w;
    adjusted.noise = def.noise;
    adjusted.pathloss_ref = def.pathloss_ref;
    assert_eq!(adjusted, def);
}

#[test]
fn shipped_file_is_canonical() {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../default.scenario")).unwrap();
    assert_eq!(to_scenario_string(&shipped()), text);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_scenario("/nonexistent/dir/x.scenario").unwrap_err();
    assert!(err.is_io());
}

#[test]
fn unknown_key_is_a_config_error() {
    let text = to_scenario_string(&default_scenario()).replace("[channel]", "[channel]\nbogus = 1");
    let err = parse_scenario(&text, Path::new("x")).unwrap_err();
    assert!(err.is_config(), "{err}");
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        1usize..5,
        1usize..10,
        10.0f64..45.0,
        0.0f64..=1.0,
        1.0f64..4.0,
        1usize..20,
        any::<u64>(),
        -60.0f64..-20.0,
    )
        .prop_map(|(m, n, p_dbm, alpha, rho, paths, seed, noise_dbm)| {
            let mut c = default_scenario();
            c.set_num_aps(m);
            c.antennas_per_ap = n;
            c.p_max_w = dbm_to_watts(p_dbm);
            c.reflection_coeff = alpha;
            c.pathloss_exponent = rho;
            c.paths_per_link = paths;
            c.rng_seed = seed;
            c.noise.eve_w = dbm_to_watts(noise_dbm);
            c
        })
}

proptest! {
    #[test]
    fn serialization_round_trips(cfg in arb_config()) {
        prop_assume!(cfg.validate().is_ok());
        let text = to_scenario_string(&cfg);
        let back = parse_scenario(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(to_scenario_string(&back), text.clone());
        let again = parse_scenario(&to_scenario_string(&back), Path::new("mem")).unwrap();
        prop_assert_eq!(again, back.clone());
        prop_assert!(close(back.p_max_w, cfg.p_max_w));
        prop_assert!(close(back.noise.eve_w, cfg.noise.eve_w));
        prop_assert_eq!(back.ap_centers, cfg.ap_centers);
    }

    #[test]
    fn unit_conversions_invert(x in -200.0f64..200.0) {
        prop_assert!((watts_to_dbm(dbm_to_watts(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        prop_assert!((linear_to_db(db_to_linear(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        let w = dbm_to_watts(x);
        prop_assert!(close(dbm_to_watts(watts_to_dbm(w)), w));
    }

    #[test]
    fn fpa_layout_meets_minimum_distance(n in 1usize..=20, cells in 2.0f64..12.0) {
        let mut cfg = default_scenario();
        cfg.antennas_per_ap = n;
        cfg.region_size_m = cells * cfg.wavelength_m;
        prop_assume!(packing_capacity(cfg.region_size_m, cfg.min_ma_distance_m) >= n);
        if let Ok(layout) = fpa_baseline_layout(&cfg) {
            prop_assert_eq!(violation_set_size(&layout, cfg.min_ma_distance_m), 0);
            prop_assert!(layout.within_regions(&cfg));
        }
    }
}
