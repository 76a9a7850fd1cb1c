use std::path::PathBuf;

use proptest::prelude::*;
use rowgame::scenario::derive_seed;
use rowgame::{expand_sweep, Error, ExperimentConfig, ScenarioKind, SweepConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_match_presets() {
    let pv = ExperimentConfig::load(&configs_dir().join("pedveh.toml"), &[]).unwrap();
    let vv = ExperimentConfig::load(&configs_dir().join("vehveh.toml"), &[]).unwrap();
    assert_eq!(pv, ExperimentConfig::pedestrian_vehicle());
    assert_eq!(vv, ExperimentConfig::vehicle_vehicle());
    assert_eq!(pv.scenario().unwrap().kind, ScenarioKind::PedestrianVehicle);
    assert_eq!(vv.scenario().unwrap().kind, ScenarioKind::VehicleVehicle);
}

#[test]
fn default_sweep_sizes() {
    for (cfg, n) in [
        (ExperimentConfig::pedestrian_vehicle(), 1250),
        (ExperimentConfig::vehicle_vehicle(), 2500),
    ] {
        let setups = expand_sweep(&cfg.scenario().unwrap(), &cfg.sweep).unwrap();
        assert_eq!(setups.len(), n);
        assert!(setups.iter().enumerate().all(|(i, s)| s.index == i));
    }
}

#[test]
fn singleton_sweep() {
    let cfg = ExperimentConfig::pedestrian_vehicle();
    let sweep = SweepConfig {
        pedestrian_speeds: vec![1.5],
        vehicle_speeds: vec![6.0],
        gamma_grid: vec![0.5],
        seed: 1,
    };
    let s = expand_sweep(&cfg.scenario().unwrap(), &sweep).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].speeds, [1.5, 6.0]);
    assert_eq!(s[0].gammas, [0.5, 0.5]);
    assert_eq!(s[0].seed, derive_seed(1, 0));
}

#[test]
fn sweep_errors() {
    let cfg = ExperimentConfig::vehicle_vehicle();
    let sc = cfg.scenario().unwrap();
    let empty = SweepConfig {
        gamma_grid: vec![],
        ..SweepConfig::default()
    };
    assert!(matches!(expand_sweep(&sc, &empty), Err(Error::EmptySweep)));
    let fast = SweepConfig {
        vehicle_speeds: vec![13.0],
        ..SweepConfig::default()
    };
    assert!(matches!(expand_sweep(&sc, &fast), Err(Error::Range { .. })));
    let slow = SweepConfig {
        pedestrian_speeds: vec![1.0],
        ..SweepConfig::default()
    };
    assert!(matches!(expand_sweep(&sc, &slow), Err(Error::Range { .. })));
}

#[test]
fn document_errors() {
    let base = ExperimentConfig::pedestrian_vehicle()
        .to_toml_string()
        .unwrap();
    // both agents holding right of way
    let two = base.replace("row_holder = false", "row_holder = true");
    assert!(matches!(
        ExperimentConfig::from_toml_str(&two),
        Err(Error::Validation(_))
    ));
    let none = base.replace("row_holder = true", "row_holder = false");
    assert!(matches!(
        ExperimentConfig::from_toml_str(&none),
        Err(Error::Validation(_))
    ));
    let mut cfg = ExperimentConfig::pedestrian_vehicle();
    cfg.agents[0].path.truncate(1);
    let one_point = cfg.to_toml_string().unwrap();
    match ExperimentConfig::from_toml_str(&one_point) {
        Err(Error::Parse { field, .. }) => assert!(field.contains("path")),
        other => panic!("expected parse error, got {other:?}"),
    }
    let unknown = format!("colour = \"red\"\n{base}");
    assert!(matches!(
        ExperimentConfig::from_toml_str(&unknown),
        Err(Error::Parse { .. })
    ));
    let nested = base.replacen("[game]", "[game]\nhorizon_km = 3", 1);
    assert!(ExperimentConfig::from_toml_str(&nested).is_err());
}

#[test]
fn override_errors() {
    let cfg = ExperimentConfig::vehicle_vehicle();
    match cfg.clone().with_overrides(&["game.epsilonn=0.2".into()]) {
        Err(Error::UnknownKey(k)) => assert_eq!(k, "game.epsilonn"),
        other => panic!("{other:?}"),
    }
    assert!(cfg
        .clone()
        .with_overrides(&["game.delta_t_p=0.0".into()])
        .is_err());
    assert!(cfg.clone().with_overrides(&["no_equals".into()]).is_err());
    let changed = cfg
        .clone()
        .with_overrides(&["sweep.seed=7".into()])
        .unwrap();
    assert_ne!(changed.fingerprint(), cfg.fingerprint());
}

proptest! {
    #[test]
    fn sweep_length_and_ranges(
        p in prop::collection::vec(1.3f64..=1.8, 1..4),
        v in prop::collection::vec(1.0f64..=12.0, 1..4),
        g in prop::collection::vec(-1.0f64..=1.0, 1..4),
        seed in any::<u64>(),
    ) {
        let sweep = SweepConfig { pedestrian_speeds: p.clone(), vehicle_speeds: v.clone(), gamma_grid: g.clone(), seed };
        for cfg in [ExperimentConfig::pedestrian_vehicle(), ExperimentConfig::vehicle_vehicle()] {
            let sc = cfg.scenario().unwrap();
            let a = expand_sweep(&sc, &sweep).unwrap();
            let n1 = if sc.agents[0].kind == rowgame::AgentKind::Pedestrian { p.len() } else { v.len() };
            let n2 = if sc.agents[1].kind == rowgame::AgentKind::Pedestrian { p.len() } else { v.len() };
            prop_assert_eq!(a.len(), n1 * n2 * g.len() * g.len());
            prop_assert_eq!(&a, &expand_sweep(&sc, &sweep).unwrap());
            for s in &a {
                for i in 0..2 {
                    let (lo, hi) = sc.agents[i].kind.sweep_range();
                    prop_assert!((lo..=hi).contains(&s.speeds[i]));
                    prop_assert!(g.contains(&s.gammas[i]));
                }
                prop_assert_eq!(s.seed, derive_seed(seed, s.index as u64));
            }
        }
    }
}
