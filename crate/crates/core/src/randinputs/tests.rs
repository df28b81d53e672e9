use super::*;
use crate::casedata::{parse_case, tests::TWO_BUS};

fn load(id: &str, bus: i64, mu: f64, pf: Option<f64>) -> InputChannel {
    InputChannel {
        id: id.into(),
        kind: ChannelKind::Load {
            bus,
            power_factor: pf,
        },
        marginal: Marginal::Normal {
            mu,
            sigma: 0.05 * mu,
        },
    }
}

fn wind(id: &str, bus: i64) -> InputChannel {
    InputChannel {
        id: id.into(),
        kind: ChannelKind::Wind {
            bus,
            turbine: WindTurbine {
                v_in: 4.0,
                v_rated: 15.0,
                v_out: 25.0,
                rated_mw: 180.0,
            },
            power_factor: 1.0,
        },
        marginal: Marginal::Weibull { k: 2.0, c: 8.0 },
    }
}

#[test]
fn load_power_factor_sets_reactive_load() {
    let case = parse_case(TWO_BUS).unwrap();
    let spec = RandomInputSpec::independent(vec![load("l2", 2, 100.0, Some(0.9))]).unwrap();
    let inj = apply_to_case(&case, &spec, &[100.0]).unwrap();
    assert!((inj.p_net[1] + 100.0).abs() < 1e-12);
    assert!((inj.q_net[1] + 48.432210483785).abs() < 1e-9);
}

#[test]
fn load_without_power_factor_keeps_base_ratio() {
    let case = parse_case(TWO_BUS).unwrap();
    let spec = RandomInputSpec::independent(vec![load("l2", 2, 50.0, None)]).unwrap();
    let inj = apply_to_case(&case, &spec, &[75.0]).unwrap();
    assert!((inj.p_net[1] + 75.0).abs() < 1e-12);
    assert!((inj.q_net[1] + 30.0).abs() < 1e-12);
}

#[test]
fn mean_point_reproduces_base_case() {
    let case = parse_case(TWO_BUS).unwrap();
    let spec = RandomInputSpec::independent(vec![load("l2", 2, 50.0, None)]).unwrap();
    let inj = apply_to_case(&case, &spec, &spec.mean_point()).unwrap();
    assert_eq!(inj, crate::powerflow::InjectionSet::from_case(&case));
}

#[test]
fn calm_wind_leaves_pure_load() {
    let case = parse_case(TWO_BUS).unwrap();
    let spec = RandomInputSpec::independent(vec![wind("w2", 2)]).unwrap();
    let inj = apply_to_case(&case, &spec, &[3.0]).unwrap();
    assert_eq!(inj, crate::powerflow::InjectionSet::from_case(&case));
    let inj = apply_to_case(&case, &spec, &[9.5]).unwrap();
    assert!((inj.p_net[1] - (90.0 - 50.0)).abs() < 1e-12);
}

#[test]
fn spec_validation() {
    let two = vec![load("a", 2, 10.0, None), load("a", 1, 10.0, None)];
    assert!(matches!(
        RandomInputSpec::independent(two),
        Err(InputError::DuplicateChannel(_))
    ));
    let chans = vec![load("a", 2, 10.0, None), load("b", 1, 10.0, None)];
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
    assert!(matches!(
        RandomInputSpec::new(chans.clone(), asym),
        Err(InputError::BadCorrelation(_))
    ));
    let case = parse_case(TWO_BUS).unwrap();
    let stray = RandomInputSpec::independent(vec![load("x", 9, 10.0, None)]).unwrap();
    assert!(matches!(
        apply_to_case(&case, &stray, &[10.0]),
        Err(InputError::UnknownBus { bus: 9, .. })
    ));
    let mut bad = wind("w", 2);
    bad.kind = ChannelKind::Wind {
        bus: 2,
        turbine: WindTurbine {
            v_in: 10.0,
            v_rated: 5.0,
            v_out: 25.0,
            rated_mw: 1.0,
        },
        power_factor: 1.0,
    };
    assert!(matches!(bad.validate(), Err(InputError::InvalidChannel { .. })));
}

const STUDY_TOML: &str = r#"
[[channels]]
id = "w1"
kind = "wind"
bus = 1
v_in = 4.0
v_rated = 15.0
v_out = 25.0
rated_mw = 180
marginal = { dist = "weibull", k = 9.0, c = 2.15 }

[[channels]]
id = "w2"
kind = "wind"
bus = 2
v_in = 4.0
v_rated = 15.0
v_out = 25.0
rated_mw = 180
marginal = { dist = "weibull", k = 9.0, c = 2.15 }

[all_loads]
sigma_rel = 0.05

[correlation]
wind = 0.5053
load = 0.4
"#;

#[test]
fn toml_config_resolves() {
    let case = parse_case(TWO_BUS).unwrap();
    let cfg = UncertaintyConfig::parse(STUDY_TOML).unwrap();
    let spec = cfg.resolve(&case).unwrap();
    assert_eq!(spec.dim(), 3);
    assert_eq!(spec.channels[2].id, "load2");
    assert_eq!(spec.channels[2].marginal, Marginal::Normal { mu: 50.0, sigma: 2.5 });
    assert_eq!(spec.rho[(0, 1)], 0.5053);
    assert_eq!(spec.rho[(0, 2)], 0.0);

    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(UncertaintyConfig::parse(&json).unwrap(), cfg);
}

#[test]
fn explicit_matrix_must_match_channels() {
    let case = parse_case(TWO_BUS).unwrap();
    let mut cfg = UncertaintyConfig::parse(STUDY_TOML).unwrap();
    cfg.correlation = CorrelationConfig::Matrix {
        matrix: vec![vec![1.0, 0.2], vec![0.2, 1.0]],
    };
    assert!(matches!(cfg.resolve(&case), Err(InputError::BadCorrelation(_))));
}

#[test]
fn weibull_swap() {
    let mut cfg = UncertaintyConfig::parse(STUDY_TOML).unwrap();
    cfg.swap_weibull();
    assert_eq!(cfg.channels[0].marginal, Marginal::Weibull { k: 2.15, c: 9.0 });
}

#[test]
fn identity_normal_channels_are_affine() {
    let spec = RandomInputSpec::independent(vec![
        load("a", 1, 10.0, None),
        load("b", 2, 20.0, None),
    ])
    .unwrap();
    let model = build_nataf(&spec).unwrap();
    assert_eq!(model.rho_z, DMatrix::identity(2, 2));
    let xi = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 2.0, 0.0]);
    let u = to_physical(&xi, &spec, &model);
    for r in 0..2 {
        assert!((u[(r, 0)] - (10.0 + 0.5 * xi[(r, 0)])).abs() < 1e-12);
        assert!((u[(r, 1)] - (20.0 + 1.0 * xi[(r, 1)])).abs() < 1e-12);
    }
}

#[test]
fn gaussian_groups_keep_target_correlation() {
    let chans = vec![load("a", 1, 10.0, None), load("b", 2, 20.0, None)];
    let rho = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
    let spec = RandomInputSpec::new(chans, rho).unwrap();
    let model = build_nataf(&spec).unwrap();
    assert_eq!(model.rho_z[(0, 1)], 0.4);
    let l = &model.chol_l;
    assert!((l * l.transpose() - &model.rho_z).abs().max() < 1e-10);
}
