use super::*;
use crate::casedata::{parse_case, tests::TWO_BUS};

const THREE_BUS: &str = "\
function mpc = three_bus
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0   0  0 0 1 1 0 345 1 1.1 0.9;
    2 2 0   0  0 0 1 1 0 345 1 1.1 0.9;
    3 1 150 60 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.gen = [
    1 0  0 900 -900 1.00 100 1 900 0;
    2 80 0 QMAX QMIN 1.04 100 1 900 0;
];
mpc.branch = [
    1 2 0.01 0.10 0.02 0 0 0 0 0 1 -360 360;
    1 3 0.01 0.10 0.02 0 0 0 0 0 1 -360 360;
    2 3 0.01 0.10 0.02 0 0 0 0 0 1 -360 360;
];
";

fn three_bus(qmin: f64, qmax: f64) -> NetworkCase {
    let text = THREE_BUS
        .replace("QMAX", &qmax.to_string())
        .replace("QMIN", &qmin.to_string());
    parse_case(&text).unwrap()
}

fn solve_case(case: &NetworkCase) -> Result<PowerFlowSolution, PowerFlowError> {
    solve(case, &InjectionSet::from_case(case), &SolveOptions::default())
}

#[test]
fn zero_load_stays_flat() {
    let case = parse_case(&TWO_BUS.replace("2 1 50 20", "2 1 0 0")).unwrap();
    let sol = solve_case(&case).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!((sol.vm[1] - 1.0).abs() < 1e-12);
    assert!(sol.va[1].abs() < 1e-12);
}

#[test]
fn two_bus_matches_closed_form() {
    // Lossless line x = 0.1 feeding 0.5 + j0.2 p.u.: |V2|² solves
    // u² − 0.96u + 0.0029 = 0 on the high-voltage branch.
    let case = parse_case(TWO_BUS).unwrap();
    let sol = solve_case(&case).unwrap();
    let u = (0.96 + 0.91f64.sqrt()) / 2.0;
    let v2 = u.sqrt();
    assert!((sol.vm[1] - v2).abs() < 1e-9, "{}", sol.vm[1]);
    assert!((sol.va[1] - (-0.05 / v2).asin()).abs() < 1e-9);
    assert!(sol.iterations <= 6);
}

#[test]
fn overloaded_two_bus_does_not_converge() {
    let case = parse_case(&TWO_BUS.replace("2 1 50 20", "2 1 1000 20")).unwrap();
    match solve_case(&case) {
        Err(PowerFlowError::NonConvergence { last, .. }) => assert!(!last.converged),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn injection_shape_is_checked() {
    let case = parse_case(TWO_BUS).unwrap();
    let mut inj = InjectionSet::from_case(&case);
    inj.p_net.pop();
    let err = solve(&case, &inj, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, PowerFlowError::InjectionShape { expected: 2, got: 1 }));
}

#[test]
fn power_balance_and_residual() {
    let case = three_bus(-500.0, 500.0);
    let model = PowerFlowModel::new(&case);
    let inj = InjectionSet::from_case(&case);
    let sol = model.solve(&inj, &SolveOptions::default()).unwrap();
    assert!(model.mismatch(&inj, &sol) < 1e-8);
    // Slack covers load minus the PV unit's 80 MW plus positive losses.
    let s = newton::bus_injections(model.ybus(), &sol.vm, &sol.va);
    let total_p: f64 = s.iter().map(|x| x.re).sum();
    assert!(total_p > 0.0 && total_p < 0.05);
    assert!((s[0].re * 100.0 - (150.0 - 80.0) - total_p * 100.0).abs() < 1e-6);
}

#[test]
fn reactive_limit_switches_bus_to_pq() {
    let free = solve_case(&three_bus(-500.0, 500.0)).unwrap();
    let q_free = free.qg[1];
    assert!(q_free > 20.0, "{q_free}");

    let case = three_bus(-500.0, 10.0);
    let model = PowerFlowModel::new(&case);
    let inj = InjectionSet::from_case(&case);
    let sol = model.solve(&inj, &SolveOptions::default()).unwrap();
    assert_eq!(sol.pv_to_pq_switches, vec![2]);
    assert_eq!(sol.kinds[1], BusKind::PQ);
    assert!((sol.qg[1] - 10.0).abs() < 1e-9);
    assert!(sol.vm[1] < 1.04);
    assert!(model.mismatch(&inj, &sol) < 1e-8);

    let off = SolveOptions {
        enforce_q_limits: false,
        ..SolveOptions::default()
    };
    let unenforced = model.solve(&inj, &off).unwrap();
    assert!((unenforced.qg[1] - q_free).abs() < 1e-6);
}

#[test]
fn limit_exactly_at_output_keeps_pv() {
    let q = solve_case(&three_bus(-500.0, 500.0)).unwrap().qg[1];
    let sol = solve_case(&three_bus(q, q)).unwrap();
    assert!(sol.pv_to_pq_switches.is_empty());
    assert_eq!(sol.kinds[1], BusKind::PV);
}

#[test]
fn lower_limit_switch() {
    let q = solve_case(&three_bus(-500.0, 500.0)).unwrap().qg[1];
    let sol = solve_case(&three_bus(q + 5.0, 500.0)).unwrap();
    assert_eq!(sol.pv_to_pq_switches, vec![2]);
    assert!((sol.qg[1] - (q + 5.0)).abs() < 1e-9);
    assert!(sol.vm[1] > 1.04);
}

#[test]
fn lossless_branch_carries_equal_active_power() {
    let case = parse_case(TWO_BUS).unwrap();
    let model = PowerFlowModel::new(&case);
    let sol = model.solve(&InjectionSet::from_case(&case), &SolveOptions::default()).unwrap();
    let s = newton::bus_injections(model.ybus(), &sol.vm, &sol.va);
    assert!((s[0].re + s[1].re).abs() < 1e-9);
    assert!((s[0].re - 0.5).abs() < 1e-8);
}

#[test]
fn responses_on_three_bus() {
    let case = three_bus(-500.0, 500.0);
    let model = PowerFlowModel::new(&case);
    let sol = model.solve(&InjectionSet::from_case(&case), &SolveOptions::default()).unwrap();
    let ids: Vec<ResponseId> = ["VM:3", "QG:2", "SF:1-3", "SF:3-1", "SF:1-3:to"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let spec = ResponseSpec::new(&model, &ids).unwrap();
    let r = extract_responses(&model, &spec, &sol);
    assert_eq!(r[0], sol.vm[2]);
    assert!((r[1] - sol.qg[1] / 100.0).abs() < 1e-15);
    assert_eq!(r[3], r[4]);
    assert!(r[2] > r[3], "from-end flow includes losses");
    let bad: ResponseId = "SF:2-9".parse().unwrap();
    assert!(ResponseSpec::new(&model, &[bad]).is_err());
}
