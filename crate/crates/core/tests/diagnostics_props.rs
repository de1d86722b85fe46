use polarsim_core::diagnostics::{
    a_decay_check, boundary_inflow_check, boundary_inflow_check_3, dulac_check, dulac_divergence, dulac_divergence_fd,
    lyapunov_eta, lyapunov_trace_4group, lyapunov_trace_baseline, omega_limit_check, LyapunovKind,
};
use polarsim_core::dynamics::{integrate, FnField, IntegratorConfig, VectorField};
use polarsim_core::model::{
    project_to_simplex, proxy_decompose, BaselineParams, FourGroupParams, ModelParams, SimplexPoint, SimplexState3,
    SimplexState4, SymmetricParams,
};
use polarsim_core::shock::{run_shock_sequence, ShockEvent};
use polarsim_core::Error;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }
}

fn rate() -> impl Strategy<Value = f64> {
    0.01f64..1.0
}

fn baseline() -> impl Strategy<Value = BaselineParams> {
    (rate(), rate(), rate(), rate(), rate(), rate())
        .prop_map(|(a, b, c, d, e, f)| BaselineParams::new(a, b, c, d, e, f).unwrap())
}

fn interior() -> impl Strategy<Value = SimplexState3> {
    (0.0f64..1.0, 0.0f64..1.0)
        .prop_map(|(a, b)| {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            SimplexState3::raw(lo, hi - lo)
        })
        .prop_filter("interior", |s| s.l() > 0.02 && s.r() > 0.02 && s.c() > 0.02)
}

fn asym_left() -> BaselineParams {
    BaselineParams::new(0.15, 0.20, 0.30, 0.35, 0.08, 0.12).unwrap()
}

fn grid_points() -> Vec<SimplexState3> {
    let n = 60;
    let mut out = Vec::new();
    for i in 1..n {
        for j in 1..(n - i) {
            out.push(SimplexState3::raw(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    out
}

#[test]
fn mutated_decay_sign_breaks_dulac() {
    let p = asym_left();
    let mutant = |y: &[f64; 2]| {
        let f = p.eval(y);
        [f[0] + 2.0 * p.mu_l() * y[0], f[1]]
    };
    let honest = dulac_check("dulac", &grid_points(), |s| {
        Ok(dulac_divergence_fd(|y| p.eval(y), s, 1e-6))
    })
    .unwrap();
    assert!(honest.pass);
    let broken = dulac_check("dulac_mutant", &grid_points(), |s| {
        Ok(dulac_divergence_fd(mutant, s, 1e-6))
    })
    .unwrap();
    assert!(!broken.pass && broken.worst > 0.0);
    let w = broken.witness.unwrap();
    assert_eq!(w.point.len(), 2);
}

#[test]
fn mutated_reactive_sign_leaves_the_simplex() {
    let p = asym_left();
    let mutant = FnField::<SimplexState3, _>::new(move |y: &[f64; 2]| {
        let f = p.eval(y);
        let c = 1.0 - y[0] - y[1];
        [f[0] - 2.0 * p.gamma_rl() * y[1] * c, f[1]]
    });
    let report = boundary_inflow_check_3("mutant", |y| mutant.eval(y), 100);
    assert!(!report.pass);
    let cfg = IntegratorConfig {
        clamp_to_simplex: false,
        ..IntegratorConfig::default()
    }
    .with_t_end(5.0);
    let tr = integrate(&mutant, SimplexState3::raw(0.0, 0.5), &cfg).unwrap();
    assert!(tr.final_state().l() < -1e-9);
    // with clamping on the drift is reported instead of hidden
    let err = integrate(&mutant, SimplexState3::raw(0.0, 0.5), &IntegratorConfig::default());
    assert!(matches!(err, Err(Error::SimplexViolation { .. })));
}

#[test]
fn lyapunov_functions_on_caption_parameters() {
    let cfg = IntegratorConfig::default().with_t_end(100.0);
    let tr = integrate(&asym_left(), SimplexState3::raw(0.3, 0.4), &cfg).unwrap();
    assert!(lyapunov_trace_baseline(&tr).unwrap().pass);

    let q = FourGroupParams::new(asym_left(), 0.70, 0.55, 0.12).unwrap();
    let (eta, _) = lyapunov_eta(&q);
    assert!(eta > 0.0);
    let shocks = [ShockEvent::impulse(5.0, 0.35).unwrap()];
    let (tr, _) = run_shock_sequence(&q, SimplexState4::raw(0.05, 0.05, 0.0), &shocks, &cfg).unwrap();
    let r = lyapunov_trace_4group(LyapunovKind::Subcritical4Group, &tr).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(a_decay_check(&tr).pass);
    // the symmetric function needs symmetric parameters
    assert!(matches!(
        lyapunov_trace_4group(LyapunovKind::Symmetric4Group, &tr),
        Err(Error::RegimeMismatch(_))
    ));

    let sym = SymmetricParams::new(0.2, 0.1, 0.4)
        .unwrap()
        .with_disengagement(0.7, 0.1)
        .unwrap()
        .four_group()
        .unwrap();
    let shocks = [ShockEvent::impulse(5.0, 0.55).unwrap()];
    let (tr, _) = run_shock_sequence(&sym, SimplexState4::raw(0.01, 0.01, 0.0), &shocks, &cfg).unwrap();
    assert!(lyapunov_trace_4group(LyapunovKind::Symmetric4Group, &tr).unwrap().pass);
    // a structural shock past mu leaves the regime
    let shocks = [ShockEvent::impulse(5.0, 0.55).unwrap().with_dbeta(0.15).unwrap()];
    let (tr, _) = run_shock_sequence(&sym, SimplexState4::raw(0.01, 0.01, 0.0), &shocks, &cfg).unwrap();
    assert!(lyapunov_trace_4group(LyapunovKind::Symmetric4Group, &tr).is_err());
}

#[test]
fn omega_limit_of_supercritical_caption() {
    let p = BaselineParams::new(0.40, 0.25, 0.28, 0.32, 0.15, 0.08).unwrap();
    let cfg = IntegratorConfig::default().with_t_end(600.0).with_sample_interval(0.5);
    let tr = integrate(&p, SimplexState3::raw(0.02, 0.6), &cfg).unwrap();
    let om = omega_limit_check(&tr, 1e-6, 1e-3).unwrap();
    assert!(om.pass, "{om:?}");
}

#[test]
fn proxy_rows_sum_to_one() {
    let row = proxy_decompose(0.2964, 0.830).unwrap();
    assert!((row.v - 0.246).abs() < 5e-4 && (row.c - 0.584).abs() < 5e-4 && (row.a - 0.170).abs() < 1e-12);
    assert!(matches!(
        proxy_decompose(1.2, 0.8),
        Err(Error::OutOfRange {
            name: "radical_vote_share",
            ..
        })
    ));
}

proptest! {
    #![proptest_config(config(1_000))]

    #[test]
    fn dulac_negative_and_matches_oracle(p in baseline(), s in interior()) {
        let v = dulac_divergence(&p, &s).unwrap();
        prop_assert!(v < 0.0);
        let fd = dulac_divergence_fd(|y| p.eval(y), &s, 1e-5);
        prop_assert!((fd - v).abs() < 1e-6 * v.abs());
    }

    #[test]
    fn inflow_holds_for_any_parameters(p in baseline(), dl in rate(), dr in rate(), rho in rate()) {
        prop_assert!(boundary_inflow_check(&ModelParams::Baseline(p), 50).pass);
        let q = FourGroupParams::new(p, dl, dr, rho).unwrap();
        prop_assert!(boundary_inflow_check(&ModelParams::FourGroup(q), 50).pass);
    }

    #[test]
    fn projection_is_idempotent(l in -1e-10f64..1.0, r in -1e-10f64..1.0, a in -1e-10f64..1.0) {
        let s = SimplexState4::raw(l, r, a);
        match project_to_simplex(s, 1e-9) {
            Ok(p) => {
                prop_assert!(p.coords().iter().all(|&x| x >= 0.0));
                prop_assert!(p.coords().iter().sum::<f64>() <= 1.0);
                prop_assert_eq!(project_to_simplex(p, 1e-9).unwrap(), p);
            }
            Err(_) => prop_assert!(l + r + a > 1.0 + 1e-9),
        }
    }

    #[test]
    fn proxy_decomposition_sums_to_one(share in 0.0f64..1.0, turnout in 0.0f64..1.0) {
        let row = proxy_decompose(share, turnout).unwrap();
        prop_assert!((row.total() - 1.0).abs() < 1e-15);
        prop_assert!(row.v >= 0.0 && row.a >= 0.0 && row.c >= -1e-15);
    }
}
