use polarsim_core::dynamics::IntegratorConfig;
use polarsim_core::model::{BaselineParams, FourGroupParams, SimplexState4, SymmetricParams};
use polarsim_core::shock::{
    apply_impulse, kstar, longrun_floor, run_shock_sequence, settle_floors, window_bound_asym, window_bound_sym,
    AsymWindow, Regime, ShockEvent,
};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }
}

fn regimes_params() -> FourGroupParams {
    SymmetricParams::new(0.2, 0.1, 0.4)
        .unwrap()
        .with_disengagement(0.7, 0.1)
        .unwrap()
        .four_group()
        .unwrap()
}

fn regimes_cfg() -> IntegratorConfig {
    IntegratorConfig::default().with_t_end(300.0)
}

const SEED: SimplexState4 = SimplexState4::raw(0.01, 0.01, 0.0);

#[test]
fn small_shock_recovers_without_surge() {
    let shock = ShockEvent::impulse(5.0, 0.10).unwrap();
    let (tr, rep) = run_shock_sequence(&regimes_params(), SEED, &[shock], &regimes_cfg()).unwrap();
    let r = &rep.records[0];
    assert!(!r.surge);
    assert_eq!(r.floor, 1.0);
    assert!(tr.final_state().c() > 1.0 - 1e-3);
}

#[test]
fn large_state_shock_surges_then_recovers() {
    let shock = ShockEvent::impulse(5.0, 0.55).unwrap();
    let (tr, rep) = run_shock_sequence(&regimes_params(), SEED, &[shock], &regimes_cfg()).unwrap();
    let r = &rep.records[0];
    assert!(r.surge);
    let t_star = 10.0 * 2.2f64.ln();
    assert!((r.window.unwrap() - t_star).abs() < 1e-12);
    assert!(r.surge_end.unwrap() <= t_star);
    assert_eq!(r.floor, 1.0);
    assert!(tr.final_state().c() > 1.0 - 1e-3);
    assert!((r.post_state.a() - 0.55 * r.pre_state.c()).abs() < 1e-15);
}

#[test]
fn structural_shock_lowers_the_floor() {
    let shock = ShockEvent::impulse(5.0, 0.55).unwrap().with_dbeta(0.15).unwrap();
    let (tr, rep) = run_shock_sequence(&regimes_params(), SEED, &[shock], &regimes_cfg()).unwrap();
    let r = &rep.records[0];
    assert_eq!(r.regime_after, Regime::Supercritical);
    assert!((r.floor - 0.40 / 0.45).abs() < 1e-12);
    assert!((tr.final_state().c() - 0.8889).abs() < 1e-3);
}

fn staircase(delta: f64, dbeta: f64) -> Vec<ShockEvent> {
    [10.0, 25.0, 40.0, 60.0]
        .into_iter()
        .map(|t| ShockEvent::impulse(t, delta).unwrap().with_dbeta(dbeta).unwrap())
        .collect()
}

#[test]
fn staircase_floors_and_settling() {
    let cfg = IntegratorConfig::default().with_t_end(200.0);
    let (_, rep) = run_shock_sequence(&regimes_params(), SEED, &staircase(0.40, 0.04), &cfg).unwrap();
    assert_eq!(rep.k_star, Some(3));
    assert_eq!(kstar(0.30, 0.40, &[0.04; 4]).unwrap(), Some(3));
    let floors = rep.floors();
    let want = [1.0, 1.0, 0.40 / 0.42, 0.40 / 0.46];
    for (f, w) in floors.iter().zip(want) {
        assert!((f - w).abs() < 1e-12, "{floors:?}");
    }
    assert!((floors[2] - 0.9524).abs() < 1e-4 && (floors[3] - 0.8696).abs() < 1e-4);
    assert!(floors[3] < floors[2]);
    let settled = settle_floors(&rep, 2000.0, &cfg).unwrap();
    for (s, f) in settled.iter().zip(&floors) {
        assert!((s - f).abs() < 1e-3, "{settled:?} vs {floors:?}");
    }
}

#[test]
fn pure_state_staircase_always_recovers() {
    let cfg = IntegratorConfig::default().with_t_end(100.0);
    let (_, rep) = run_shock_sequence(&regimes_params(), SEED, &staircase(0.40, 0.0), &cfg).unwrap();
    assert!(rep.floors().iter().all(|&f| f == 1.0));
    assert_eq!(rep.k_star, None);
}

#[test]
fn germany_floors() {
    let b1 = 0.18 + 0.069;
    let b2 = b1 + 0.0427;
    let f1 = longrun_floor(b1, 0.22, true).unwrap();
    let f2 = longrun_floor(b2, 0.22, true).unwrap();
    assert!((f1 - 0.8835).abs() < 1e-4 && (1.0 - f1 - 0.1165).abs() < 1e-4);
    assert!((f2 - 0.7542).abs() < 1e-4 && (1.0 - f2 - 0.2458).abs() < 1e-4);
    assert_eq!(kstar(0.18, 0.22, &[0.069, 0.0427]).unwrap(), Some(1));
}

#[test]
fn asymmetric_window_bounds_weighted_mass() {
    let base = BaselineParams::new(0.08, 0.14, 0.30, 0.28, 0.10, 0.06).unwrap();
    let p = FourGroupParams::new(base, 0.55, 0.60, 0.1).unwrap();
    let AsymWindow::Bound { delta_q, t_q, q, .. } = window_bound_asym(0.25, &p).unwrap() else {
        panic!("expected a finite window");
    };
    assert!((delta_q - 0.224848).abs() < 1e-6);
    assert!(t_q > 0.0 && t_q.is_finite());
    let cfg = IntegratorConfig::default().with_t_end(60.0).with_sample_interval(0.05);
    let shock = ShockEvent::impulse(5.0, 0.25).unwrap();
    let (tr, _) = run_shock_sequence(&p, SEED, &[shock], &cfg).unwrap();
    let (times, states) = tr.segment_samples(1);
    let v: Vec<f64> = states.iter().map(|s| q[0] * s.l() + q[1] * s.r()).collect();
    for i in 1..v.len() {
        if times[i - 1] >= 5.0 + t_q {
            assert!(v[i] <= v[i - 1] + 1e-12, "V grows at t = {}", times[i]);
        }
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn impulse_conserves_mass(
        l in 0.0f64..0.4, r in 0.0f64..0.4, a in 0.0f64..0.2, delta in 0.0f64..0.999,
    ) {
        let s = SimplexState4::raw(l, r, a);
        let t = apply_impulse(&s, delta).unwrap();
        prop_assert_eq!(t.l(), l);
        prop_assert_eq!(t.r(), r);
        prop_assert!((t.l() + t.r() + t.a() + t.c() - 1.0).abs() < 1e-15);
        prop_assert!((t.c() - (1.0 - delta) * s.c()).abs() < 1e-15);
    }

    #[test]
    fn window_halves_when_rho_doubles(shock in 0.26f64..0.99, rho in 0.01f64..1.0) {
        let t1 = window_bound_sym(shock, 0.3, 0.4, 0.7, rho).unwrap();
        let t2 = window_bound_sym(shock, 0.3, 0.4, 0.7, 2.0 * rho).unwrap();
        prop_assert!((t2 - 0.5 * t1).abs() < 1e-12 * t1.max(1.0));
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn floors_ignore_state_amplitudes(
        d1 in proptest::collection::vec(0.0f64..0.9, 4),
        d2 in proptest::collection::vec(0.0f64..0.9, 4),
        dbeta in proptest::collection::vec(0.0f64..0.1, 4),
    ) {
        let cfg = IntegratorConfig::default().with_t_end(80.0).with_sample_interval(1.0);
        let seq = |d: &[f64]| -> Vec<ShockEvent> {
            [10.0, 25.0, 40.0, 60.0]
                .iter()
                .zip(d)
                .zip(&dbeta)
                .map(|((&t, &d), &b)| ShockEvent::impulse(t, d).unwrap().with_dbeta(b).unwrap())
                .collect()
        };
        let (_, a) = run_shock_sequence(&regimes_params(), SEED, &seq(&d1), &cfg).unwrap();
        let (_, b) = run_shock_sequence(&regimes_params(), SEED, &seq(&d2), &cfg).unwrap();
        prop_assert_eq!(a.floors(), b.floors());
        prop_assert_eq!(a.k_star, b.k_star);
        // after k*, every positive structural increment lowers the floor
        if let Some(k) = a.k_star {
            let f = a.floors();
            for i in k..f.len() {
                prop_assert_eq!(f[i] < f[i - 1], dbeta[i] > 0.0);
            }
        }
    }
}
