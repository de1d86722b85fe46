//! Seeded randomised suites driving [`crate::diagnostics`] over many
//! parameter draws.
//!
//! Every draw gets its own ChaCha8 stream derived from `(seed, suite, draw)`,
//! so results do not depend on the rayon schedule or on how many draws other
//! suites take.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{
    a_decay_check, boundary_inflow_check, dulac_check, dulac_divergence, dulac_divergence_fd, lyapunov_trace_4group,
    lyapunov_trace_baseline, omega_limit_check, DiagnosticReport, LyapunovKind, Witness, DULAC_MARGIN,
};
use crate::dynamics::{
    integrate, integrate_final, jacobian_4group, jacobian_baseline, jacobian_fd, IntegratorConfig, VectorField,
};
use crate::equilibria::baseline_attractor;
use crate::error::Result;
use crate::model::{
    BaselineParams, FourGroupParams, ModelParams, SimplexPoint, SimplexState3, SimplexState4, SymmetricParams,
};
use crate::shock::{run_shock_sequence, ShockEvent};
use crate::spectral::{delta_c_sym, r_rad, ShockThreshold};

/// Knobs for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Multiplies every draw count; 10 for the long run.
    pub scale: usize,
    /// Replaces the per-suite base draw count when set.
    pub draws: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 20_240_521,
            scale: 1,
            draws: None,
        }
    }
}

impl VerifyOptions {
    fn count(&self, base: usize) -> usize {
        self.draws.unwrap_or(base) * self.scale.max(1)
    }
}

const RATE_RANGE: (f64, f64) = (0.01, 1.0);

fn draw_rng(seed: u64, suite: u64, draw: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((suite << 40) | draw as u64);
    rng
}

fn rate(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(RATE_RANGE.0..RATE_RANGE.1)
}

pub fn random_baseline(rng: &mut ChaCha8Rng) -> BaselineParams {
    let v: [f64; 6] = std::array::from_fn(|_| rate(rng));
    BaselineParams::new(v[0], v[1], v[2], v[3], v[4], v[5]).expect("positive rates")
}

pub fn random_four_group(rng: &mut ChaCha8Rng) -> FourGroupParams {
    let base = random_baseline(rng);
    FourGroupParams::new(base, rate(rng), rate(rng), rate(rng)).expect("positive rates")
}

/// Baseline draw with `R_rad` on the requested side of 1.
pub fn random_baseline_in(rng: &mut ChaCha8Rng, subcritical: bool) -> BaselineParams {
    loop {
        let p = random_baseline(rng);
        if (r_rad(&p) < 1.0) == subcritical {
            return p;
        }
    }
}

/// Uniform point of the closed 2-simplex.
pub fn random_state3(rng: &mut ChaCha8Rng) -> SimplexState3 {
    let (a, b): (f64, f64) = (rng.random(), rng.random());
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    SimplexState3::raw(lo, hi - lo)
}

/// Uniform point of the closed 3-simplex.
pub fn random_state4(rng: &mut ChaCha8Rng) -> SimplexState4 {
    let mut u: [f64; 3] = std::array::from_fn(|_| rng.random());
    u.sort_by(f64::total_cmp);
    SimplexState4::raw(u[0], u[1] - u[0], u[2] - u[1])
}

fn interior_point(rng: &mut ChaCha8Rng, margin: f64) -> SimplexState3 {
    loop {
        let s = random_state3(rng);
        if s.l() >= margin && s.r() >= margin && s.c() >= margin {
            return s;
        }
    }
}

fn combine(name: &str, reports: Vec<DiagnosticReport>, higher_is_worse: bool) -> DiagnosticReport {
    DiagnosticReport::combine(name, reports, higher_is_worse)
}

fn summary(
    name: &str,
    criterion: &str,
    samples: usize,
    worst: f64,
    pass: bool,
    witness: Option<Witness>,
) -> DiagnosticReport {
    DiagnosticReport {
        name: name.into(),
        samples,
        worst,
        criterion: criterion.into(),
        pass,
        witness: if pass { None } else { witness },
    }
}

/// Dulac divergence strictly negative at `points` interior points per draw.
pub fn dulac_suite(opts: &VerifyOptions, points: usize) -> Result<DiagnosticReport> {
    let reports = (0..opts.count(100))
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 1, i);
            let p = random_baseline(&mut rng);
            let pts: Vec<_> = (0..points).map(|_| interior_point(&mut rng, DULAC_MARGIN)).collect();
            dulac_check("dulac", &pts, |s| dulac_divergence(&p, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine("dulac", reports, true))
}

/// Closed-form divergence against central differences of `B F`.
pub fn dulac_oracle_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let per_draw = (0..opts.count(100))
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 2, i);
            let p = random_baseline(&mut rng);
            let mut worst = (0.0f64, None);
            for _ in 0..100 {
                let s = interior_point(&mut rng, 0.05);
                let exact = dulac_divergence(&p, &s)?;
                let fd = dulac_divergence_fd(|y| p.eval(y), &s, 1e-5);
                let rel = (fd - exact).abs() / exact.abs();
                if rel > worst.0 {
                    worst = (rel, Some(s));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_draw.len() * 100;
    let (worst, at) = per_draw
        .into_iter()
        .fold((0.0, None), |a, b| if b.0 > a.0 { b } else { a });
    Ok(summary(
        "dulac_fd_oracle",
        "max relative difference < 1e-6",
        n,
        worst,
        worst < 1e-6,
        at.map(|s| Witness {
            point: s.coords().to_vec(),
            time: None,
            detail: "closed form and finite differences disagree".into(),
        }),
    ))
}

fn violation(coords: &[f64]) -> f64 {
    let neg = coords.iter().fold(0.0f64, |m, &x| m.max(-x));
    let over = coords.iter().sum::<f64>() - 1.0;
    neg.max(over)
}

/// Unclamped trajectories stay within `1e-9` of the simplex.
pub fn invariance_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let cfg = IntegratorConfig {
        clamp_to_simplex: false,
        ..IntegratorConfig::default()
    }
    .with_t_end(100.0)
    .with_sample_interval(0.5);
    let per_draw = (0..opts.count(1000))
        .into_par_iter()
        .map(|i| -> Result<(f64, Vec<f64>, usize)> {
            let mut rng = draw_rng(opts.seed, 3, i);
            let mut worst = (f64::NEG_INFINITY, Vec::new(), 0);
            if i % 2 == 0 {
                let p = random_baseline(&mut rng);
                let tr = integrate(&p, random_state3(&mut rng), &cfg)?;
                for s in &tr.states {
                    let v = violation(s.coords());
                    if v > worst.0 {
                        worst = (v, s.coords().to_vec(), 0);
                    }
                }
                worst.2 = tr.len();
            } else {
                let p = random_four_group(&mut rng);
                let tr = integrate(&p, random_state4(&mut rng), &cfg)?;
                for s in &tr.states {
                    let v = violation(s.coords());
                    if v > worst.0 {
                        worst = (v, s.coords().to_vec(), 0);
                    }
                }
                worst.2 = tr.len();
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = per_draw.iter().map(|w| w.2).sum();
    let (worst, at, _) = per_draw
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new(), 0), |a, b| if b.0 > a.0 { b } else { a });
    Ok(summary(
        "forward_invariance",
        "max distance outside the simplex <= 1e-9",
        samples,
        worst,
        worst <= 1e-9,
        Some(Witness {
            point: at,
            time: None,
            detail: "state left the simplex".into(),
        }),
    ))
}

fn matrix_rel_error<const N: usize>(exact: &[[f64; N]; N], fd: &[[f64; N]; N]) -> f64 {
    let scale = exact
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut err = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            err = err.max((exact[i][j] - fd[i][j]).abs());
        }
    }
    err / scale
}

/// Analytic Jacobians of both models against central differences. The error
/// is entrywise, relative to the largest entry of the matrix.
pub fn jacobian_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let per_draw: Vec<(f64, Vec<f64>)> = (0..opts.count(100))
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 4, i);
            let q = random_four_group(&mut rng);
            let mut worst = (0.0f64, Vec::new());
            for _ in 0..50 {
                let s = random_state3(&mut rng);
                let fd = jacobian_fd(|y| q.base().eval(y), &s.to_array(), 1e-6);
                let e = matrix_rel_error(&jacobian_baseline(q.base(), &s).0, &fd);
                if e > worst.0 {
                    worst = (e, s.coords().to_vec());
                }
                let s = random_state4(&mut rng);
                let fd = jacobian_fd(|y| q.eval(y), &s.to_array(), 1e-6);
                let e = matrix_rel_error(&jacobian_4group(&q, &s).0, &fd);
                if e > worst.0 {
                    worst = (e, s.coords().to_vec());
                }
            }
            worst
        })
        .collect();
    let samples = per_draw.len() * 100;
    let (worst, at) = per_draw
        .into_iter()
        .fold((0.0, Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
    Ok(summary(
        "jacobian_fd",
        "max relative entry error < 1e-6",
        samples,
        worst,
        worst < 1e-6,
        Some(Witness {
            point: at,
            time: None,
            detail: "Jacobian disagrees with finite differences".into(),
        }),
    ))
}

fn lyapunov_cfg() -> IntegratorConfig {
    IntegratorConfig::default().with_t_end(200.0).with_sample_interval(0.25)
}

/// The three Lyapunov functions along random trajectories in their regimes.
pub fn lyapunov_suites(opts: &VerifyOptions) -> Result<Vec<DiagnosticReport>> {
    let cfg = lyapunov_cfg();
    let n = opts.count(100);
    let baseline = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 5, i);
            let p = random_baseline_in(&mut rng, true);
            let tr = integrate(&p, random_state3(&mut rng), &cfg)?;
            lyapunov_trace_baseline(&tr)
        })
        .collect::<Result<Vec<_>>>()?;
    let four = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 6, i);
            let base = random_baseline_in(&mut rng, true);
            let q = FourGroupParams::new(base, rate(&mut rng), rate(&mut rng), rate(&mut rng))?;
            let tr = integrate(&q, random_state4(&mut rng), &cfg)?;
            lyapunov_trace_4group(LyapunovKind::Subcritical4Group, &tr)
        })
        .collect::<Result<Vec<_>>>()?;
    let sym = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 7, i);
            let q = random_symmetric(&mut rng, true)?;
            let tr = integrate(&q, random_state4(&mut rng), &cfg)?;
            lyapunov_trace_4group(LyapunovKind::Symmetric4Group, &tr)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        combine("lyapunov_subcritical_baseline", baseline, true),
        combine("lyapunov_subcritical_4group", four, true),
        combine("lyapunov_symmetric_4group", sym, true),
    ])
}

/// Symmetric four-group draw; `subcritical` forces `beta < mu`.
fn random_symmetric(rng: &mut ChaCha8Rng, subcritical: bool) -> Result<FourGroupParams> {
    loop {
        let sp = SymmetricParams::new(rate(rng), rate(rng), rate(rng))?;
        if !subcritical || sp.beta() < sp.mu() {
            return sp.with_disengagement(rate(rng), rate(rng))?.four_group();
        }
    }
}

fn random_shocks(rng: &mut ChaCha8Rng, t_end: f64, symmetric: bool) -> Result<Vec<ShockEvent>> {
    let k = rng.random_range(0..=3usize);
    let mut times: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..t_end - 1.0)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let sh = ShockEvent::impulse(t, rng.random_range(0.0..0.9))?;
            if symmetric {
                sh.with_dbeta(rng.random_range(0.0..0.3))
            } else {
                Ok(sh)
            }
        })
        .collect()
}

/// `A(t) <= A(t0) exp(-rho (t - t0))` on every segment of random shocked
/// four-group runs.
pub fn a_decay_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let cfg = IntegratorConfig::default().with_t_end(100.0).with_sample_interval(0.25);
    let reports = (0..opts.count(100))
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 8, i);
            let symmetric = i % 2 == 1;
            let p = if symmetric {
                random_symmetric(&mut rng, false)?
            } else {
                random_four_group(&mut rng)
            };
            let shocks = random_shocks(&mut rng, cfg.t_end, symmetric)?;
            let (tr, _) = run_shock_sequence(&p, random_state4(&mut rng), &shocks, &cfg)?;
            Ok(a_decay_check(&tr))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine("a_decay", reports, true))
}

/// With no radicals present, no amount of disengagement or structural
/// change creates any.
pub fn seed_invariance_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let cfg = IntegratorConfig::default().with_t_end(100.0).with_sample_interval(0.25);
    let per_draw = (0..opts.count(100))
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let mut rng = draw_rng(opts.seed, 9, i);
            let p = random_symmetric(&mut rng, false)?;
            let s0 = SimplexState4::raw(0.0, 0.0, rng.random_range(0.0..1.0));
            let shocks = random_shocks(&mut rng, cfg.t_end, true)?;
            let (tr, _) = run_shock_sequence(&p, s0, &shocks, &cfg)?;
            let worst = tr.states.iter().map(|s| s.radical()).fold(0.0, f64::max);
            Ok((worst, tr.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = per_draw.iter().map(|w| w.1).sum();
    let worst = per_draw.iter().map(|w| w.0).fold(0.0, f64::max);
    Ok(summary(
        "seed_invariance",
        "max L + R < 1e-12",
        samples,
        worst,
        worst < 1e-12,
        None,
    ))
}

/// `L = R` is preserved under symmetric parameters and symmetric shocks.
pub fn diagonal_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let cfg = IntegratorConfig::default().with_t_end(1000.0).with_sample_interval(1.0);
    let per_draw = (0..opts.count(20))
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let mut rng = draw_rng(opts.seed, 10, i);
            let p = random_symmetric(&mut rng, false)?;
            let half = rng.random_range(0.0..0.5);
            let a = rng.random_range(0.0..1.0 - 2.0 * half);
            let shocks = random_shocks(&mut rng, cfg.t_end, true)?;
            let (tr, _) = run_shock_sequence(&p, SimplexState4::raw(half, half, a), &shocks, &cfg)?;
            let worst = tr.states.iter().map(|s| (s.l() - s.r()).abs()).fold(0.0, f64::max);
            Ok((worst, tr.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = per_draw.iter().map(|w| w.1).sum();
    let worst = per_draw.iter().map(|w| w.0).fold(0.0, f64::max);
    Ok(summary(
        "diagonal_invariance",
        "max |L - R| < 1e-8",
        samples,
        worst,
        worst < 1e-8,
        None,
    ))
}

/// Baseline draw whose attractor contracts at rate at least `min_rate`,
/// together with that rate.
fn random_contracting(rng: &mut ChaCha8Rng, min_rate: f64) -> (BaselineParams, f64) {
    loop {
        let p = random_baseline(rng);
        if (r_rad(&p) - 1.0).abs() < 0.1 {
            continue;
        }
        let j = jacobian_baseline(&p, &baseline_attractor(&p));
        let rate = -j.eigenvalues()[0].re;
        if rate >= min_rate {
            return (p, rate);
        }
    }
}

fn random_seeded_state3(rng: &mut ChaCha8Rng) -> SimplexState3 {
    loop {
        let s = random_state3(rng);
        if s.radical() >= 0.01 {
            return s;
        }
    }
}

/// Fifty initial conditions per parameter draw all end at the analytic
/// attractor: the baseline has no bistability.
pub fn no_bistability_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let per_draw = (0..opts.count(10))
        .into_par_iter()
        .map(|i| -> Result<(f64, Vec<f64>)> {
            let mut rng = draw_rng(opts.seed, 11, i);
            let (p, rate) = random_contracting(&mut rng, 0.02);
            let t_end = (30.0 / rate).min(3000.0);
            let cfg = IntegratorConfig::default()
                .with_t_end(t_end)
                .with_sample_interval(t_end);
            let target = baseline_attractor(&p);
            let ics: Vec<_> = (0..50).map(|_| random_seeded_state3(&mut rng)).collect();
            let finals = ics
                .par_iter()
                .map(|s0| integrate_final(&p, *s0, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let mut worst = (0.0f64, Vec::new());
            for (s0, s) in ics.iter().zip(&finals) {
                let d = s.distance_inf(&target);
                if d > worst.0 {
                    worst = (d, s0.coords().to_vec());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = per_draw.len() * 50;
    let (worst, at) = per_draw
        .into_iter()
        .fold((0.0, Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
    Ok(summary(
        "no_bistability",
        "max distance of 50 final states to the attractor <= 1e-4",
        samples,
        worst,
        worst <= 1e-4,
        Some(Witness {
            point: at,
            time: None,
            detail: "initial condition ending away from the attractor".into(),
        }),
    ))
}

/// Inflow on every face for random baseline and four-group parameters.
pub fn boundary_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let reports: Vec<_> = (0..opts.count(100))
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, 12, i);
            let p = if i % 2 == 0 {
                ModelParams::Baseline(random_baseline(&mut rng))
            } else {
                ModelParams::FourGroup(random_four_group(&mut rng))
            };
            boundary_inflow_check(&p, 400)
        })
        .collect();
    Ok(combine("boundary_inflow", reports, false))
}

/// Trajectories settle monotonically onto the attractor with no cycling.
pub fn omega_limit_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let per_draw = (0..opts.count(20))
        .into_par_iter()
        .map(|i| -> Result<(f64, bool, Vec<f64>)> {
            let mut rng = draw_rng(opts.seed, 13, i);
            let (p, rate) = random_contracting(&mut rng, 0.02);
            let t_end = (40.0 / rate).min(4000.0);
            let cfg = IntegratorConfig::default()
                .with_t_end(t_end)
                .with_sample_interval(t_end / 2000.0);
            let s0 = random_seeded_state3(&mut rng);
            let tr = integrate(&p, s0, &cfg)?;
            let om = omega_limit_check(&tr, 1e-6, 1e-3)?;
            Ok((om.final_distance, om.pass, s0.coords().to_vec()))
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = per_draw.len();
    let pass = per_draw.iter().all(|w| w.1);
    let worst = per_draw.iter().map(|w| w.0).fold(0.0, f64::max);
    let at = per_draw.into_iter().find(|w| !w.1).map(|w| w.2);
    Ok(summary(
        "omega_limit",
        "monotone approach, final distance < 1e-6, at most 2 re-entries",
        samples,
        worst,
        pass,
        at.map(|point| Witness {
            point,
            time: None,
            detail: "trajectory failed the limit-set check".into(),
        }),
    ))
}

/// Surge after a supercritical shock ends no later than `t*` plus one
/// sample interval.
pub fn window_suite(opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let dt = 0.05;
    let per_draw = (0..opts.count(100))
        .into_par_iter()
        .map(|i| -> Result<(f64, Vec<f64>)> {
            let mut rng = draw_rng(opts.seed, 14, i);
            let (p, crit) = loop {
                let p = random_symmetric(&mut rng, true)?;
                let (beta, mu) = p.base().symmetric_beta_mu().expect("symmetric draw");
                if let Ok(ShockThreshold::Critical(c)) = delta_c_sym(beta, mu, p.delta_l()) {
                    if c < 0.85 {
                        break (p, c);
                    }
                }
            };
            let (beta, mu) = p.base().symmetric_beta_mu().expect("symmetric draw");
            let shock = rng.random_range(crit + 0.01..0.95);
            let t_star = crate::shock::window_bound_sym(shock, beta, mu, p.delta_l(), p.rho())?;
            let half = rng.random_range(1e-3..0.025);
            let cfg = IntegratorConfig::default()
                .with_t_end(1.0 + t_star + 50.0)
                .with_sample_interval(dt);
            let (_, report) = run_shock_sequence(
                &p,
                SimplexState4::raw(half, half, 0.0),
                &[ShockEvent::impulse(1.0, shock)?],
                &cfg,
            )?;
            let end = report.records[0].surge_end.unwrap_or(0.0);
            Ok((end - t_star, vec![beta, mu, p.delta_l(), p.rho(), shock, half]))
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = per_draw.len();
    let (worst, at) = per_draw
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
    Ok(summary(
        "surge_window",
        "max(surge end - t*) <= one sample interval",
        samples,
        worst,
        worst <= dt,
        Some(Witness {
            point: at,
            time: None,
            detail: "(beta, mu, delta, rho, shock, P0/2)".into(),
        }),
    ))
}

/// Every suite, in a fixed order.
pub fn run_all(opts: &VerifyOptions) -> Result<Vec<DiagnosticReport>> {
    let mut out = vec![
        dulac_suite(opts, 10_000)?,
        dulac_oracle_suite(opts)?,
        invariance_suite(opts)?,
        jacobian_suite(opts)?,
    ];
    out.extend(lyapunov_suites(opts)?);
    out.push(a_decay_suite(opts)?);
    out.push(seed_invariance_suite(opts)?);
    out.push(diagonal_suite(opts)?);
    out.push(no_bistability_suite(opts)?);
    out.push(boundary_suite(opts)?);
    out.push(omega_limit_suite(opts)?);
    out.push(window_suite(opts)?);
    Ok(out)
}
