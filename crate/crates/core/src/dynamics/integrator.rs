//! Dormand–Prince 5(4) with PI step-size control and sampling on a fixed grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::VectorField;
use super::trajectory::{IntegratorStats, Segment, Trajectory};
use crate::error::{Error, Result};
use crate::model::project_coords;

/// Integration settings. Tolerances apply per component in the max norm:
/// a step is accepted when `|err_i| <= abs_tol + rel_tol * max(|y_i|, |y_new_i|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    /// Clamp rounding drift back onto the simplex after every accepted step.
    /// Drift beyond `projection_tol` is an error either way when enabled.
    pub clamp_to_simplex: bool,
    pub projection_tol: f64,
    /// Stop once `|F(y)|_inf` drops below this value and hold the state for
    /// the remaining samples. Off by default.
    pub stop_at_equilibrium: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            t_end: 200.0,
            sample_interval: 0.1,
            clamp_to_simplex: true,
            projection_tol: crate::model::PROJECTION_TOL,
            stop_at_equilibrium: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_end(self, t_end: f64) -> Self {
        Self { t_end, ..self }
    }

    pub fn with_sample_interval(self, sample_interval: f64) -> Self {
        Self {
            sample_interval,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be > 0")));
            }
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end = {} must be finite and >= 0",
                self.t_end
            )));
        }
        if !(self.projection_tol >= 0.0) {
            return Err(Error::InvalidConfig("projection_tol must be >= 0".into()));
        }
        Ok(())
    }
}

// Dormand & Prince (1980) tableau. The fields are autonomous, so the nodes
// c_i never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

#[inline]
fn combo<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn inf_norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Adaptive stepper carrying the FSAL derivative and controller memory
/// across consecutive spans, so a piecewise run behaves like one integration
/// between events.
pub struct Stepper<'a, const N: usize, F: VectorField<N>> {
    field: &'a F,
    cfg: IntegratorConfig,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    err_prev: f64,
    halted: bool,
    pub stats: IntegratorStats,
}

impl<'a, const N: usize, F: VectorField<N>> Stepper<'a, N, F> {
    pub fn new(field: &'a F, t0: f64, y0: [f64; N], cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let mut stats = IntegratorStats::default();
        stats.rhs_evals += 1;
        Ok(Self {
            field,
            cfg: *cfg,
            t: t0,
            y: y0,
            k1: field.eval(&y0),
            h: cfg.max_step,
            err_prev: 1e-4,
            halted: false,
            stats,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> [f64; N] {
        self.y
    }

    /// Replaces the state (after a jump), keeping the step-size memory.
    pub fn reset_state(&mut self, y: [f64; N]) {
        self.y = y;
        self.k1 = self.field.eval(&y);
        self.stats.rhs_evals += 1;
        self.halted = false;
    }

    /// Switches to a different field (after a structural change) at the
    /// current time and state.
    pub fn with_field<'b, G: VectorField<N>>(self, field: &'b G, y: [f64; N]) -> Stepper<'b, N, G> {
        let mut stats = self.stats;
        stats.rhs_evals += 1;
        Stepper {
            field,
            cfg: self.cfg,
            t: self.t,
            y,
            k1: field.eval(&y),
            h: self.h,
            err_prev: self.err_prev,
            halted: false,
            stats,
        }
    }

    /// Advances to `t1`, calling `sink` at every grid time `i * sample_interval`
    /// in `(t, t1)` and at `t1` itself.
    pub fn advance_to(&mut self, t1: f64, mut sink: impl FnMut(f64, [f64; N])) -> Result<()> {
        let dt = self.cfg.sample_interval;
        let merge = 1e-9 * dt;
        let mut i = (self.t / dt).floor() as i64 + 1;
        loop {
            let mut target = i as f64 * dt;
            if target <= self.t + merge {
                i += 1;
                continue;
            }
            let last = target >= t1 - merge;
            if last {
                target = t1;
            }
            self.step_to(target)?;
            sink(target, self.y);
            if last {
                return Ok(());
            }
            i += 1;
        }
    }

    fn step_to(&mut self, target: f64) -> Result<()> {
        while self.t < target {
            if self.halted {
                self.t = target;
                return Ok(());
            }
            let proposal = self.h.min(self.cfg.max_step);
            let remaining = target - self.t;
            let clipped = proposal >= remaining;
            let h = if clipped { remaining } else { proposal };
            let floor = 1e-14 * self.t.abs().max(1.0);
            if h < floor && !clipped {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }

            let (y_new, k7, err) = self.trial(h);
            if err <= 1.0 {
                self.accept(if clipped { target } else { self.t + h }, y_new, k7)?;
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-PI_ALPHA) * self.err_prev.powf(PI_BETA)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                self.err_prev = err.max(1e-4);
                // a step shortened to hit a sample time says nothing about
                // the natural step size, so keep the unclipped proposal
                self.h = if clipped { proposal.max(h * factor) } else { h * factor };
            } else {
                self.stats.rejected += 1;
                let factor = (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
                self.h = h * factor;
                if self.h < floor {
                    return Err(Error::StepSizeUnderflow { t: self.t, h: self.h });
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn trial(&mut self, h: f64) -> ([f64; N], [f64; N], f64) {
        let f = self.field;
        let y = &self.y;
        let k1 = self.k1;
        let k2 = f.eval(&combo(y, h, &[(A21, &k1)]));
        let k3 = f.eval(&combo(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f.eval(&combo(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f.eval(&combo(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f.eval(&combo(
            y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y_new = combo(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f.eval(&y_new);
        self.stats.rhs_evals += 6;

        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        (y_new, k7, err)
    }

    fn accept(&mut self, t_new: f64, mut y_new: [f64; N], k7: [f64; N]) -> Result<()> {
        self.stats.accepted += 1;
        self.t = t_new;
        if self.cfg.clamp_to_simplex {
            let before = y_new;
            project_coords(&mut y_new, self.cfg.projection_tol)?;
            if before != y_new {
                self.stats.clamped += 1;
                self.y = y_new;
                self.k1 = self.field.eval(&y_new);
                self.stats.rhs_evals += 1;
            } else {
                self.y = y_new;
                self.k1 = k7;
            }
        } else {
            self.y = y_new;
            self.k1 = k7;
        }
        if let Some(thr) = self.cfg.stop_at_equilibrium {
            if inf_norm(&self.k1) < thr {
                self.halted = true;
            }
        }
        Ok(())
    }
}

/// Integrates `field` from `s0` over `[0, cfg.t_end]`, sampling every
/// `cfg.sample_interval` (plus `t_end` itself).
pub fn integrate<const N: usize, F>(field: &F, s0: F::State, cfg: &IntegratorConfig) -> Result<Trajectory<F::State, F>>
where
    F: VectorField<N> + Clone,
{
    let y0: [f64; N] = s0.into();
    let mut stepper = Stepper::new(field, 0.0, y0, cfg)?;
    let mut times = vec![0.0];
    let mut states = vec![s0];
    if cfg.t_end > 0.0 {
        stepper.advance_to(cfg.t_end, |t, y| {
            times.push(t);
            states.push(F::State::from(y));
        })?;
    }
    let n = times.len();
    Ok(Trajectory {
        times,
        states,
        events: Vec::new(),
        segments: vec![Segment {
            t_start: 0.0,
            t_end: cfg.t_end,
            start: 0,
            end: n,
            params: field.clone(),
        }],
        stats: stepper.stats,
    })
}

/// Final state at `cfg.t_end` without keeping samples.
pub fn integrate_final<const N: usize, F: VectorField<N>>(
    field: &F,
    s0: F::State,
    cfg: &IntegratorConfig,
) -> Result<F::State> {
    let mut stepper = Stepper::new(field, 0.0, s0.into(), cfg)?;
    if cfg.t_end > 0.0 {
        stepper.advance_to(cfg.t_end, |_, _| {})?;
    }
    Ok(F::State::from(stepper.state()))
}

/// Runs independent integrations on the rayon pool, preserving input order.
pub fn integrate_many<const N: usize, F>(
    field: &F,
    initial: &[F::State],
    cfg: &IntegratorConfig,
) -> Result<Vec<Trajectory<F::State, F>>>
where
    F: VectorField<N> + Clone + Send,
    F::State: Send,
{
    initial.par_iter().map(|s0| integrate(field, *s0, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FnField;
    use crate::model::{BaselineParams, FourGroupParams, SimplexPoint, SimplexState3, SimplexState4};

    #[test]
    fn samples_on_grid() {
        let p = BaselineParams::symmetric(0.25, 0.15, 0.2).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(1.05).with_sample_interval(0.5);
        let tr = integrate(&p, SimplexState3::raw(0.1, 0.2), &cfg).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.5, 1.0, 1.05]);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        // on the face L = R = 0 the disengaged share decays as exp(-rho t)
        let base = BaselineParams::symmetric(0.2, 0.1, 0.4).unwrap();
        let p = FourGroupParams::new(base, 0.7, 0.7, 0.1).unwrap();
        let cfg = IntegratorConfig::default().with_t_end(50.0);
        let tr = integrate(&p, SimplexState4::raw(0.0, 0.0, 0.5), &cfg).unwrap();
        for (t, s) in tr.samples() {
            let exact = 0.5 * (-0.1 * t).exp();
            assert!((s.a() - exact).abs() < 1e-10, "t = {t}");
            assert_eq!((s.l(), s.r()), (0.0, 0.0));
        }
    }

    #[test]
    fn logistic_accuracy() {
        // scalar logistic embedded in the first coordinate
        let f = FnField::<SimplexState3, _>::new(|y: &[f64; 2]| [y[0] * (1.0 - y[0]), 0.0]);
        let cfg = IntegratorConfig::default().with_t_end(10.0);
        let tr = integrate(&f, SimplexState3::raw(0.1, 0.0), &cfg).unwrap();
        for (t, s) in tr.samples() {
            let exact = 1.0 / (1.0 + 9.0 * (-t).exp());
            assert!((s.l() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn equilibrium_stop_holds_state() {
        let p = BaselineParams::symmetric(0.25, 0.15, 0.2).unwrap();
        let cfg = IntegratorConfig {
            stop_at_equilibrium: Some(1e-10),
            ..IntegratorConfig::default().with_t_end(400.0)
        };
        let tr = integrate(&p, SimplexState3::raw(0.1, 0.2), &cfg).unwrap();
        assert!(tr.final_state().distance_inf(&SimplexState3::raw(0.25, 0.25)) < 1e-9);
        assert_eq!(tr.final_time(), 400.0);
    }

    #[test]
    fn rejects_bad_config() {
        let p = BaselineParams::symmetric(0.25, 0.15, 0.2).unwrap();
        let cfg = IntegratorConfig {
            max_step: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&p, SimplexState3::raw(0.1, 0.2), &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn blow_up_underflows() {
        let f = FnField::<SimplexState3, _>::new(|y: &[f64; 2]| [y[0] * y[0] * 10.0, 0.0]);
        let cfg = IntegratorConfig {
            clamp_to_simplex: false,
            ..IntegratorConfig::default().with_t_end(2.0)
        };
        let err = integrate(&f, SimplexState3::raw(1.0, 0.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. }));
    }

    #[test]
    fn drift_beyond_tolerance_is_reported() {
        let f = FnField::<SimplexState3, _>::new(|_: &[f64; 2]| [-1.0, 0.0]);
        let cfg = IntegratorConfig::default().with_t_end(1.0);
        let err = integrate(&f, SimplexState3::raw(0.5, 0.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::SimplexViolation { .. }));
    }
}
