//! Impulse and structural shocks, shock sequences and their long-run floors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_final, EventMarker, IntegratorConfig, Segment, Stepper, Trajectory, VectorField};
use crate::error::{Error, Result};
use crate::model::{project_to_simplex, FourGroupParams, SimplexPoint, SimplexState4};
use crate::spectral::{metzler_perron, r_rad, spectral_bound};

/// Dead-band on `d(L + R)/dt` used to decide surge onset and end.
pub const SURGE_DEADBAND: f64 = 1e-12;

/// Permanent parameter change carried by a shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Structural {
    None,
    /// `beta -> beta + dbeta` for symmetric parameters; carried by `gamma`.
    SymmetricBeta(f64),
    /// Full post-shock parameter set.
    Replace(FourGroupParams),
}

/// A shock at `time`: a fraction `delta` of centrists disengages, then the
/// structural change (if any) takes effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockEvent {
    pub time: f64,
    pub delta: f64,
    /// Raw amplitude `s` with `delta = 1 - exp(-s)`, when given that way.
    pub raw_s: Option<f64>,
    pub structural: Structural,
}

fn check_delta(delta: f64) -> Result<f64> {
    if (0.0..1.0).contains(&delta) {
        Ok(delta)
    } else {
        Err(Error::InvalidShock(format!("delta = {delta} must lie in [0, 1)")))
    }
}

impl ShockEvent {
    /// Pure state shock.
    pub fn impulse(time: f64, delta: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidShock(format!("time = {time} must be >= 0")));
        }
        Ok(Self {
            time,
            delta: check_delta(delta)?,
            raw_s: None,
            structural: Structural::None,
        })
    }

    /// State shock given by its raw amplitude, `delta = 1 - exp(-s)`.
    pub fn from_raw(time: f64, s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidShock(format!("raw amplitude s = {s} must be >= 0")));
        }
        let mut shock = Self::impulse(time, -(-s).exp_m1())?;
        shock.raw_s = Some(s);
        Ok(shock)
    }

    pub fn with_dbeta(self, dbeta: f64) -> Result<Self> {
        if !(dbeta.is_finite() && dbeta >= 0.0) {
            return Err(Error::InvalidShock(format!("dbeta = {dbeta} must be >= 0")));
        }
        Ok(Self {
            structural: Structural::SymmetricBeta(dbeta),
            ..self
        })
    }

    pub fn with_replacement(self, params: FourGroupParams) -> Self {
        Self {
            structural: Structural::Replace(params),
            ..self
        }
    }

    /// Structural increment on the symmetric channel (0 for a pure state shock).
    pub fn dbeta(&self) -> Option<f64> {
        match self.structural {
            Structural::None => Some(0.0),
            Structural::SymmetricBeta(d) => Some(d),
            Structural::Replace(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if let Some(s) = self.raw_s {
            let implied = -(-s).exp_m1();
            if (implied - self.delta).abs() >= 1e-12 {
                return Err(Error::InvalidShock(format!(
                    "delta = {} disagrees with raw amplitude s = {s}",
                    self.delta
                )));
            }
        }
        if let Some(d) = self.dbeta() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidShock(format!("dbeta = {d} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Jump condition: `A+ = A + delta C`, `C+ = (1 - delta) C`; `L`, `R` unchanged.
pub fn apply_impulse(s: &SimplexState4, delta: f64) -> Result<SimplexState4> {
    check_delta(delta)?;
    Ok(SimplexState4::raw(s.l(), s.r(), s.a() + delta * s.c()))
}

/// Post-shock parameters.
pub fn apply_structural(p: &FourGroupParams, shock: &ShockEvent) -> Result<FourGroupParams> {
    match shock.structural {
        Structural::None => Ok(*p),
        Structural::SymmetricBeta(dbeta) => {
            if !p.base().is_symmetric() {
                return Err(Error::InvalidShock(
                    "a scalar beta shift needs symmetric parameters; supply the full post-shock set instead".into(),
                ));
            }
            if !(dbeta.is_finite() && dbeta >= 0.0) {
                return Err(Error::InvalidShock(format!("dbeta = {dbeta} must be >= 0")));
            }
            if dbeta == 0.0 {
                return Ok(*p);
            }
            Ok(p.with_base(p.base().with_gamma_shift(dbeta)?))
        }
        Structural::Replace(q) => Ok(q),
    }
}

/// First shock index (1-based) at which the cumulative shift exceeds `mu - beta0`.
pub fn kstar(beta0: f64, mu: f64, dbetas: &[f64]) -> Result<Option<usize>> {
    if beta0 >= mu {
        return Err(Error::Regime(format!(
            "beta0 = {beta0} >= mu = {mu}: already supercritical"
        )));
    }
    let gap = mu - beta0;
    let mut total = 0.0;
    for (k, d) in dbetas.iter().enumerate() {
        total += d;
        if total > gap {
            return Ok(Some(k + 1));
        }
    }
    Ok(None)
}

/// Long-run centrist share after a structural shift to `b`: `mu/b` when
/// radicals are present and `b > mu`, else 1.
pub fn longrun_floor(b: f64, mu: f64, seeded: bool) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::NonPositiveParameter("B"));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::NonPositiveParameter("mu"));
    }
    Ok(if !seeded || b <= mu { 1.0 } else { mu / b })
}

/// Floor for general parameters: `1/R_rad` when seeded and `R_rad > 1`.
pub fn longrun_floor_general(p: &FourGroupParams, seeded: bool) -> f64 {
    let r = r_rad(p.base());
    if seeded && r > 1.0 {
        1.0 / r
    } else {
        1.0
    }
}

/// Exact instantaneous growth threshold on `A` at radical share `P0` per wing:
/// `A_c(P0) = (mu - beta + 2 beta P0)/(delta - beta)`.
pub fn surge_threshold_exact(p0: f64, beta: f64, mu: f64, delta: f64) -> Result<f64> {
    if delta <= beta {
        return Err(Error::FormulaInapplicable(format!("delta = {delta} <= beta = {beta}")));
    }
    Ok((mu - beta + 2.0 * beta * p0) / (delta - beta))
}

/// Upper bound `t* = ln(delta_shock/Delta_c)/rho` on the duration of radical
/// growth after a state shock in the subcritical regime.
pub fn window_bound_sym(delta_shock: f64, beta: f64, mu: f64, delta: f64, rho: f64) -> Result<f64> {
    if beta >= mu {
        return Err(Error::Regime(format!("beta = {beta} >= mu = {mu}")));
    }
    if delta <= beta {
        return Err(Error::FormulaInapplicable(format!("delta = {delta} <= beta = {beta}")));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::NonPositiveParameter("rho"));
    }
    let critical = (mu - beta) / (delta - beta);
    if delta_shock < critical {
        return Err(Error::BelowThreshold {
            delta: delta_shock,
            critical,
        });
    }
    Ok((delta_shock / critical).ln() / rho)
}

/// Weighted-mass window for asymmetric parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymWindow {
    /// `V = q^T (L, R)` may grow only before `t_q`.
    Bound {
        delta_q: f64,
        t_q: f64,
        q: [f64; 2],
        kappa_bar: f64,
    },
    /// `V` is non-increasing from the shock on.
    MonotoneDecay {
        delta_q: Option<f64>,
        q: [f64; 2],
        kappa_bar: f64,
    },
}

/// Window bound from the left Perron vector `q` of `K - M`:
/// `kappa = max_i (q^T (D - K))_i / q_i`, `Delta_q = -s(K - M)/kappa`,
/// `t_q = ln(delta_shock/Delta_q)/rho`.
pub fn window_bound_asym(delta_shock: f64, p: &FourGroupParams) -> Result<AsymWindow> {
    let k = p.base().recruitment();
    let g = k.sub(&p.base().decay());
    let s0 = spectral_bound(&g);
    if s0 >= 0.0 {
        return Err(Error::BaselineSupercritical(r_rad(p.base())));
    }
    let q = metzler_perron(&g).left;
    let v = p.mobilisation().sub(&k).vec_mul(q);
    let kappa_bar = (v[0] / q[0]).max(v[1] / q[1]);
    if kappa_bar <= 0.0 {
        return Ok(AsymWindow::MonotoneDecay {
            delta_q: None,
            q,
            kappa_bar,
        });
    }
    let delta_q = -s0 / kappa_bar;
    if delta_shock <= delta_q {
        return Ok(AsymWindow::MonotoneDecay {
            delta_q: Some(delta_q),
            q,
            kappa_bar,
        });
    }
    Ok(AsymWindow::Bound {
        delta_q,
        t_q: (delta_shock / delta_q).ln() / p.rho(),
        q,
        kappa_bar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn of(r_rad: f64) -> Self {
        if r_rad < 1.0 {
            Regime::Subcritical
        } else if r_rad > 1.0 {
            Regime::Supercritical
        } else {
            Regime::Critical
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }
}

/// Everything known about one shock of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockRecord {
    /// 1-based index.
    pub k: usize,
    pub time: f64,
    pub delta: f64,
    pub raw_s: Option<f64>,
    pub dbeta: Option<f64>,
    /// Cumulative `beta` after the shock, for symmetric parameters.
    pub b_k: Option<f64>,
    pub params_before: FourGroupParams,
    pub params_after: FourGroupParams,
    pub r_rad_before: f64,
    pub r_rad_after: f64,
    pub regime_before: Regime,
    pub regime_after: Regime,
    /// Radicals present just before the shock.
    pub seeded: bool,
    /// Long-run centrist share implied by the post-shock parameters.
    pub floor: f64,
    pub pre_state: SimplexState4,
    pub post_state: SimplexState4,
    /// `d(L + R)/dt > 0` at some sample of the following segment.
    pub surge: bool,
    /// Time after the shock at which `d(L + R)/dt` last turns from positive
    /// to non-positive; `None` without a surge or if it never ends.
    pub surge_end: Option<f64>,
    /// Peak of `L + R` over the following segment.
    pub peak_radical: f64,
    /// `t*` for symmetric subcritical post-shock parameters above threshold.
    pub window: Option<f64>,
    /// Weighted-mass window for subcritical post-shock parameters.
    pub window_asym: Option<AsymWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockSequenceReport {
    pub initial_params: FourGroupParams,
    pub records: Vec<ShockRecord>,
    /// First shock after which the origin is unstable, starting subcritical.
    pub k_star: Option<usize>,
}

impl ShockSequenceReport {
    pub fn floors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.floor).collect()
    }
}

fn symmetric_beta(p: &FourGroupParams) -> Option<(f64, f64)> {
    p.base().symmetric_beta_mu()
}

fn surge_stats(p: &FourGroupParams, t0: f64, times: &[f64], states: &[SimplexState4]) -> (bool, Option<f64>, f64) {
    let rate: Vec<f64> = states
        .iter()
        .map(|s| {
            let f = p.eval(&s.to_array());
            f[0] + f[1]
        })
        .collect();
    let peak = states.iter().map(|s| s.radical()).fold(0.0, f64::max);
    let surge = rate.iter().any(|&r| r > SURGE_DEADBAND);
    let mut end = None;
    for i in 0..rate.len().saturating_sub(1) {
        if rate[i] > SURGE_DEADBAND && rate[i + 1] <= SURGE_DEADBAND {
            // linear interpolation of the zero crossing between samples
            let (a, b) = (rate[i], rate[i + 1]);
            let frac = if a > b { a / (a - b) } else { 1.0 };
            let t = times[i] + frac.clamp(0.0, 1.0) * (times[i + 1] - times[i]);
            end = Some(t - t0);
        }
    }
    if rate.last().is_some_and(|&r| r > SURGE_DEADBAND) {
        end = None;
    }
    (surge, end, peak)
}

/// Integrates piecewise between shocks. At each shock the pre-jump sample is
/// recorded, the impulse and then the structural change are applied, and the
/// post-jump state is recorded with the same timestamp.
pub fn run_shock_sequence(
    p0: &FourGroupParams,
    s0: SimplexState4,
    shocks: &[ShockEvent],
    cfg: &IntegratorConfig,
) -> Result<(Trajectory<SimplexState4, FourGroupParams>, ShockSequenceReport)> {
    cfg.validate()?;
    let mut prev_time = f64::NEG_INFINITY;
    for sh in shocks {
        sh.validate()?;
        if !(sh.time > prev_time) {
            return Err(Error::InvalidShock("shock times must be strictly increasing".into()));
        }
        if !(0.0..=cfg.t_end).contains(&sh.time) {
            return Err(Error::InvalidShock(format!(
                "shock at t = {} lies outside [0, {}]",
                sh.time, cfg.t_end
            )));
        }
        prev_time = sh.time;
    }

    // Parameters depend only on the shock list, so all segments are known
    // before integrating.
    let mut params = vec![*p0];
    for sh in shocks {
        let next = apply_structural(params.last().unwrap(), sh)?;
        params.push(next);
    }

    let mut times = vec![0.0];
    let mut states = vec![s0];
    let mut events = Vec::new();
    let mut segments = Vec::new();
    let mut seg_start = 0usize;
    let mut pre_post = Vec::with_capacity(shocks.len());

    let mut stepper = Stepper::new(&params[0], 0.0, s0.to_array(), cfg)?;
    for (k, sh) in shocks.iter().enumerate() {
        if sh.time > stepper.time() {
            stepper.advance_to(sh.time, |t, y| {
                times.push(t);
                states.push(SimplexState4::from(y));
            })?;
        }
        segments.push(Segment {
            t_start: times[seg_start],
            t_end: sh.time,
            start: seg_start,
            end: times.len(),
            params: params[k],
        });
        let pre = *states.last().unwrap();
        let post = project_to_simplex(apply_impulse(&pre, sh.delta)?, cfg.projection_tol)?;
        times.push(sh.time);
        states.push(post);
        seg_start = times.len() - 1;
        events.push(EventMarker {
            time: sh.time,
            index: seg_start,
            shock: k + 1,
        });
        pre_post.push((pre, post));
        stepper = stepper.with_field(&params[k + 1], post.to_array());
    }
    if cfg.t_end > stepper.time() {
        stepper.advance_to(cfg.t_end, |t, y| {
            times.push(t);
            states.push(SimplexState4::from(y));
        })?;
    }
    segments.push(Segment {
        t_start: times[seg_start],
        t_end: cfg.t_end.max(times[seg_start]),
        start: seg_start,
        end: times.len(),
        params: *params.last().unwrap(),
    });
    let stats = stepper.stats;
    let traj = Trajectory {
        times,
        states,
        events,
        segments,
        stats,
    };

    let mut records = Vec::with_capacity(shocks.len());
    for (k, sh) in shocks.iter().enumerate() {
        let (before, after) = (params[k], params[k + 1]);
        let (pre, post) = pre_post[k];
        let (r_before, r_after) = (r_rad(before.base()), r_rad(after.base()));
        let seeded = pre.radical() > 0.0;
        let sym_after = symmetric_beta(&after);
        let floor = match sym_after {
            Some((b, mu)) => longrun_floor(b, mu, seeded)?,
            None => longrun_floor_general(&after, seeded),
        };
        let (seg_times, seg_states) = traj.segment_samples(k + 1);
        let (surge, surge_end, peak_radical) = surge_stats(&after, sh.time, seg_times, seg_states);
        let window = match sym_after {
            Some((b, mu)) if after.is_symmetric() => {
                window_bound_sym(sh.delta, b, mu, after.delta_l(), after.rho()).ok()
            }
            _ => None,
        };
        let window_asym = window_bound_asym(sh.delta, &after).ok();
        records.push(ShockRecord {
            k: k + 1,
            time: sh.time,
            delta: sh.delta,
            raw_s: sh.raw_s,
            dbeta: sh.dbeta(),
            b_k: sym_after.map(|(b, _)| b),
            params_before: before,
            params_after: after,
            r_rad_before: r_before,
            r_rad_after: r_after,
            regime_before: Regime::of(r_before),
            regime_after: Regime::of(r_after),
            seeded,
            floor,
            pre_state: pre,
            post_state: post,
            surge,
            surge_end,
            peak_radical,
            window,
            window_asym,
        });
    }

    let k_star = sequence_kstar(p0, shocks, &records)?;
    Ok((
        traj,
        ShockSequenceReport {
            initial_params: *p0,
            records,
            k_star,
        },
    ))
}

fn sequence_kstar(p0: &FourGroupParams, shocks: &[ShockEvent], records: &[ShockRecord]) -> Result<Option<usize>> {
    let dbetas: Option<Vec<f64>> = shocks.iter().map(|s| s.dbeta()).collect();
    match (symmetric_beta(p0), dbetas) {
        (Some((b0, mu)), Some(d)) if b0 < mu => kstar(b0, mu, &d),
        (Some((b0, mu)), Some(_)) if b0 >= mu => Ok(None),
        _ => {
            if r_rad(p0.base()) >= 1.0 {
                return Ok(None);
            }
            Ok(records.iter().find(|r| r.r_rad_after > 1.0).map(|r| r.k))
        }
    }
}

/// Terminal centrist share of each post-shock segment continued without
/// further shocks for `horizon` time units after the shock.
pub fn settle_floors(report: &ShockSequenceReport, horizon: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let cfg = cfg.with_t_end(horizon).with_sample_interval(horizon.max(1.0));
    report
        .records
        .par_iter()
        .map(|r| integrate_final(&r.params_after, r.post_state, &cfg).map(|s| s.c()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaselineParams, SymmetricParams};

    fn regimes_params() -> FourGroupParams {
        SymmetricParams::new(0.2, 0.1, 0.4)
            .unwrap()
            .with_disengagement(0.7, 0.1)
            .unwrap()
            .four_group()
            .unwrap()
    }

    #[test]
    fn impulse_examples() {
        let s = apply_impulse(&SimplexState4::raw(0.1, 0.1, 0.0), 0.25).unwrap();
        assert!((s.a() - 0.2).abs() < 1e-15 && (s.c() - 0.6).abs() < 1e-15);
        let s0 = SimplexState4::raw(0.2, 0.1, 0.3);
        assert_eq!(apply_impulse(&s0, 0.0).unwrap(), s0);
        let s = apply_impulse(&SimplexState4::raw(0.0, 0.0, 0.0), 0.55).unwrap();
        assert_eq!(s.a(), 0.55);
        assert!((s.c() - 0.45).abs() < 1e-15);
        assert!(apply_impulse(&s0, 1.0).is_err());
    }

    #[test]
    fn raw_amplitude() {
        let sh = ShockEvent::from_raw(1.0, 2.0f64.ln()).unwrap();
        assert!((sh.delta - 0.5).abs() < 1e-15);
        assert!(sh.validate().is_ok());
        let bad = ShockEvent { raw_s: Some(1.0), ..sh };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn structural_examples() {
        let p = regimes_params();
        let sh = ShockEvent::impulse(5.0, 0.55).unwrap().with_dbeta(0.15).unwrap();
        let q = apply_structural(&p, &sh).unwrap();
        assert!((q.base().symmetric_beta_mu().unwrap().0 - 0.45).abs() < 1e-15);
        let pure = ShockEvent::impulse(5.0, 0.55).unwrap().with_dbeta(0.0).unwrap();
        assert_eq!(apply_structural(&p, &pure).unwrap(), p);

        let asym = FourGroupParams::new(
            BaselineParams::new(0.08, 0.14, 0.30, 0.28, 0.10, 0.06).unwrap(),
            0.55,
            0.6,
            0.1,
        )
        .unwrap();
        assert!(apply_structural(&asym, &sh).is_err());
    }

    #[test]
    fn kstar_examples() {
        assert_eq!(kstar(0.30, 0.40, &[0.04; 4]).unwrap(), Some(3));
        assert_eq!(kstar(0.30, 0.40, &[0.05]).unwrap(), None);
        assert_eq!(kstar(0.18, 0.22, &[0.069, 0.043]).unwrap(), Some(1));
        assert!(kstar(0.4, 0.4, &[0.1]).is_err());
    }

    #[test]
    fn floor_examples() {
        assert!((longrun_floor(0.45, 0.40, true).unwrap() - 0.8889).abs() < 1e-4);
        let f = longrun_floor(0.2917, 0.22, true).unwrap();
        assert!((f - 0.7542).abs() < 1e-4 && (1.0 - f - 0.2458).abs() < 1e-4);
        assert_eq!(longrun_floor(0.50, 0.40, false).unwrap(), 1.0);
        assert_eq!(longrun_floor(0.30, 0.40, true).unwrap(), 1.0);
    }

    #[test]
    fn surge_threshold_examples() {
        assert!((surge_threshold_exact(0.0, 0.3, 0.4, 0.7).unwrap() - 0.25).abs() < 1e-15);
        assert!((surge_threshold_exact(0.1, 0.3, 0.4, 0.7).unwrap() - 0.40).abs() < 1e-15);
        assert!(
            surge_threshold_exact(0.2, 0.3, 0.4, 0.7).unwrap() > surge_threshold_exact(0.1, 0.3, 0.4, 0.7).unwrap()
        );
        assert!(surge_threshold_exact(0.1, 0.3, 0.4, 0.3).is_err());
    }

    #[test]
    fn window_examples() {
        let t = window_bound_sym(0.55, 0.3, 0.4, 0.7, 0.1).unwrap();
        assert!((t - 10.0 * 2.2f64.ln()).abs() < 1e-12);
        let dc = crate::spectral::delta_c_sym(0.3, 0.4, 0.7).unwrap().value().unwrap();
        assert_eq!(window_bound_sym(dc, 0.3, 0.4, 0.7, 0.1).unwrap(), 0.0);
        let t2 = window_bound_sym(0.55, 0.3, 0.4, 0.7, 0.2).unwrap();
        assert!((t2 - 0.5 * t).abs() < 1e-12);
        assert!(matches!(
            window_bound_sym(0.1, 0.3, 0.4, 0.7, 0.1),
            Err(Error::BelowThreshold { .. })
        ));
    }

    #[test]
    fn asym_window_reduces_to_symmetric() {
        let p = regimes_params();
        let AsymWindow::Bound { delta_q, t_q, q, .. } = window_bound_asym(0.55, &p).unwrap() else {
            panic!()
        };
        assert!((delta_q - 0.25).abs() < 1e-12);
        assert!((t_q - window_bound_sym(0.55, 0.3, 0.4, 0.7, 0.1).unwrap()).abs() < 1e-10);
        assert_eq!(q, [0.5, 0.5]);
    }

    #[test]
    fn asym_window_monotone_when_mobilisation_is_weak() {
        let base = BaselineParams::symmetric(0.2, 0.1, 0.4).unwrap();
        let p = FourGroupParams::new(base, 0.05, 0.05, 0.1).unwrap();
        assert!(matches!(
            window_bound_asym(0.9, &p).unwrap(),
            AsymWindow::MonotoneDecay { delta_q: None, .. }
        ));
    }

    #[test]
    fn empty_sequence_is_plain_integration() {
        let p = regimes_params();
        let cfg = IntegratorConfig::default().with_t_end(20.0);
        let s0 = SimplexState4::raw(0.01, 0.01, 0.0);
        let (tr, rep) = run_shock_sequence(&p, s0, &[], &cfg).unwrap();
        assert!(rep.records.is_empty());
        assert_eq!(rep.k_star, None);
        let plain = crate::dynamics::integrate(&p, s0, &cfg).unwrap();
        assert_eq!(tr.states, plain.states);
    }

    #[test]
    fn jump_is_recorded_twice() {
        let p = regimes_params();
        let cfg = IntegratorConfig::default().with_t_end(20.0);
        let shocks = [ShockEvent::impulse(5.0, 0.55).unwrap()];
        let (tr, rep) = run_shock_sequence(&p, SimplexState4::raw(0.01, 0.01, 0.0), &shocks, &cfg).unwrap();
        let i = tr.events[0].index;
        assert_eq!(tr.times[i - 1], 5.0);
        assert_eq!(tr.times[i], 5.0);
        assert_eq!(tr.states[i], rep.records[0].post_state);
        assert!(rep.records[0].surge);
        assert_eq!(tr.segments.len(), 2);
        assert_eq!(tr.segments[0].end, i);
    }

    #[test]
    fn rejects_unordered_shocks() {
        let p = regimes_params();
        let cfg = IntegratorConfig::default().with_t_end(20.0);
        let shocks = [
            ShockEvent::impulse(5.0, 0.1).unwrap(),
            ShockEvent::impulse(5.0, 0.1).unwrap(),
        ];
        assert!(run_shock_sequence(&p, SimplexState4::raw(0.01, 0.01, 0.0), &shocks, &cfg).is_err());
        let late = [ShockEvent::impulse(25.0, 0.1).unwrap()];
        assert!(run_shock_sequence(&p, SimplexState4::raw(0.01, 0.01, 0.0), &late, &cfg).is_err());
    }
}
