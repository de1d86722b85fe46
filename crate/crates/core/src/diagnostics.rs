//! Numerical checks of the qualitative results: Dulac negativity, Lyapunov
//! monotonicity, inflow on the simplex faces, decay of the disengaged pool and
//! the absence of cycles.

use serde::Serialize;

use crate::dynamics::{jacobian_baseline, Trajectory, VectorField};
use crate::equilibria::baseline_attractor;
use crate::error::{Error, Result};
use crate::model::{BaselineParams, FourGroupParams, ModelParams, SimplexPoint, SimplexState3, SimplexState4};
use crate::spectral::{metzler_perron, r_rad, spectral_bound, Matrix2};

/// Interior margin for Dulac sampling; the weight `1/(LRC)` is singular on
/// the boundary.
pub const DULAC_MARGIN: f64 = 1e-6;

/// Allowed increase between consecutive samples of a Lyapunov function.
pub const LYAPUNOV_SLACK: f64 = 1e-9;

/// Relative slack on the exponential bound for `A`.
pub const A_DECAY_SLACK: f64 = 1e-9;

/// Times a trajectory may re-enter a ball around its limit after leaving it.
pub const N_REENTRY: usize = 2;

/// Outcome of one check over many samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub name: String,
    pub samples: usize,
    /// Worst value of the checked quantity; the predicate is stated in `criterion`.
    pub worst: f64,
    pub criterion: String,
    pub pass: bool,
    /// Coordinates (and time, when relevant) of the worst sample on failure.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub time: Option<f64>,
    pub detail: String,
}

impl DiagnosticReport {
    fn new(name: &str, criterion: &str, samples: usize, worst: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            samples,
            worst,
            criterion: criterion.into(),
            pass,
            witness: None,
        }
    }

    fn with_witness(mut self, witness: Option<Witness>) -> Self {
        if !self.pass {
            self.witness = witness;
        }
        self
    }

    /// Merges reports of the same check, keeping the worst sample.
    /// `higher_is_worse` gives the direction of `worst`.
    pub fn combine(name: &str, reports: Vec<DiagnosticReport>, higher_is_worse: bool) -> Self {
        let samples = reports.iter().map(|r| r.samples).sum();
        let pass = reports.iter().all(|r| r.pass);
        let criterion = reports.first().map(|r| r.criterion.clone()).unwrap_or_default();
        let pick = |a: &DiagnosticReport, b: &DiagnosticReport| {
            if higher_is_worse {
                a.worst.total_cmp(&b.worst)
            } else {
                b.worst.total_cmp(&a.worst)
            }
        };
        let worst_report = reports.iter().max_by(|a, b| pick(a, b));
        let witness = reports.iter().find(|r| !r.pass).and_then(|r| r.witness.clone());
        Self {
            name: name.into(),
            samples,
            worst: worst_report.map_or(f64::NAN, |r| r.worst),
            criterion,
            pass,
            witness: if pass { None } else { witness },
        }
    }
}

/// `div(B F)` with `B = 1/(LRC)`:
/// `-gamma_RL/L^2 - gamma_LR/R^2 - mu_L/(R C^2) - mu_R/(L C^2)`.
pub fn dulac_divergence(p: &BaselineParams, s: &SimplexState3) -> Result<f64> {
    let (l, r, c) = (s.l(), s.r(), s.c());
    if l < DULAC_MARGIN || r < DULAC_MARGIN || c < DULAC_MARGIN {
        return Err(Error::BoundaryPoint(format!(
            "(L, R, C) = ({l}, {r}, {c}) within {DULAC_MARGIN:e} of the boundary"
        )));
    }
    Ok(-p.gamma_rl() / (l * l) - p.gamma_lr() / (r * r) - p.mu_l() / (r * c * c) - p.mu_r() / (l * c * c))
}

/// `div(B F)` by central differences of `B F`, for any planar field.
pub fn dulac_divergence_fd(f: impl Fn(&[f64; 2]) -> [f64; 2], s: &SimplexState3, h: f64) -> f64 {
    let bf = |y: [f64; 2]| {
        let fy = f(&y);
        let b = 1.0 / (y[0] * y[1] * (1.0 - y[0] - y[1]));
        [b * fy[0], b * fy[1]]
    };
    let (l, r) = (s.l(), s.r());
    let d1 = (bf([l + h, r])[0] - bf([l - h, r])[0]) / (2.0 * h);
    let d2 = (bf([l, r + h])[1] - bf([l, r - h])[1]) / (2.0 * h);
    d1 + d2
}

/// Evaluates a divergence function at interior points; passes iff every value
/// is strictly negative.
pub fn dulac_check(
    name: &str,
    points: &[SimplexState3],
    div: impl Fn(&SimplexState3) -> Result<f64>,
) -> Result<DiagnosticReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for s in points {
        let v = div(s)?;
        if v > worst || v.is_nan() {
            worst = v;
            at = Some(*s);
        }
    }
    let pass = worst < 0.0;
    Ok(
        DiagnosticReport::new(name, "max divergence < 0", points.len(), worst, pass).with_witness(at.map(|s| {
            Witness {
                point: s.coords().to_vec(),
                time: None,
                detail: format!("divergence {worst:e}"),
            }
        })),
    )
}

/// Lyapunov functions available for monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovKind {
    /// `V = q^T (L, R)` with `q` the left Perron vector of `K - M`; needs `R_rad <= 1`.
    SubcriticalBaseline,
    /// `W = q^T (L, R) + eta A`; needs `R_rad < 1`.
    Subcritical4Group,
    /// `V = (L + R)/2 + A`; needs symmetric parameters with `beta <= mu`.
    Symmetric4Group,
}

/// Weight `eta` for `W`, the smallest admissible value plus `1e-6`.
pub fn lyapunov_eta(p: &FourGroupParams) -> (f64, [f64; 2]) {
    let k = p.base().recruitment();
    let q = metzler_perron(&k.sub(&p.base().decay())).left;
    let v = p.mobilisation().sub(&k).vec_mul(q);
    let eta = 0.0f64.max(v[0] / p.delta_l()).max(v[1] / p.delta_r()) + 1e-6;
    (eta, q)
}

fn monotone_report<'a>(
    name: &str,
    segments: impl Iterator<Item = (&'a [f64], Vec<f64>, Vec<Vec<f64>>)>,
) -> DiagnosticReport {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    let mut witness = None;
    for (times, values, points) in segments {
        samples += values.len();
        for i in 1..values.len() {
            let inc = values[i] - values[i - 1];
            if inc > worst {
                worst = inc;
                witness = Some(Witness {
                    point: points[i].clone(),
                    time: Some(times[i]),
                    detail: format!("increase {inc:e}"),
                });
            }
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    let pass = worst <= LYAPUNOV_SLACK;
    DiagnosticReport::new(
        name,
        "max increase between consecutive samples <= 1e-9",
        samples,
        worst,
        pass,
    )
    .with_witness(witness)
}

/// Checks that `V = q^T (L, R)` never increases along a subcritical baseline
/// trajectory.
pub fn lyapunov_trace_baseline(traj: &Trajectory<SimplexState3, BaselineParams>) -> Result<DiagnosticReport> {
    let mut per_segment = Vec::new();
    for (k, seg) in traj.segments.iter().enumerate() {
        let lambda = r_rad(&seg.params);
        if lambda > 1.0 {
            return Err(Error::RegimeMismatch(format!(
                "V needs R_rad <= 1, segment {k} has {lambda}"
            )));
        }
        let p = &seg.params;
        let q = metzler_perron(&p.recruitment().sub(&p.decay())).left;
        let (times, states) = traj.segment_samples(k);
        let values = states.iter().map(|s| q[0] * s.l() + q[1] * s.r()).collect();
        let points = states.iter().map(|s| s.coords().to_vec()).collect();
        per_segment.push((times, values, points));
    }
    Ok(monotone_report(
        "lyapunov_subcritical_baseline",
        per_segment.into_iter(),
    ))
}

/// Lyapunov monotonicity for four-group trajectories, segment by segment, so
/// jumps at shocks are not compared across.
pub fn lyapunov_trace_4group(
    kind: LyapunovKind,
    traj: &Trajectory<SimplexState4, FourGroupParams>,
) -> Result<DiagnosticReport> {
    let mut per_segment = Vec::new();
    for (k, seg) in traj.segments.iter().enumerate() {
        let p = &seg.params;
        let f: Box<dyn Fn(&SimplexState4) -> f64> = match kind {
            LyapunovKind::SubcriticalBaseline => {
                return Err(Error::RegimeMismatch(
                    "baseline function applied to a four-group trajectory".into(),
                ))
            }
            LyapunovKind::Subcritical4Group => {
                let s0 = spectral_bound(&p.base().recruitment().sub(&p.base().decay()));
                if s0 >= 0.0 {
                    return Err(Error::RegimeMismatch(format!(
                        "W needs R_rad < 1, segment {k} has {}",
                        r_rad(p.base())
                    )));
                }
                let (eta, q) = lyapunov_eta(p);
                Box::new(move |s| q[0] * s.l() + q[1] * s.r() + eta * s.a())
            }
            LyapunovKind::Symmetric4Group => match p.base().symmetric_beta_mu() {
                Some((beta, mu)) if p.is_symmetric() && beta <= mu => Box::new(|s| 0.5 * (s.l() + s.r()) + s.a()),
                _ => {
                    return Err(Error::RegimeMismatch(format!(
                        "P + A needs symmetric parameters with beta <= mu (segment {k})"
                    )))
                }
            },
        };
        let (times, states) = traj.segment_samples(k);
        let values = states.iter().map(&f).collect();
        let points = states.iter().map(|s| s.coords().to_vec()).collect();
        per_segment.push((times, values, points));
    }
    let name = match kind {
        LyapunovKind::SubcriticalBaseline => "lyapunov_subcritical_baseline",
        LyapunovKind::Subcritical4Group => "lyapunov_subcritical_4group",
        LyapunovKind::Symmetric4Group => "lyapunov_symmetric_4group",
    };
    Ok(monotone_report(name, per_segment.into_iter()))
}

fn face_grid3(n: usize) -> Vec<[f64; 2]> {
    // n points along an edge parameter in [0, 1]
    (0..n.max(2))
        .map(|i| {
            let t = i as f64 / (n.max(2) - 1) as f64;
            [t, 1.0 - t]
        })
        .collect()
}

fn triangle_grid(n: usize) -> Vec<[f64; 2]> {
    // roughly n points (u, v) with u, v >= 0, u + v <= 1
    let m = ((2 * n.max(3)) as f64).sqrt().ceil() as usize;
    let mut out = Vec::new();
    for i in 0..=m {
        for j in 0..=(m - i) {
            out.push([i as f64 / m as f64, j as f64 / m as f64]);
        }
    }
    out
}

/// Minimum of the inward flux over a set of boundary samples.
struct FluxScan {
    worst: f64,
    samples: usize,
    at: Vec<f64>,
    face: &'static str,
}

impl FluxScan {
    fn new() -> Self {
        Self {
            worst: f64::INFINITY,
            samples: 0,
            at: Vec::new(),
            face: "",
        }
    }

    fn push(&mut self, face: &'static str, point: &[f64], flux: f64) {
        self.samples += 1;
        if flux < self.worst || flux.is_nan() {
            self.worst = flux;
            self.at = point.to_vec();
            self.face = face;
        }
    }

    fn report(self, name: &str) -> DiagnosticReport {
        let pass = self.worst >= -1e-14;
        DiagnosticReport::new(name, "min inward flux >= 0", self.samples, self.worst, pass).with_witness(Some(
            Witness {
                point: self.at,
                time: None,
                detail: format!("face {}", self.face),
            },
        ))
    }
}

/// Inflow on the three faces of the 2-simplex for any planar field:
/// `F1 >= 0` on `L = 0`, `F2 >= 0` on `R = 0`, `dC/dt >= 0` on `C = 0`.
pub fn boundary_inflow_check_3(name: &str, f: impl Fn(&[f64; 2]) -> [f64; 2], n_samples: usize) -> DiagnosticReport {
    let mut scan = FluxScan::new();
    for [u, v] in face_grid3(n_samples) {
        let y = [0.0, u];
        scan.push("L=0", &y, f(&y)[0]);
        let y = [u, 0.0];
        scan.push("R=0", &y, f(&y)[1]);
        let y = [u, v];
        let fy = f(&y);
        scan.push("C=0", &y, -(fy[0] + fy[1]));
    }
    scan.report(name)
}

/// Inflow on the four faces of the 3-simplex for any field on `(L, R, A)`.
pub fn boundary_inflow_check_4(name: &str, f: impl Fn(&[f64; 3]) -> [f64; 3], n_samples: usize) -> DiagnosticReport {
    let mut scan = FluxScan::new();
    for [u, v] in triangle_grid(n_samples) {
        let y = [0.0, u, v];
        scan.push("L=0", &y, f(&y)[0]);
        let y = [u, 0.0, v];
        scan.push("R=0", &y, f(&y)[1]);
        let y = [u, v, 0.0];
        scan.push("A=0", &y, f(&y)[2]);
        // C = 0: (L, R, A) = (u, v, 1 - u - v)
        let y = [u, v, (1.0 - u - v).max(0.0)];
        let fy = f(&y);
        scan.push("C=0", &y, -(fy[0] + fy[1] + fy[2]));
    }
    scan.report(name)
}

/// Inflow check for either model.
pub fn boundary_inflow_check(p: &ModelParams, n_samples: usize) -> DiagnosticReport {
    match p {
        ModelParams::Baseline(b) => boundary_inflow_check_3("boundary_inflow_baseline", |y| b.eval(y), n_samples),
        ModelParams::FourGroup(q) => boundary_inflow_check_4("boundary_inflow_4group", |y| q.eval(y), n_samples),
    }
}

/// `A(t_i) <= A(t0) exp(-rho (t_i - t0)) (1 + 1e-9)` on every segment, with
/// `t0` the segment start.
pub fn a_decay_check(traj: &Trajectory<SimplexState4, FourGroupParams>) -> DiagnosticReport {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    let mut witness = None;
    for (k, seg) in traj.segments.iter().enumerate() {
        let (times, states) = traj.segment_samples(k);
        let Some(first) = states.first() else { continue };
        let (t0, a0) = (times[0], first.a());
        for (t, s) in times.iter().zip(states) {
            samples += 1;
            let bound = a0 * (-seg.params.rho() * (t - t0)).exp() * (1.0 + A_DECAY_SLACK);
            let excess = s.a() - bound;
            if excess > worst {
                worst = excess;
                witness = Some(Witness {
                    point: s.coords().to_vec(),
                    time: Some(*t),
                    detail: format!("A exceeds its bound by {excess:e}"),
                });
            }
        }
    }
    if samples == 0 {
        worst = 0.0;
    }
    let pass = worst <= 0.0;
    DiagnosticReport::new("a_decay", "max(A - bound) <= 0", samples, worst, pass).with_witness(witness)
}

/// Solves `J^T P + P J = -I` for a stable 2x2 `J`.
pub fn lyapunov_matrix(j: &Matrix2) -> Option<Matrix2> {
    let [[a, b], [c, d]] = j.0;
    // unknowns (p11, p12, p22):
    //   2a p11 + 2c p12          = -1
    //    b p11 + (a+d) p12 + c p22 = 0
    //            2b p12 + 2d p22 = -1
    let m = [[2.0 * a, 2.0 * c, 0.0], [b, a + d, c], [0.0, 2.0 * b, 2.0 * d]];
    let rhs = [-1.0, 0.0, -1.0];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut sol = [0.0; 3];
    for (k, x) in sol.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *x = det3(&mk) / det;
    }
    let pm = Matrix2::new(sol[0], sol[1], sol[1], sol[2]);
    (pm.get(0, 0) > 0.0 && pm.det() > 0.0).then_some(pm)
}

/// Result of the limit-set diagnostic for one baseline trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaLimit {
    pub final_distance: f64,
    /// Distance at the start of the final monotone stretch.
    pub tail_start_distance: f64,
    pub reentries: usize,
    pub pass: bool,
}

/// Distance to the attractor in the norm induced by the Lyapunov matrix of
/// its Jacobian must end monotone below `tol`, the monotone stretch must
/// begin outside the `tol` ball, and the trajectory may re-enter the `eps`
/// ball at most [`N_REENTRY`] times.
pub fn omega_limit_check(traj: &Trajectory<SimplexState3, BaselineParams>, tol: f64, eps: f64) -> Result<OmegaLimit> {
    let p = &traj
        .segments
        .last()
        .ok_or_else(|| Error::RegimeMismatch("empty trajectory".into()))?
        .params;
    let target = baseline_attractor(p);
    let j = jacobian_baseline(p, &target);
    let pm =
        lyapunov_matrix(&j).ok_or_else(|| Error::RegimeMismatch("attractor is not hyperbolic and stable".into()))?;
    let dist: Vec<f64> = traj
        .states
        .iter()
        .map(|s| {
            let e = [s.l() - target.l(), s.r() - target.r()];
            let pe = pm.mul_vec(e);
            (e[0] * pe[0] + e[1] * pe[1]).max(0.0).sqrt()
        })
        .collect();
    let n = dist.len();
    let mut start = n - 1;
    while start > 0 && dist[start] <= dist[start - 1] + 1e-12 {
        start -= 1;
    }
    let mut reentries = 0;
    let mut inside = false;
    let mut entered = false;
    for &d in &dist {
        let now_inside = d <= eps;
        if now_inside && !inside {
            if entered {
                reentries += 1;
            }
            entered = true;
        }
        inside = now_inside;
    }
    let final_distance = dist[n - 1];
    let tail_start_distance = dist[start];
    let pass = final_distance < tol && (tail_start_distance >= tol || start == 0) && reentries <= N_REENTRY;
    Ok(OmegaLimit {
        final_distance,
        tail_start_distance,
        reentries,
        pass,
    })
}
