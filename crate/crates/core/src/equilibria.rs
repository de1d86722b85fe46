//! Equilibria in closed form and their local stability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{jacobian_4group, jacobian_baseline, Matrix3, VectorField};
use crate::error::{Error, Result};
use crate::model::{BaselineParams, FourGroupParams, SimplexState3, SimplexState4};
use crate::spectral::{pf_root, Matrix2};

/// Real parts closer to zero than this are reported as nonhyperbolic.
pub const HYPERBOLIC_BAND: f64 = 1e-12;

/// Dead-band on the 2x2 discriminant separating node, star and focus.
pub const DISCRIMINANT_BAND: f64 = 1e-12;

/// Field residual accepted at a computed equilibrium.
pub const EQUILIBRIUM_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymmetricEquilibrium {
    Interior { p_star: f64, c_star: f64 },
    CentristOnly,
}

/// Interior equilibrium of the symmetric model: `P* = (1 - mu/beta)/2`,
/// `C* = mu/beta`, present only when `beta > mu`.
pub fn symmetric_equilibrium(beta: f64, mu: f64) -> SymmetricEquilibrium {
    if beta > mu {
        let c_star = mu / beta;
        SymmetricEquilibrium::Interior {
            p_star: 0.5 * (1.0 - c_star),
            c_star,
        }
    } else {
        SymmetricEquilibrium::CentristOnly
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum InteriorEquilibrium {
    Radicalised(SimplexState3),
    CentristOnly,
}

impl InteriorEquilibrium {
    pub fn state(&self) -> Option<SimplexState3> {
        match self {
            InteriorEquilibrium::Radicalised(s) => Some(*s),
            InteriorEquilibrium::CentristOnly => None,
        }
    }
}

/// Interior equilibrium of the baseline model from the Perron data of
/// `M^-1 K`: `C* = 1/lambda`, `(L*, R*) = (1 - C*) u` with `u1 + u2 = 1`.
pub fn interior_equilibrium(p: &BaselineParams) -> InteriorEquilibrium {
    let pd = pf_root(&p.recruitment(), &p.decay());
    if pd.lambda_pf <= 1.0 {
        return InteriorEquilibrium::CentristOnly;
    }
    let radical = 1.0 - 1.0 / pd.lambda_pf;
    InteriorEquilibrium::Radicalised(SimplexState3::raw(radical * pd.right[0], radical * pd.right[1]))
}

/// State the baseline flow converges to from any seeded initial condition.
pub fn baseline_attractor(p: &BaselineParams) -> SimplexState3 {
    interior_equilibrium(p).state().unwrap_or(SimplexState3::raw(0.0, 0.0))
}

/// Four-group attractor: the baseline attractor on the face `A = 0`.
pub fn four_group_attractor(p: &FourGroupParams) -> SimplexState4 {
    SimplexState4::on_baseline_face(baseline_attractor(p.base()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    StableNode,
    StableStar,
    StableFocus,
    Saddle,
    Unstable,
    Nonhyperbolic,
}

impl Classification {
    pub fn is_stable(&self) -> bool {
        matches!(
            self,
            Classification::StableNode | Classification::StableStar | Classification::StableFocus
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::StableNode => "stable_node",
            Classification::StableStar => "stable_star",
            Classification::StableFocus => "stable_focus",
            Classification::Saddle => "saddle",
            Classification::Unstable => "unstable",
            Classification::Nonhyperbolic => "nonhyperbolic",
        }
    }
}

/// Classifies a 2x2 Jacobian from trace, determinant and discriminant.
pub fn classify2(j: &Matrix2) -> Classification {
    let ev = j.eigenvalues();
    if ev.iter().any(|z| z.re.abs() <= HYPERBOLIC_BAND) {
        return Classification::Nonhyperbolic;
    }
    if j.det() < 0.0 {
        return Classification::Saddle;
    }
    if j.trace() > 0.0 {
        return Classification::Unstable;
    }
    let disc = j.discriminant();
    if disc < -DISCRIMINANT_BAND {
        Classification::StableFocus
    } else if disc.abs() <= DISCRIMINANT_BAND
        && j.get(0, 1).abs() <= DISCRIMINANT_BAND.sqrt()
        && j.get(1, 0).abs() <= DISCRIMINANT_BAND.sqrt()
    {
        Classification::StableStar
    } else {
        Classification::StableNode
    }
}

/// Eigenvalues of a block-triangular 3x3 matrix whose third coordinate
/// decouples (zero bottom-left or top-right block).
pub fn eigenvalues3(j: &Matrix3) -> Result<[Complex64; 3]> {
    let lower_zero = j.get(2, 0) == 0.0 && j.get(2, 1) == 0.0;
    let upper_zero = j.get(0, 2) == 0.0 && j.get(1, 2) == 0.0;
    if !(lower_zero || upper_zero) {
        return Err(Error::FormulaInapplicable(
            "3x3 Jacobian is not block triangular".into(),
        ));
    }
    let [a, b] = j.top_left().eigenvalues();
    Ok([a, b, Complex64::new(j.get(2, 2), 0.0)])
}

/// Classifies a block-triangular 3x3 Jacobian.
pub fn classify3(j: &Matrix3) -> Result<Classification> {
    let ev = eigenvalues3(j)?;
    if ev.iter().any(|z| z.re.abs() <= HYPERBOLIC_BAND) {
        return Ok(Classification::Nonhyperbolic);
    }
    let positive = ev.iter().filter(|z| z.re > 0.0).count();
    Ok(match positive {
        0 => classify2(&j.top_left()),
        3 => Classification::Unstable,
        _ => Classification::Saddle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum E0Stability {
    Stable,
    Nonhyperbolic,
    Unstable,
}

/// Stability of the radical-free state from the trace and determinant of
/// `K - M`: stable iff `alpha_L + alpha_R < mu_L + mu_R` and
/// `(alpha_L - mu_L)(alpha_R - mu_R) > gamma_RL gamma_LR`.
pub fn e0_stability(p: &BaselineParams) -> E0Stability {
    let trace = p.alpha_l() + p.alpha_r() - p.mu_l() - p.mu_r();
    let det = (p.alpha_l() - p.mu_l()) * (p.alpha_r() - p.mu_r()) - p.gamma_rl() * p.gamma_lr();
    if det.abs() <= HYPERBOLIC_BAND {
        E0Stability::Nonhyperbolic
    } else if trace < 0.0 && det > 0.0 {
        E0Stability::Stable
    } else {
        E0Stability::Unstable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Centrist,
    Interior,
}

/// Location, eigenvalues and classification of one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport<S> {
    pub kind: EquilibriumKind,
    pub exists: bool,
    pub reason: String,
    pub location: Option<S>,
    pub classification: Option<Classification>,
    pub eigenvalues: Vec<Complex64>,
    /// `|F(x*)|_inf`.
    pub residual: Option<f64>,
}

impl<S> EquilibriumReport<S> {
    fn missing(kind: EquilibriumKind, reason: String) -> Self {
        Self {
            kind,
            exists: false,
            reason,
            location: None,
            classification: None,
            eigenvalues: Vec::new(),
            residual: None,
        }
    }
}

fn residual<const N: usize, F: VectorField<N>>(f: &F, s: F::State) -> f64 {
    f.eval(&s.into()).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Reports for the radical-free and interior equilibria of the baseline model.
pub fn baseline_reports(p: &BaselineParams) -> [EquilibriumReport<SimplexState3>; 2] {
    let origin = SimplexState3::raw(0.0, 0.0);
    let j0 = jacobian_baseline(p, &origin);
    let e0 = EquilibriumReport {
        kind: EquilibriumKind::Centrist,
        exists: true,
        reason: "the radical-free state is always an equilibrium".into(),
        location: Some(origin),
        classification: Some(classify2(&j0)),
        eigenvalues: j0.eigenvalues().to_vec(),
        residual: Some(residual(p, origin)),
    };
    let lambda = pf_root(&p.recruitment(), &p.decay()).lambda_pf;
    let e1 = match interior_equilibrium(p) {
        InteriorEquilibrium::Radicalised(s) => {
            let j = jacobian_baseline(p, &s);
            EquilibriumReport {
                kind: EquilibriumKind::Interior,
                exists: true,
                reason: format!("Perron root {lambda} > 1"),
                location: Some(s),
                classification: Some(classify2(&j)),
                eigenvalues: j.eigenvalues().to_vec(),
                residual: Some(residual(p, s)),
            }
        }
        InteriorEquilibrium::CentristOnly => {
            EquilibriumReport::missing(EquilibriumKind::Interior, format!("Perron root {lambda} <= 1"))
        }
    };
    [e0, e1]
}

/// Reports for the four-group equilibria, which sit on the face `A = 0`.
pub fn four_group_reports(p: &FourGroupParams) -> Result<[EquilibriumReport<SimplexState4>; 2]> {
    let [b0, b1] = baseline_reports(p.base());
    let lift = |r: EquilibriumReport<SimplexState3>| -> Result<EquilibriumReport<SimplexState4>> {
        let Some(s3) = r.location else {
            return Ok(EquilibriumReport::missing(r.kind, r.reason));
        };
        let s = SimplexState4::on_baseline_face(s3);
        let j = jacobian_4group(p, &s);
        Ok(EquilibriumReport {
            kind: r.kind,
            exists: true,
            reason: r.reason,
            location: Some(s),
            classification: Some(classify3(&j)?),
            eigenvalues: eigenvalues3(&j)?.to_vec(),
            residual: Some(residual(p, s)),
        })
    };
    Ok([lift(b0)?, lift(b1)?])
}

/// Scalar symmetric field `f(P; beta, mu) = P((beta - mu) - 2 beta P)`.
pub fn scalar_field(p: f64, beta: f64, mu: f64) -> f64 {
    p * ((beta - mu) - 2.0 * beta * p)
}

/// Values `(f, f_P, f_PP, f_Pbeta)` at the bifurcation point `(P, beta) = (0, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranscriticalCertificate {
    pub f: f64,
    pub f_p: f64,
    pub f_pp: f64,
    pub f_pbeta: f64,
}

impl TranscriticalCertificate {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f, self.f_p, self.f_pp, self.f_pbeta]
    }

    /// Non-degeneracy: `f = f_P = 0`, `f_PP != 0`, `f_Pbeta != 0`.
    pub fn is_transcritical(&self) -> bool {
        self.f == 0.0 && self.f_p == 0.0 && self.f_pp != 0.0 && self.f_pbeta != 0.0
    }
}

pub fn transcritical_certificate(mu: f64) -> Result<TranscriticalCertificate> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::NonPositiveParameter("mu"));
    }
    let (p, beta) = (0.0, mu);
    Ok(TranscriticalCertificate {
        f: scalar_field(p, beta, mu),
        f_p: (beta - mu) - 4.0 * beta * p,
        f_pp: -4.0 * beta,
        f_pbeta: 1.0 - 2.0 * p,
    })
}
