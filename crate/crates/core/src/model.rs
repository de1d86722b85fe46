//! Parameter and state containers shared by every other module.
//!
//! States store only the free coordinates; the centrist share `C` is always
//! derived as the residual, so `L + R (+ A) + C = 1` holds by construction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Matrix2;

/// Default tolerance for [`project_to_simplex`]. Drift beyond this is
/// reported as an error rather than silently clamped.
pub const PROJECTION_TOL: f64 = 1e-9;

/// Row-sum tolerance for electorate rows rounded to three decimals.
pub const ELECTORATE_ROW_TOL: f64 = 5e-4;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter(name))
    }
}

/// Rates of the three-group model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    alpha_l: f64,
    alpha_r: f64,
    mu_l: f64,
    mu_r: f64,
    gamma_rl: f64,
    gamma_lr: f64,
}

/// Validates six raw rates, in the order
/// `(alpha_l, alpha_r, mu_l, mu_r, gamma_rl, gamma_lr)`.
pub fn validate_baseline(raw: [f64; 6]) -> Result<BaselineParams> {
    BaselineParams::new(raw[0], raw[1], raw[2], raw[3], raw[4], raw[5])
}

impl BaselineParams {
    pub fn new(alpha_l: f64, alpha_r: f64, mu_l: f64, mu_r: f64, gamma_rl: f64, gamma_lr: f64) -> Result<Self> {
        Ok(Self {
            alpha_l: positive("alpha_L", alpha_l)?,
            alpha_r: positive("alpha_R", alpha_r)?,
            mu_l: positive("mu_L", mu_l)?,
            mu_r: positive("mu_R", mu_r)?,
            gamma_rl: positive("gamma_RL", gamma_rl)?,
            gamma_lr: positive("gamma_LR", gamma_lr)?,
        })
    }

    /// Symmetric parameters: `alpha_L = alpha_R`, `mu_L = mu_R`, `gamma_RL = gamma_LR`.
    pub fn symmetric(alpha: f64, gamma: f64, mu: f64) -> Result<Self> {
        Self::new(alpha, alpha, mu, mu, gamma, gamma)
    }

    pub fn alpha_l(&self) -> f64 {
        self.alpha_l
    }
    pub fn alpha_r(&self) -> f64 {
        self.alpha_r
    }
    pub fn mu_l(&self) -> f64 {
        self.mu_l
    }
    pub fn mu_r(&self) -> f64 {
        self.mu_r
    }
    pub fn gamma_rl(&self) -> f64 {
        self.gamma_rl
    }
    pub fn gamma_lr(&self) -> f64 {
        self.gamma_lr
    }

    /// Recruitment matrix `[[alpha_L, gamma_RL], [gamma_LR, alpha_R]]`.
    pub fn recruitment(&self) -> Matrix2 {
        Matrix2::new(self.alpha_l, self.gamma_rl, self.gamma_lr, self.alpha_r)
    }

    /// Deradicalisation (decay) matrix `diag(mu_L, mu_R)`.
    pub fn decay(&self) -> Matrix2 {
        Matrix2::diagonal(self.mu_l, self.mu_r)
    }

    pub fn is_symmetric(&self) -> bool {
        self.alpha_l == self.alpha_r && self.mu_l == self.mu_r && self.gamma_rl == self.gamma_lr
    }

    /// `(alpha + gamma, mu)` when the parameters are symmetric.
    pub fn symmetric_beta_mu(&self) -> Option<(f64, f64)> {
        self.is_symmetric().then_some((self.alpha_l + self.gamma_rl, self.mu_l))
    }

    /// Adds `dgamma` to both reactive-polarisation rates.
    pub fn with_gamma_shift(&self, dgamma: f64) -> Result<Self> {
        Self::new(
            self.alpha_l,
            self.alpha_r,
            self.mu_l,
            self.mu_r,
            self.gamma_rl + dgamma,
            self.gamma_lr + dgamma,
        )
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.alpha_l,
            self.alpha_r,
            self.mu_l,
            self.mu_r,
            self.gamma_rl,
            self.gamma_lr,
        ]
    }
}

/// Baseline rates plus the disengagement channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourGroupParams {
    base: BaselineParams,
    delta_l: f64,
    delta_r: f64,
    rho: f64,
}

impl FourGroupParams {
    pub fn new(base: BaselineParams, delta_l: f64, delta_r: f64, rho: f64) -> Result<Self> {
        Ok(Self {
            base,
            delta_l: positive("delta_L", delta_l)?,
            delta_r: positive("delta_R", delta_r)?,
            rho: positive("rho", rho)?,
        })
    }

    pub fn base(&self) -> &BaselineParams {
        &self.base
    }
    pub fn delta_l(&self) -> f64 {
        self.delta_l
    }
    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Mobilisation matrix `diag(delta_L, delta_R)`.
    pub fn mobilisation(&self) -> Matrix2 {
        Matrix2::diagonal(self.delta_l, self.delta_r)
    }

    pub fn is_symmetric(&self) -> bool {
        self.base.is_symmetric() && self.delta_l == self.delta_r
    }

    pub fn with_base(&self, base: BaselineParams) -> Self {
        Self { base, ..*self }
    }
}

/// Symmetric parameterisation; `beta = alpha + gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    alpha: f64,
    gamma: f64,
    mu: f64,
    delta: Option<f64>,
    rho: Option<f64>,
}

impl SymmetricParams {
    pub fn new(alpha: f64, gamma: f64, mu: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            gamma: positive("gamma", gamma)?,
            mu: positive("mu", mu)?,
            delta: None,
            rho: None,
        })
    }

    pub fn with_disengagement(self, delta: f64, rho: f64) -> Result<Self> {
        Ok(Self {
            delta: Some(positive("delta", delta)?),
            rho: Some(positive("rho", rho)?),
            ..self
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }
    pub fn beta(&self) -> f64 {
        self.alpha + self.gamma
    }

    /// Structural shift `beta -> beta + dbeta`, carried entirely by `gamma`.
    pub fn shift_beta(&self, dbeta: f64) -> Result<Self> {
        if !(dbeta.is_finite() && dbeta >= 0.0) {
            return Err(Error::InvalidShock(format!("dbeta = {dbeta} must be >= 0")));
        }
        Ok(Self {
            gamma: self.gamma + dbeta,
            ..*self
        })
    }

    pub fn baseline(&self) -> BaselineParams {
        // fields already validated
        BaselineParams {
            alpha_l: self.alpha,
            alpha_r: self.alpha,
            mu_l: self.mu,
            mu_r: self.mu,
            gamma_rl: self.gamma,
            gamma_lr: self.gamma,
        }
    }

    pub fn four_group(&self) -> Result<FourGroupParams> {
        let delta = self.delta.ok_or(Error::NonPositiveParameter("delta"))?;
        let rho = self.rho.ok_or(Error::NonPositiveParameter("rho"))?;
        FourGroupParams::new(self.baseline(), delta, delta, rho)
    }
}

/// Either model's parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Baseline(BaselineParams),
    FourGroup(FourGroupParams),
}

impl ModelParams {
    pub fn base(&self) -> &BaselineParams {
        match self {
            ModelParams::Baseline(p) => p,
            ModelParams::FourGroup(p) => p.base(),
        }
    }
}

/// A point on a probability simplex, stored by its free coordinates.
pub trait SimplexPoint: Copy + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Number of free coordinates.
    const DIM: usize;

    fn coords(&self) -> &[f64];

    /// Builds a point from exactly `DIM` coordinates without validation.
    fn from_coords(coords: &[f64]) -> Self;

    /// Residual centrist share.
    fn centrist(&self) -> f64 {
        1.0 - self.coords().iter().sum::<f64>()
    }

    /// Total radical share `L + R`.
    fn radical(&self) -> f64 {
        let c = self.coords();
        c[0] + c[1]
    }

    fn distance_inf(&self, other: &Self) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(L, R)` on the 2-simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexState3 {
    x: [f64; 2],
}

impl SimplexState3 {
    /// Unvalidated constructor; see [`project_to_simplex`].
    pub const fn raw(l: f64, r: f64) -> Self {
        Self { x: [l, r] }
    }

    /// Validated constructor, clamping rounding noise up to [`PROJECTION_TOL`].
    pub fn new(l: f64, r: f64) -> Result<Self> {
        project_to_simplex(Self::raw(l, r), PROJECTION_TOL)
    }

    pub fn l(&self) -> f64 {
        self.x[0]
    }
    pub fn r(&self) -> f64 {
        self.x[1]
    }
    pub fn c(&self) -> f64 {
        self.centrist()
    }

    pub fn to_array(self) -> [f64; 2] {
        self.x
    }
}

impl From<[f64; 2]> for SimplexState3 {
    fn from(x: [f64; 2]) -> Self {
        Self { x }
    }
}

impl From<SimplexState3> for [f64; 2] {
    fn from(s: SimplexState3) -> Self {
        s.x
    }
}

impl SimplexPoint for SimplexState3 {
    const DIM: usize = 2;

    fn coords(&self) -> &[f64] {
        &self.x
    }

    fn from_coords(coords: &[f64]) -> Self {
        Self {
            x: [coords[0], coords[1]],
        }
    }
}

/// `(L, R, A)` on the 3-simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexState4 {
    x: [f64; 3],
}

impl SimplexState4 {
    pub const fn raw(l: f64, r: f64, a: f64) -> Self {
        Self { x: [l, r, a] }
    }

    pub fn new(l: f64, r: f64, a: f64) -> Result<Self> {
        project_to_simplex(Self::raw(l, r, a), PROJECTION_TOL)
    }

    pub fn l(&self) -> f64 {
        self.x[0]
    }
    pub fn r(&self) -> f64 {
        self.x[1]
    }
    pub fn a(&self) -> f64 {
        self.x[2]
    }
    pub fn c(&self) -> f64 {
        self.centrist()
    }

    /// Embeds a baseline state on the face `A = 0`.
    pub fn on_baseline_face(s: SimplexState3) -> Self {
        Self::raw(s.l(), s.r(), 0.0)
    }

    pub fn to_array(self) -> [f64; 3] {
        self.x
    }
}

impl From<[f64; 3]> for SimplexState4 {
    fn from(x: [f64; 3]) -> Self {
        Self { x }
    }
}

impl From<SimplexState4> for [f64; 3] {
    fn from(s: SimplexState4) -> Self {
        s.x
    }
}

impl SimplexPoint for SimplexState4 {
    const DIM: usize = 3;

    fn coords(&self) -> &[f64] {
        &self.x
    }

    fn from_coords(coords: &[f64]) -> Self {
        Self {
            x: [coords[0], coords[1], coords[2]],
        }
    }
}

/// Clamps free coordinates in place so that each lies in `[0, 1]` and their
/// sum is at most 1. Fails if any coordinate is below `-tol` or the sum
/// exceeds `1 + tol`.
pub fn project_coords(coords: &mut [f64], tol: f64) -> Result<()> {
    let mut sum = 0.0;
    for &x in coords.iter() {
        if !x.is_finite() {
            return Err(Error::SimplexViolation {
                excess: f64::INFINITY,
                tol,
            });
        }
        if x < -tol {
            return Err(Error::SimplexViolation { excess: -x, tol });
        }
        sum += x;
    }
    if sum > 1.0 + tol {
        return Err(Error::SimplexViolation { excess: sum - 1.0, tol });
    }
    for x in coords.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    loop {
        let sum: f64 = coords.iter().sum();
        if sum <= 1.0 {
            return Ok(());
        }
        let (imax, _) = coords.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &x)| {
                if x > acc.1 {
                    (i, x)
                } else {
                    acc
                }
            },
        );
        let excess = (sum - 1.0).max(f64::EPSILON * coords[imax]);
        coords[imax] = (coords[imax] - excess).max(0.0);
    }
}

/// Projects a state onto its simplex; idempotent for inputs within `tol`.
pub fn project_to_simplex<S: SimplexPoint>(state: S, tol: f64) -> Result<S> {
    let mut buf = [0.0; 4];
    let coords = &mut buf[..S::DIM];
    coords.copy_from_slice(state.coords());
    project_coords(coords, tol)?;
    Ok(S::from_coords(coords))
}

/// One election expressed as fractions of the eligible electorate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectorateRow {
    pub year: String,
    /// Radical share `V = L + R`.
    pub v: f64,
    /// Mainstream plus residual parties.
    pub c: f64,
    /// Non-voters.
    pub a: f64,
}

impl ElectorateRow {
    pub fn with_year(mut self, year: impl Into<String>) -> Self {
        self.year = year.into();
        self
    }

    pub fn total(&self) -> f64 {
        self.v + self.c + self.a
    }
}

/// Maps a radical vote share (of votes cast) and turnout (of eligible
/// voters) to electorate fractions: `V = share * turnout`, `A = 1 - turnout`,
/// `C = 1 - V - A`.
pub fn proxy_decompose(radical_vote_share: f64, turnout: f64) -> Result<ElectorateRow> {
    for (name, value) in [("radical_vote_share", radical_vote_share), ("turnout", turnout)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { name, value });
        }
    }
    let v = radical_vote_share * turnout;
    let a = 1.0 - turnout;
    Ok(ElectorateRow {
        year: String::new(),
        v,
        c: 1.0 - v - a,
        a,
    })
}
