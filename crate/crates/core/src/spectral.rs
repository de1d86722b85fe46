//! Perron roots, spectral bounds and shock thresholds for the 2x2 matrices
//! of the two-wing models.
//!
//! Everything is closed form. The next-generation matrix is `M^-1 K`, with
//! `K` the recruitment matrix, `M = diag(mu)` and `D = diag(delta)` the
//! mobilisation matrix of the four-group model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BaselineParams, FourGroupParams};

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2(pub [[f64; 2]; 2]);

impl Matrix2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self([[a11, a12], [a21, a22]])
    }

    pub const fn diagonal(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, 0.0, d2)
    }

    pub const fn identity() -> Self {
        Self::diagonal(1.0, 1.0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// `(a11 - a22)^2 + 4 a12 a21`, which equals `tr^2 - 4 det` but avoids the
    /// cancellation of that form.
    pub fn discriminant(&self) -> f64 {
        let d = self.0[0][0] - self.0[1][1];
        d * d + 4.0 * self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.0[0][0]), f(self.0[0][1]), f(self.0[1][0]), f(self.0[1][1]))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.0[0][0] + other.0[0][0],
            self.0[0][1] + other.0[0][1],
            self.0[1][0] + other.0[1][0],
            self.0[1][1] + other.0[1][1],
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let a = &self.0;
        let b = &other.0;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Row vector times matrix, `v^T A`.
    pub fn vec_mul(&self, v: [f64; 2]) -> [f64; 2] {
        self.transpose().mul_vec(v)
    }

    /// `D^-1 A` for a diagonal `D`, i.e. each row divided by its diagonal entry.
    pub fn left_div_diagonal(&self, d: &Matrix2) -> Self {
        Self::new(
            self.0[0][0] / d.0[0][0],
            self.0[0][1] / d.0[0][0],
            self.0[1][0] / d.0[1][1],
            self.0[1][1] / d.0[1][1],
        )
    }

    pub fn is_metzler(&self) -> bool {
        self.0[0][1] >= 0.0 && self.0[1][0] >= 0.0
    }

    /// Both eigenvalues, the one with the larger real part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let tr = self.trace();
        let disc = self.discriminant();
        if disc >= 0.0 {
            let sq = disc.sqrt();
            if sq == 0.0 {
                let half = 0.5 * tr;
                return [Complex64::new(half, 0.0), Complex64::new(half, 0.0)];
            }
            // pick the root without cancellation, recover the other from det
            let (hi, lo) = if tr >= 0.0 {
                let hi = 0.5 * (tr + sq);
                let lo = if hi != 0.0 { self.det() / hi } else { 0.5 * (tr - sq) };
                (hi, lo)
            } else {
                let lo = 0.5 * (tr - sq);
                (self.det() / lo, lo)
            };
            [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
        } else {
            let im = 0.5 * (-disc).sqrt();
            [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
        }
    }
}

/// Dominant eigenvalue with right and left eigenvectors, each scaled to unit
/// coordinate sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub lambda_pf: f64,
    pub right: [f64; 2],
    pub left: [f64; 2],
}

fn normalise(v: [f64; 2]) -> [f64; 2] {
    let s = v[0] + v[1];
    if s > 0.0 {
        [v[0] / s, v[1] / s]
    } else {
        [0.5, 0.5]
    }
}

/// Dominant eigen-triple of a Metzler matrix (off-diagonals non-negative).
///
/// For an irreducible matrix both eigenvectors are strictly positive. With a
/// zero off-diagonal entry the vectors may have a zero component.
pub fn metzler_perron(b: &Matrix2) -> PerronData {
    let [[b11, b12], [b21, b22]] = b.0;
    debug_assert!(b.is_metzler(), "metzler_perron on {b:?}");
    let d = b11 - b22;
    let p = b12 * b21;
    let r = d.hypot(2.0 * p.sqrt());
    let lambda = 0.5 * (b11 + b22 + r);
    // lambda - b11 = (r - d)/2 and lambda - b22 = (r + d)/2; each is written
    // in the form that does not subtract nearly equal numbers.
    let (gap1, gap2) = if d > 0.0 {
        (2.0 * p / (r + d), 0.5 * (r + d))
    } else if d < 0.0 {
        (0.5 * (r - d), 2.0 * p / (r - d))
    } else {
        (0.5 * r, 0.5 * r)
    };
    let (right, left) = if d > 0.0 {
        ([gap2, b21], [gap2, b12])
    } else {
        ([b12, gap1], [b21, gap1])
    };
    PerronData {
        lambda_pf: lambda,
        right: normalise(right),
        left: normalise(left),
    }
}

/// Perron data of the next-generation matrix `M^-1 K`.
pub fn pf_root(k: &Matrix2, m: &Matrix2) -> PerronData {
    metzler_perron(&k.left_div_diagonal(m))
}

/// Largest real part over the eigenvalues of `g`.
pub fn spectral_bound(g: &Matrix2) -> f64 {
    g.eigenvalues()[0].re
}

/// Radicalisation number, the Perron root of `M^-1 K`.
pub fn r_rad(p: &BaselineParams) -> f64 {
    pf_root(&p.recruitment(), &p.decay()).lambda_pf
}

/// `(1 - delta) K + delta D`.
pub fn blend(k: &Matrix2, d: &Matrix2, delta: f64) -> Matrix2 {
    k.scale(1.0 - delta).add(&d.scale(delta))
}

/// Growth matrix `G(delta) = (1 - delta) K + delta D - M` of the linearisation
/// at the radical-free state after a shock of amplitude `delta`.
pub fn growth_matrix(k: &Matrix2, m: &Matrix2, d: &Matrix2, delta: f64) -> Matrix2 {
    blend(k, d, delta).sub(m)
}

/// Post-shock reproduction number `Phi(delta) = lambda_PF(M^-1 ((1-delta) K + delta D))`.
pub fn phi(delta: f64, k: &Matrix2, m: &Matrix2, d: &Matrix2) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
        });
    }
    Ok(pf_root(&blend(k, d, delta), m).lambda_pf)
}

/// Outcome of a shock-threshold computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ShockThreshold {
    /// Shocks strictly larger than this amplitude make the origin unstable.
    Critical(f64),
    /// No amplitude in `[0, 1)` destabilises the origin.
    ShockProof,
}

impl ShockThreshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            ShockThreshold::Critical(v) => Some(*v),
            ShockThreshold::ShockProof => None,
        }
    }
}

/// Coefficients `(q2, q1, q0)` of `det G(delta)` and its real roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRoots {
    pub coefficients: [f64; 3],
    /// Real roots in increasing order.
    pub roots: Vec<f64>,
}

/// Full detail of the asymmetric threshold computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymThresholdDetail {
    pub threshold: ShockThreshold,
    pub phi0: f64,
    pub phi1: f64,
    pub quadratic: QuadraticRoots,
    /// Root found by bisection on `Phi(delta) - 1`, when `Phi(1) > 1`.
    pub bisection: Option<f64>,
    /// Whether the algebraic root was accepted (otherwise bisection was used).
    pub algebraic_accepted: bool,
}

/// Real roots of `a x^2 + b x + c`, sorted.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // q carries the sign of b so neither root loses digits to cancellation
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Coefficients and roots of `det((K - M) + delta (D - K)) = 0`.
pub fn delta_c_quadratic(k: &Matrix2, m: &Matrix2, d: &Matrix2) -> QuadraticRoots {
    let a0 = k.sub(m);
    let a1 = d.sub(k);
    let q2 = a1.det();
    let q1 = a0.get(0, 0) * a1.get(1, 1) + a1.get(0, 0) * a0.get(1, 1)
        - a0.get(0, 1) * a1.get(1, 0)
        - a1.get(0, 1) * a0.get(1, 0);
    let q0 = a0.det();
    QuadraticRoots {
        coefficients: [q2, q1, q0],
        roots: quadratic_roots(q2, q1, q0),
    }
}

/// Bisection for `f(x) = 0` on `[lo, hi]` with `f(lo) < 0 < f(hi)`.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Critical shock amplitude for asymmetric parameters, with diagnostics.
pub fn delta_c_asym_detail(k: &Matrix2, m: &Matrix2, d: &Matrix2) -> Result<AsymThresholdDetail> {
    let phi_at = |x: f64| pf_root(&blend(k, d, x), m).lambda_pf;
    let phi0 = phi_at(0.0);
    let phi1 = phi_at(1.0);
    let quadratic = delta_c_quadratic(k, m, d);
    if phi0 >= 1.0 {
        return Err(Error::BaselineSupercritical(phi0));
    }
    if phi1 <= 1.0 {
        return Ok(AsymThresholdDetail {
            threshold: ShockThreshold::ShockProof,
            phi0,
            phi1,
            quadratic,
            bisection: None,
            algebraic_accepted: false,
        });
    }

    // Phi is convex with Phi(0) < 1 < Phi(1): exactly one crossing.
    let bisection = bisect(0.0, 1.0, |x| phi_at(x) - 1.0);

    // A root of det G is a threshold only on the branch where the dominant
    // eigenvalue of G is the one hitting zero, i.e. where tr G <= 0.
    let algebraic = quadratic
        .roots
        .iter()
        .copied()
        .filter(|&x| x > 0.0 && x < 1.0)
        .find(|&x| growth_matrix(k, m, d, x).trace() <= 0.0);
    let (value, algebraic_accepted) = match algebraic {
        Some(x) if (x - bisection).abs() <= 1e-9 => (x, true),
        _ => (bisection, false),
    };
    Ok(AsymThresholdDetail {
        threshold: ShockThreshold::Critical(value),
        phi0,
        phi1,
        quadratic,
        bisection: Some(bisection),
        algebraic_accepted,
    })
}

/// Critical shock amplitude `Delta_c^asym`: the crossing of `Phi(delta) = 1`.
pub fn delta_c_asym(k: &Matrix2, m: &Matrix2, d: &Matrix2) -> Result<ShockThreshold> {
    delta_c_asym_detail(k, m, d).map(|d| d.threshold)
}

/// [`delta_c_asym`] for a four-group parameter set.
pub fn delta_c_asym_params(p: &FourGroupParams) -> Result<ShockThreshold> {
    delta_c_asym(&p.base().recruitment(), &p.base().decay(), &p.mobilisation())
}

/// Symmetric critical amplitude `(mu - beta)/(delta - beta)`.
pub fn delta_c_sym(beta: f64, mu: f64, delta: f64) -> Result<ShockThreshold> {
    if beta >= mu {
        return Err(Error::Regime(format!(
            "beta = {beta} >= mu = {mu}: the radical-free state is already unstable"
        )));
    }
    if delta <= beta {
        return Err(Error::FormulaInapplicable(format!("delta = {delta} <= beta = {beta}")));
    }
    let v = (mu - beta) / (delta - beta);
    Ok(if v >= 1.0 {
        ShockThreshold::ShockProof
    } else {
        ShockThreshold::Critical(v)
    })
}
