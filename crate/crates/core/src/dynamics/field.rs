//! Vector fields and Jacobians.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::model::{BaselineParams, FourGroupParams, SimplexPoint, SimplexState3, SimplexState4};
use crate::spectral::Matrix2;

/// An autonomous polynomial vector field on the free coordinates of a simplex.
pub trait VectorField<const N: usize>: Sync {
    type State: SimplexPoint + From<[f64; N]> + Into<[f64; N]>;

    fn eval(&self, y: &[f64; N]) -> [f64; N];
}

/// Baseline field `(dL/dt, dR/dt)`; `dC/dt = -(dL/dt + dR/dt)`.
pub fn rhs_baseline(p: &BaselineParams, s: &SimplexState3) -> [f64; 2] {
    baseline_eval(p, s.l(), s.r())
}

#[inline]
fn baseline_eval(p: &BaselineParams, l: f64, r: f64) -> [f64; 2] {
    let c = 1.0 - l - r;
    [
        p.alpha_l() * l * c - p.mu_l() * l + p.gamma_rl() * r * c,
        p.alpha_r() * r * c - p.mu_r() * r + p.gamma_lr() * l * c,
    ]
}

/// Four-group field `(dL/dt, dR/dt, dA/dt)` with no ongoing forcing.
pub fn rhs_4group(p: &FourGroupParams, s: &SimplexState4) -> [f64; 3] {
    four_group_eval(p, s.l(), s.r(), s.a())
}

#[inline]
fn four_group_eval(p: &FourGroupParams, l: f64, r: f64, a: f64) -> [f64; 3] {
    let b = p.base();
    let c = 1.0 - l - r - a;
    [
        // same term order as the baseline so the face A = 0 matches bit for bit
        b.alpha_l() * l * c - b.mu_l() * l + b.gamma_rl() * r * c + p.delta_l() * a * l,
        b.alpha_r() * r * c - b.mu_r() * r + b.gamma_lr() * l * c + p.delta_r() * a * r,
        -p.delta_l() * a * l - p.delta_r() * a * r - p.rho() * a,
    ]
}

impl VectorField<2> for BaselineParams {
    type State = SimplexState3;

    #[inline]
    fn eval(&self, y: &[f64; 2]) -> [f64; 2] {
        baseline_eval(self, y[0], y[1])
    }
}

impl VectorField<3> for FourGroupParams {
    type State = SimplexState4;

    #[inline]
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        four_group_eval(self, y[0], y[1], y[2])
    }
}

/// Wraps a closure as a vector field; used for perturbed fields in tests and
/// mutation checks.
pub struct FnField<S, F> {
    f: F,
    _state: PhantomData<fn() -> S>,
}

impl<S, F: Clone> Clone for FnField<S, F> {
    fn clone(&self) -> Self {
        Self::new(self.f.clone())
    }
}

impl<S, F> std::fmt::Debug for FnField<S, F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FnField")
    }
}

impl<S, F> FnField<S, F> {
    pub fn new(f: F) -> Self {
        Self { f, _state: PhantomData }
    }
}

impl<F> VectorField<2> for FnField<SimplexState3, F>
where
    F: Fn(&[f64; 2]) -> [f64; 2] + Sync,
{
    type State = SimplexState3;

    fn eval(&self, y: &[f64; 2]) -> [f64; 2] {
        (self.f)(y)
    }
}

impl<F> VectorField<3> for FnField<SimplexState4, F>
where
    F: Fn(&[f64; 3]) -> [f64; 3] + Sync,
{
    type State = SimplexState4;

    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        (self.f)(y)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    /// Leading 2x2 block.
    pub fn top_left(&self) -> Matrix2 {
        Matrix2::new(self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Jacobian of the baseline field.
///
/// Note that `J11` is `alpha_L (C - L) - mu_L - gamma_RL R`, not
/// `(alpha_L + gamma_RL)(C - L) - mu_L`: the cross term `gamma_RL R C`
/// depends on `L` only through `C`.
pub fn jacobian_baseline(p: &BaselineParams, s: &SimplexState3) -> Matrix2 {
    let (l, r) = (s.l(), s.r());
    let c = 1.0 - l - r;
    Matrix2::new(
        p.alpha_l() * (c - l) - p.mu_l() - p.gamma_rl() * r,
        p.gamma_rl() * (c - r) - p.alpha_l() * l,
        p.gamma_lr() * (c - l) - p.alpha_r() * r,
        p.alpha_r() * (c - r) - p.mu_r() - p.gamma_lr() * l,
    )
}

/// Jacobian of the four-group field.
pub fn jacobian_4group(p: &FourGroupParams, s: &SimplexState4) -> Matrix3 {
    let b = p.base();
    let (l, r, a) = (s.l(), s.r(), s.a());
    let c = 1.0 - l - r - a;
    let (al, ar) = (b.alpha_l(), b.alpha_r());
    let (grl, glr) = (b.gamma_rl(), b.gamma_lr());
    let (dl, dr) = (p.delta_l(), p.delta_r());
    Matrix3([
        [
            al * (c - l) - grl * r + dl * a - b.mu_l(),
            -al * l + grl * (c - r),
            -al * l - grl * r + dl * l,
        ],
        [
            -ar * r + glr * (c - l),
            ar * (c - r) - glr * l + dr * a - b.mu_r(),
            -ar * r - glr * l + dr * r,
        ],
        [-dl * a, -dr * a, -(dl * l + dr * r + p.rho())],
    ])
}

/// Reduced symmetric four-group field on `(P, A)`, where `L = R = P`.
pub fn rhs_reduced_symmetric(beta: f64, mu: f64, delta: f64, rho: f64, pa: [f64; 2]) -> [f64; 2] {
    let [p, a] = pa;
    [
        p * ((beta - mu) - 2.0 * beta * p + (delta - beta) * a),
        -(2.0 * delta * p + rho) * a,
    ]
}

/// Jacobian of [`rhs_reduced_symmetric`].
pub fn jacobian_reduced_symmetric(beta: f64, mu: f64, delta: f64, rho: f64, pa: [f64; 2]) -> Matrix2 {
    let [p, a] = pa;
    Matrix2::new(
        (beta - mu) - 4.0 * beta * p + (delta - beta) * a,
        (delta - beta) * p,
        -2.0 * delta * a,
        -(2.0 * delta * p + rho),
    )
}

/// Central-difference Jacobian of any field, column `j` from a step `h` in
/// coordinate `j`.
pub fn jacobian_fd<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [[f64; N]; N] {
    let mut jac = [[0.0; N]; N];
    for j in 0..N {
        let mut yp = *y;
        let mut ym = *y;
        yp[j] += h;
        ym[j] -= h;
        let (fp, fm) = (f(&yp), f(&ym));
        for i in 0..N {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(alpha: f64, gamma: f64, mu: f64) -> BaselineParams {
        BaselineParams::symmetric(alpha, gamma, mu).unwrap()
    }

    #[test]
    fn equilibria_of_baseline() {
        let p = sym(0.25, 0.15, 0.2);
        assert_eq!(rhs_baseline(&p, &SimplexState3::raw(0.0, 0.0)), [0.0, 0.0]);
        let f = rhs_baseline(&p, &SimplexState3::raw(0.25, 0.25));
        assert!(f[0].abs() < 1e-16 && f[1].abs() < 1e-16);
    }

    #[test]
    fn face_inflow() {
        let p = BaselineParams::new(0.15, 0.2, 0.3, 0.35, 0.08, 0.12).unwrap();
        let f = rhs_baseline(&p, &SimplexState3::raw(0.0, 0.5));
        assert!((f[0] - 0.08 * 0.25).abs() < 1e-16);
    }

    #[test]
    fn four_group_restricts_to_baseline() {
        let base = BaselineParams::new(0.15, 0.2, 0.3, 0.35, 0.08, 0.12).unwrap();
        let p = FourGroupParams::new(base, 0.7, 0.55, 0.12).unwrap();
        let f4 = rhs_4group(&p, &SimplexState4::raw(0.2, 0.1, 0.0));
        let f3 = rhs_baseline(&base, &SimplexState3::raw(0.2, 0.1));
        assert_eq!([f4[0], f4[1]], f3);
        assert_eq!(f4[2], 0.0);

        let f = rhs_4group(&p, &SimplexState4::raw(0.0, 0.0, 0.4));
        assert_eq!(f, [0.0, 0.0, -0.12 * 0.4]);
    }

    #[test]
    fn diagonal_matches_reduced_field() {
        let base = sym(0.2, 0.1, 0.4);
        let p = FourGroupParams::new(base, 0.7, 0.7, 0.1).unwrap();
        let f = rhs_4group(&p, &SimplexState4::raw(0.05, 0.05, 0.3));
        let g = rhs_reduced_symmetric(0.3, 0.4, 0.7, 0.1, [0.05, 0.3]);
        assert_eq!(f[0], f[1]);
        assert!((f[0] - g[0]).abs() < 1e-16);
        assert!((f[2] - g[1]).abs() < 1e-16);
    }

    #[test]
    fn jacobian_at_origin() {
        let p = BaselineParams::new(0.15, 0.2, 0.3, 0.35, 0.08, 0.12).unwrap();
        let j = jacobian_baseline(&p, &SimplexState3::raw(0.0, 0.0));
        assert_eq!(j, Matrix2::new(0.15 - 0.3, 0.08, 0.12, 0.2 - 0.35));
    }

    #[test]
    fn symmetric_interior_eigenvalues() {
        let (alpha, gamma, mu) = (0.25, 0.15, 0.2);
        let beta = alpha + gamma;
        let ps = 0.5 * (1.0 - mu / beta);
        let j = jacobian_baseline(&sym(alpha, gamma, mu), &SimplexState3::raw(ps, ps));
        let ev = j.eigenvalues();
        let mut got = [ev[0].re, ev[1].re];
        got.sort_by(f64::total_cmp);
        let mut want = [mu - beta, -2.0 * gamma * mu / beta];
        want.sort_by(f64::total_cmp);
        assert!((got[0] - want[0]).abs() < 1e-14 && (got[1] - want[1]).abs() < 1e-14);
    }

    #[test]
    fn four_group_jacobian_at_origin() {
        let base = BaselineParams::new(0.15, 0.2, 0.3, 0.35, 0.08, 0.12).unwrap();
        let p = FourGroupParams::new(base, 0.7, 0.55, 0.12).unwrap();
        let j = jacobian_4group(&p, &SimplexState4::raw(0.0, 0.0, 0.0));
        let g = base.recruitment().sub(&base.decay());
        assert_eq!(j.top_left(), g);
        assert_eq!([j.get(0, 2), j.get(1, 2), j.get(2, 0), j.get(2, 1)], [0.0; 4]);
        assert_eq!(j.get(2, 2), -0.12);
    }

    #[test]
    fn reduced_jacobian_at_interior() {
        let (beta, mu, delta, rho) = (0.45, 0.4, 0.7, 0.1);
        let ps = 0.5 * (1.0 - mu / beta);
        let j = jacobian_reduced_symmetric(beta, mu, delta, rho, [ps, 0.0]);
        assert!((j.get(0, 0) + (beta - mu)).abs() < 1e-15);
        assert_eq!(j.get(1, 0), 0.0);
        assert_eq!(j.get(1, 1), -(2.0 * delta * ps + rho));
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let base = BaselineParams::new(0.4, 0.25, 0.28, 0.32, 0.15, 0.08).unwrap();
        let p = FourGroupParams::new(base, 0.75, 0.6, 0.1).unwrap();
        let y3 = [0.2, 0.3];
        let fd = jacobian_fd(|y| base.eval(y), &y3, 1e-6);
        let j = jacobian_baseline(&base, &y3.into());
        for i in 0..2 {
            for k in 0..2 {
                assert!((fd[i][k] - j.get(i, k)).abs() < 1e-8);
            }
        }
        let y4 = [0.2, 0.1, 0.3];
        let fd = jacobian_fd(|y| p.eval(y), &y4, 1e-6);
        let j = jacobian_4group(&p, &y4.into());
        for i in 0..3 {
            for k in 0..3 {
                assert!((fd[i][k] - j.get(i, k)).abs() < 1e-8);
            }
        }
    }
}
