//! Angle variables on the extended space.
//!
//! Periodic (defining representation, weights `ε_j`):
//! `f = Π_i (s_i g_i s_{i+1}⁻¹)_{j_i j_{i+1}}`, cyclic, with `x_i = s_i⁻¹ y_i s_i`.
//!
//! Open (symmetric square, end vectors `e_j ⊗ e_j`):
//! `f = Π_{i=0}^{n} ((s_i g_i s_{i+1}⁻¹)_{j_i j_{i+1}})²`, where `s_0 ∈ SO(N)`
//! diagonalizes `x_0` (assumed symmetric) and `s_{n+1} ∈ SO(N)` diagonalizes
//! the symmetric part of `Ad_{g_n⁻¹} x_n`.

use super::extended::{conj_inv, real_eigen_frame, ExtendedState};
use super::ChainKind;
use crate::error::{Error, Result};
use crate::liealg::{AlgebraVector, LieContext};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// `log|f|` and the sign of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleValue {
    pub log_abs: f64,
    pub sign: f64,
}

impl AngleValue {
    fn from_factors(factors: &[f64]) -> Result<Self> {
        let mut log_abs = 0.0;
        let mut sign = 1.0;
        for &f in factors {
            if f == 0.0 || !f.is_finite() {
                return Err(Error::VanishingAngle);
            }
            log_abs += f.abs().ln();
            if f < 0.0 {
                sign = -sign;
            }
        }
        Ok(Self { log_abs, sign })
    }
}

/// Eigenvalues (descending) of `x` and `s = V⁻¹` with `x = s⁻¹ diag(λ) s`.
fn diagonalizer(x: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (vals, v) = real_eigen_frame(x)?;
    let s = v.try_inverse().ok_or(Error::Singular)?;
    Ok((vals, s))
}

/// Orthogonal `s ∈ SO(N)` with `sym(x) = sᵀ diag(λ) s`, `λ` descending.
fn orthogonal_diagonalizer(x: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = x.nrows();
    let sym = (x + x.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = vals.iter().fold(1f64, |m, v| m.max(v.abs()));
    for w in vals.windows(2) {
        if w[0] - w[1] <= crate::tolerances::REGULARITY_EPS * scale {
            return Err(Error::Spectrum(format!("repeated eigenvalue near {}", w[0])));
        }
    }
    let mut v = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    if v.determinant() < 0.0 {
        v.column_mut(n - 1).neg_mut();
    }
    Ok((vals, v.transpose()))
}

fn check_weights(weights: &[usize], len: usize, n: usize) -> Result<()> {
    if weights.len() != len {
        return Err(Error::DimensionMismatch { expected: len, found: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| **w >= n) {
        return Err(Error::InvalidArgument(format!("weight index {w} outside 0..{n}")));
    }
    Ok(())
}

/// Periodic angle variable; `weights[i]` is the index `j_{i+1}` at site `i+1`.
pub fn angle_periodic(es: &ExtendedState, weights: &[usize]) -> Result<AngleValue> {
    if es.kind != ChainKind::Periodic {
        return Err(Error::InvalidArgument("expected a periodic extended state".into()));
    }
    let ns = es.sites();
    check_weights(weights, ns, es.dim())?;
    let frames: Vec<DMatrix<f64>> = es.x.iter().map(|x| diagonalizer(&x.0).map(|f| f.1)).collect::<Result<_>>()?;
    let mut factors = Vec::with_capacity(ns);
    for i in 0..ns {
        let next = (i + 1) % ns;
        let sinv = frames[next].clone().try_inverse().ok_or(Error::Singular)?;
        let m = &frames[i] * &es.g[i].0 * sinv;
        factors.push(m[(weights[i], weights[next])]);
    }
    AngleValue::from_factors(&factors)
}

fn open_frames(es: &ExtendedState) -> Result<Vec<DMatrix<f64>>> {
    let ns = es.sites();
    let mut frames = Vec::with_capacity(ns + 2);
    frames.push(orthogonal_diagonalizer(&es.x[0].0)?.1);
    for i in 1..=ns {
        frames.push(diagonalizer(&es.x[i].0)?.1);
    }
    let w = conj_inv(&es.g[ns].0, &es.x[ns].0)?;
    frames.push(orthogonal_diagonalizer(&w)?.1);
    Ok(frames)
}

fn open_factors(es: &ExtendedState, frames: &[DMatrix<f64>], weights: &[usize]) -> Result<Vec<f64>> {
    let ns = es.sites();
    let mut factors = Vec::with_capacity(ns + 1);
    for i in 0..=ns {
        let sinv = frames[i + 1].clone().try_inverse().ok_or(Error::Singular)?;
        let m = &frames[i] * &es.g[i].0 * sinv;
        let v = m[(weights[i], weights[i + 1])];
        factors.push(v * v);
    }
    Ok(factors)
}

/// Open angle variable; `weights` holds `j_0, …, j_{n+1}`.
pub fn angle_open(es: &ExtendedState, weights: &[usize]) -> Result<AngleValue> {
    if es.kind != ChainKind::Open {
        return Err(Error::InvalidArgument("expected an open extended state".into()));
    }
    check_weights(weights, es.sites() + 2, es.dim())?;
    let frames = open_frames(es)?;
    AngleValue::from_factors(&open_factors(es, &frames, weights)?)
}

/// Det-one diagonal sign matrices of size `n` (`2^{n−1}` of them).
pub fn sign_group(n: usize) -> Vec<DMatrix<f64>> {
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() % 2 == 0)
        .map(|mask| DMatrix::from_fn(n, n, |r, c| if r != c { 0.0 } else if mask >> r & 1 == 1 { -1.0 } else { 1.0 }))
        .collect()
}

/// Largest change of the open angle over all `m ∈ M` applied to the end frames
/// `s_0 → m s_0`, `s_{n+1} → m s_{n+1}`. Exactly zero for the symmetric square.
pub fn m_invariance_defect(es: &ExtendedState, weights: &[usize]) -> Result<f64> {
    let base = angle_open(es, weights)?;
    let frames = open_frames(es)?;
    let last = frames.len() - 1;
    let mut worst = 0f64;
    for m in sign_group(es.dim()) {
        let mut f = frames.clone();
        f[0] = &m * &frames[0];
        f[last] = &m * &frames[last];
        let v = AngleValue::from_factors(&open_factors(es, &f, weights)?)?;
        worst = worst.max((v.log_abs - base.log_abs).abs());
        if v.sign != base.sign {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

/// Predicted rate of `log|f|` under the flow of `c_d` at `site`.
///
/// Periodic: `(∇c_d(y_i))_{j_i j_i}`; open: twice that, with `y_0` the
/// eigenvalues of `x_0`.
pub fn angle_rate(ctx: &LieContext, es: &ExtendedState, weights: &[usize], site: usize, degree: usize) -> Result<f64> {
    let (x, j, factor) = match es.kind {
        ChainKind::Periodic => {
            if site == 0 || site > es.sites() {
                return Err(Error::InvalidArgument(format!("site {site} outside 1..={}", es.sites())));
            }
            (&es.x[site - 1].0, weights[site - 1], 1.0)
        }
        ChainKind::Open => {
            if site > es.sites() {
                return Err(Error::InvalidArgument(format!("site {site} outside 0..={}", es.sites())));
            }
            (&es.x[site].0, weights[site], 2.0)
        }
    };
    let vals = if es.kind == ChainKind::Open && site == 0 {
        orthogonal_diagonalizer(x)?.0
    } else {
        real_eigen_frame(x)?.0
    };
    let y = AlgebraVector(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)));
    let grad = ctx.gradient_invariant(degree, &y)?;
    Ok(factor * grad.0[(j, j)])
}
