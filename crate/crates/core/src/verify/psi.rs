//! The two-site map `ψ(x₁, x₂, g₁, g₂) = (−x₁, Ad_{g₁} x₂, g₁, g₁g₂g₁)` and
//! the starred gauge action it intertwines.

use crate::dynamics::extended::{gauge_transform, ExtendedState};
use crate::dynamics::ChainKind;
use crate::error::{Error, Result};
use crate::liealg::{AlgebraVector, GroupElement, LieContext};
use nalgebra::DMatrix;

fn check_two_site(es: &ExtendedState) -> Result<()> {
    if es.kind != ChainKind::Periodic || es.x.len() != 2 || es.g.len() != 2 {
        return Err(Error::InvalidArgument("ψ needs a two-site periodic extended state".into()));
    }
    Ok(())
}

fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(Error::Singular)
}

pub fn psi_map(es: &ExtendedState) -> Result<ExtendedState> {
    check_two_site(es)?;
    let (x1, x2) = (&es.x[0].0, &es.x[1].0);
    let (g1, g2) = (&es.g[0].0, &es.g[1].0);
    let g1i = inverse(g1)?;
    let mut out = es.clone();
    out.x = vec![AlgebraVector(-x1), AlgebraVector(g1 * x2 * &g1i)];
    out.g = vec![GroupElement(g1.clone()), GroupElement(g1 * g2 * g1)];
    Ok(out)
}

/// `(h₁, h₂)_* (x₁, x₂, g₁, g₂) = (Ad_{h₁} x₁, Ad_{h₁} x₂, h₁g₁h₂⁻¹, h₁g₂h₂⁻¹)`.
pub fn starred_action(es: &ExtendedState, h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<ExtendedState> {
    check_two_site(es)?;
    let h1i = inverse(h1)?;
    let h2i = inverse(h2)?;
    let mut out = es.clone();
    out.x = es.x.iter().map(|x| AlgebraVector(h1 * &x.0 * &h1i)).collect();
    out.g = es.g.iter().map(|g| GroupElement(h1 * &g.0 * &h2i)).collect();
    Ok(out)
}

/// `μ_*(x₁, x₂, g₁, g₂) = (x₁ + x₂, −Ad_{g₁⁻¹} x₁ − Ad_{g₂⁻¹} x₂)`.
pub fn starred_moment(es: &ExtendedState) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_two_site(es)?;
    let (x1, x2) = (&es.x[0].0, &es.x[1].0);
    let (g1, g2) = (&es.g[0].0, &es.g[1].0);
    let first = x1 + x2;
    let second = -(inverse(g1)? * x1 * g1) - inverse(g2)? * x2 * g2;
    Ok((first, second))
}

/// Largest componentwise `‖u − v‖_F / max(1, ‖u‖_F)`.
fn max_rel_diff(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).norm() / u.norm().max(1.0)).fold(0.0, f64::max)
}

/// `ψ(h·s)` against `h_*ψ(s)`, compared matrix by matrix in relative Frobenius norm.
pub fn psi_equivariance_check(es: &ExtendedState, h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64> {
    let lhs = psi_map(&gauge_transform(es, &[h1.clone(), h2.clone()])?)?;
    let rhs = starred_action(&psi_map(es)?, h1, h2)?;
    let flat = |s: &ExtendedState| -> Vec<DMatrix<f64>> {
        s.x.iter().map(|x| x.0.clone()).chain(s.g.iter().map(|g| g.0.clone())).collect()
    };
    Ok(max_rel_diff(&flat(&lhs), &flat(&rhs)))
}

/// Largest relative mismatch between the Casimirs `c_2..c_N` of
/// `μ_*(ψ(s))` and those of the swapped spin pair `(μ^{(2)}, μ^{(1)})`.
pub fn psi_leaf_residual(ctx: &LieContext, es: &ExtendedState) -> Result<f64> {
    let spins = es.spin_moments()?;
    let (m1, m2) = starred_moment(&psi_map(es)?)?;
    let mut worst = 0f64;
    for (a, b) in [(&m1, &spins[1]), (&m2, &spins[0])] {
        let (a, b) = (AlgebraVector(a.clone()), AlgebraVector(b.clone()));
        for d in 2..=ctx.n() {
            let (ca, cb) = (ctx.casimir(d, &a)?, ctx.casimir(d, &b)?);
            worst = worst.max((ca - cb).abs() / ca.abs().max(cb.abs()).max(1.0));
        }
    }
    Ok(worst)
}
