//! Observables, gradients in chart coordinates, and the Poisson bracket.

use super::chart::DarbouxChart;
use super::{ChainKind, HamiltonianId, RadialState};
use crate::error::{Error, Result};
use crate::liealg::{matrix_power, LieContext};
use crate::openchain::reconstruct_open_from;
use crate::periodic::reconstruct_from;
use crate::scalar::Real;
use crate::tolerances::{FD_STEP, REGULARITY_EPS};
use nalgebra::{DMatrix, DVector};
use num_dual::Dual64;
use serde::{Deserialize, Serialize};

/// A smooth function of the chart coordinates.
pub trait Observable: Sync {
    /// Evaluate at flat coordinates `z` over any scalar type.
    fn eval<T: Real>(&self, ctx: &LieContext, chart: &DarbouxChart, z: &[T]) -> Result<T>;

    /// Hand-derived gradient, if available.
    fn analytic_gradient(&self, _ctx: &LieContext, _chart: &DarbouxChart, _z: &[f64]) -> Option<Result<DVector<f64>>> {
        None
    }
}

/// How gradients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
#[derive(Default)]
pub enum GradientMode {
    /// Closed-form partials where available, forward-mode dual numbers otherwise.
    #[default]
    Analytic,
    /// Forward-mode dual numbers.
    Autodiff,
    /// Central differences with step `rel_step · max(1, |z_i|)`.
    CentralDifference { rel_step: f64 },
}


impl GradientMode {
    pub fn central_difference() -> Self {
        Self::CentralDifference { rel_step: FD_STEP }
    }
}

/// Gradient of `obs` at `z`.
pub fn gradient<O: Observable>(
    obs: &O,
    ctx: &LieContext,
    chart: &DarbouxChart,
    z: &[f64],
    mode: GradientMode,
) -> Result<DVector<f64>> {
    let g = match mode {
        GradientMode::Analytic => match obs.analytic_gradient(ctx, chart, z) {
            Some(g) => g?,
            None => autodiff_gradient(obs, ctx, chart, z)?,
        },
        GradientMode::Autodiff => autodiff_gradient(obs, ctx, chart, z)?,
        GradientMode::CentralDifference { rel_step } => fd_gradient(obs, ctx, chart, z, rel_step)?,
    };
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Gradient("non-finite gradient component".into()));
    }
    Ok(g)
}

fn autodiff_gradient<O: Observable>(obs: &O, ctx: &LieContext, chart: &DarbouxChart, z: &[f64]) -> Result<DVector<f64>> {
    let mut dz: Vec<Dual64> = z.iter().map(|&v| Dual64::new(v, 0.0)).collect();
    let mut g = DVector::zeros(z.len());
    for i in 0..z.len() {
        dz[i].eps = 1.0;
        g[i] = obs.eval(ctx, chart, &dz)?.eps;
        dz[i].eps = 0.0;
    }
    Ok(g)
}

fn fd_gradient<O: Observable>(
    obs: &O,
    ctx: &LieContext,
    chart: &DarbouxChart,
    z: &[f64],
    rel_step: f64,
) -> Result<DVector<f64>> {
    let mut w = z.to_vec();
    let mut g = DVector::zeros(z.len());
    for i in 0..z.len() {
        let h = rel_step * z[i].abs().max(1.0);
        w[i] = z[i] + h;
        let fp = obs.eval(ctx, chart, &w)?;
        w[i] = z[i] - h;
        let fm = obs.eval(ctx, chart, &w)?;
        w[i] = z[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// `{F, G}` at `z` in trace normalization.
pub fn poisson_bracket<F: Observable, G: Observable>(
    f: &F,
    g: &G,
    ctx: &LieContext,
    chart: &DarbouxChart,
    z: &[f64],
    mode: GradientMode,
) -> Result<f64> {
    let gf = gradient(f, ctx, chart, z, mode)?;
    let gg = gradient(g, ctx, chart, z, mode)?;
    Ok(chart.bracket(z, &gf, &gg))
}

/// A single chart coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinate(pub usize);

impl Observable for Coordinate {
    fn eval<T: Real>(&self, _ctx: &LieContext, _chart: &DarbouxChart, z: &[T]) -> Result<T> {
        z.get(self.0).copied().ok_or(Error::DimensionMismatch { expected: self.0 + 1, found: z.len() })
    }
}

/// Matrix entry `μ^{(site)}_ij` of a spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinEntry {
    pub site: usize,
    pub i: usize,
    pub j: usize,
}

impl Observable for SpinEntry {
    fn eval<T: Real>(&self, _ctx: &LieContext, chart: &DarbouxChart, z: &[T]) -> Result<T> {
        let s = chart.unpack(z)?;
        let spins = match &s {
            RadialState::Periodic(s) => &s.spins,
            RadialState::Open(s) => &s.spins,
        };
        let sp = spins
            .get(self.site.wrapping_sub(1))
            .ok_or_else(|| Error::InvalidArgument(format!("no site {}", self.site)))?;
        Ok(sp.matrix()[(self.i, self.j)])
    }
}

/// Entry `μ′_ij` (left) or `μ″_ij` (right) of a boundary matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEntry {
    pub right: bool,
    pub i: usize,
    pub j: usize,
}

impl Observable for BoundaryEntry {
    fn eval<T: Real>(&self, _ctx: &LieContext, chart: &DarbouxChart, z: &[T]) -> Result<T> {
        match chart.unpack(z)? {
            RadialState::Open(s) => {
                let m = if self.right { &s.mu_right } else { &s.mu_left };
                Ok(m.matrix[(self.i, self.j)])
            }
            RadialState::Periodic(_) => Err(Error::InvalidArgument("periodic chain has no boundary".into())),
        }
    }
}

impl Observable for HamiltonianId {
    fn eval<T: Real>(&self, ctx: &LieContext, chart: &DarbouxChart, z: &[T]) -> Result<T> {
        chart.unpack(z)?.hamiltonian(ctx, *self)
    }

    fn analytic_gradient(&self, ctx: &LieContext, chart: &DarbouxChart, z: &[f64]) -> Option<Result<DVector<f64>>> {
        Some(casimir_gradient(ctx, chart, z, *self))
    }
}

/// Closed-form gradient of `Tr((x^{(k)})^d)` in chart coordinates.
pub fn casimir_gradient(ctx: &LieContext, chart: &DarbouxChart, z: &[f64], h: HamiltonianId) -> Result<DVector<f64>> {
    let state = chart.unpack(z)?;
    let n = ctx.n();
    let d = h.degree;
    if d < 2 || d > n {
        return Err(Error::InvalidArgument(format!("Casimir degree {d} outside 2..={n}")));
    }
    crate::periodic::check_regular_q(state.q(), REGULARITY_EPS)?;
    let q = state.q().clone();
    let p = state.p().clone();
    let (spins, kind) = match &state {
        RadialState::Periodic(s) => (&s.spins, ChainKind::Periodic),
        RadialState::Open(s) => (&s.spins, ChainKind::Open),
    };
    let ns = spins.len();
    let mus: Vec<DMatrix<f64>> = spins.iter().map(|s| s.matrix()).collect();
    let k = h.site;
    let lo = if kind == ChainKind::Periodic { 1 } else { 0 };
    if k < lo || k > ns {
        return Err(Error::InvalidArgument(format!("site {k} outside {lo}..={ns}")));
    }

    let mut gmu = vec![DMatrix::<f64>::zeros(n, n); ns];
    let mut gq = DVector::<f64>::zeros(n);
    let mut gp = DVector::<f64>::zeros(n);
    let mut gl = DMatrix::<f64>::zeros(n, n);
    let mut gr = DMatrix::<f64>::zeros(n, n);

    let x = match &state {
        RadialState::Periodic(_) => reconstruct_from(&mus, &p, &q, k),
        RadialState::Open(s) => reconstruct_open_from(&s.mu_left.matrix, &s.mu_right.matrix, &mus, &p, &q, k),
    };
    // W_rc = ∂ Tr(x^d) / ∂x_rc.
    let w = matrix_power(&x, d - 1).transpose() * d as f64;

    for r in 0..n {
        gp[r] = w[(r, r)];
        for (l, g) in gmu.iter_mut().enumerate() {
            if l >= k {
                g[(r, r)] -= w[(r, r)];
            }
        }
    }

    match &state {
        RadialState::Periodic(_) => {
            for r in 0..n {
                for c in 0..n {
                    if r == c {
                        continue;
                    }
                    let a = (q[r] - q[c]).exp();
                    let am1 = a - 1.0;
                    let mut tot = 0.0;
                    for (l, m) in mus.iter().enumerate() {
                        let coef = if l < k { a / am1 } else { 1.0 / am1 };
                        gmu[l][(r, c)] += w[(r, c)] * coef;
                        tot += m[(r, c)];
                    }
                    let t = w[(r, c)] * (-tot / (am1 * am1)) * a;
                    gq[r] += t;
                    gq[c] -= t;
                }
            }
        }
        RadialState::Open(s) => {
            for r in 0..n {
                for c in 0..n {
                    if r == c {
                        continue;
                    }
                    let a = (q[r] - q[c]).exp();
                    let ai = 1.0 / a;
                    let den = a - ai;
                    let wrc = w[(r, c)];
                    let mp = s.mu_left.matrix[(r, c)] - s.mu_left.matrix[(c, r)];
                    let mpp = s.mu_right.matrix[(r, c)] - s.mu_right.matrix[(c, r)];
                    gl[(r, c)] += wrc * a / den;
                    gl[(c, r)] -= wrc * a / den;
                    gr[(r, c)] += wrc / den;
                    gr[(c, r)] -= wrc / den;
                    let (mut big_p, mut big_r) = (mp, 0.0);
                    for (l, m) in mus.iter().enumerate() {
                        if l < k {
                            gmu[l][(r, c)] += wrc * a / den;
                            big_p += m[(r, c)] - m[(c, r)];
                        } else {
                            gmu[l][(r, c)] += wrc * ai / den;
                            big_p -= m[(c, r)];
                            big_r += m[(r, c)];
                        }
                        gmu[l][(c, r)] -= wrc * a / den;
                    }
                    let num = a * big_p + mpp + big_r * ai;
                    let dnum = big_p - big_r * ai * ai;
                    let dden = 1.0 + ai * ai;
                    let dx = (dnum * den - num * dden) / (den * den);
                    let t = wrc * dx * a;
                    gq[r] += t;
                    gq[c] -= t;
                }
            }
        }
    }

    let mut g = DVector::zeros(chart.len());
    g.rows_mut(chart.q_range().start, n).copy_from(&gq);
    g.rows_mut(chart.p_range().start, n).copy_from(&gp);
    for (l, s) in spins.iter().enumerate() {
        let m = &gmu[l];
        let gb = m * &s.a;
        let ga = m.transpose() * &s.b;
        g.rows_mut(chart.a_range(l + 1).start, n).copy_from(&ga);
        g.rows_mut(chart.b_range(l + 1).start, n).copy_from(&gb);
    }
    if kind == ChainKind::Open {
        for (range, m) in [(chart.left_range(), &gl), (chart.right_range(), &gr)] {
            let mut c = range.start;
            for i in 0..n {
                for j in i + 1..n {
                    g[c] = m[(i, j)] - m[(j, i)];
                    c += 1;
                }
            }
        }
    }
    Ok(g)
}
