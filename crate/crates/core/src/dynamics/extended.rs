//! The unreduced (extended) phase space, exact flows, and gauge fixing back
//! to radial coordinates.
//!
//! Periodic: `x_1..x_n`, `g_1..g_n`, moment `μ^{(i)} = x_i − Ad_{g_{i−1}⁻¹} x_{i−1}`
//! (cyclic). Open: `x_0..x_n`, `g_0..g_n`, spins as above for `i = 1..n`,
//! boundaries `π(x_0)` and `−π(Ad_{g_n⁻¹} x_n)`.

use super::{ChainKind, HamiltonianId, RadialState};
use crate::error::{Error, Result};
use crate::liealg::{AlgebraVector, GroupElement, LieContext};
use crate::openchain::{reconstruct_open_from, OpenRadialState};
use crate::orbits::{factor_rank1, normalize_gauge, KOrbitPoint};
use crate::periodic::{reconstruct_from, PeriodicRadialState};
use crate::scalar::Real;
use crate::tolerances::REGULARITY_EPS;
use nalgebra::{DMatrix, DVector};

/// Point of the extended space with the orbit labels needed to gauge fix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub kind: ChainKind,
    pub x: Vec<AlgebraVector<f64>>,
    pub g: Vec<GroupElement<f64>>,
    pub xis: Vec<f64>,
    pub left_spectrum: Vec<f64>,
    pub right_spectrum: Vec<f64>,
}

impl ExtendedState {
    /// Number of spin sites `n`.
    pub fn sites(&self) -> usize {
        self.xis.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].dim()
    }

    fn index_of_site(&self, site: usize) -> Result<usize> {
        let n = self.sites();
        match self.kind {
            ChainKind::Periodic if (1..=n).contains(&site) => Ok(site - 1),
            ChainKind::Open if site <= n => Ok(site),
            _ => Err(Error::InvalidArgument(format!("site {site} not valid for this chain"))),
        }
    }

    /// `x` at a chain site (periodic `1..=n`, open `0..=n`).
    pub fn x_at(&self, site: usize) -> Result<&AlgebraVector<f64>> {
        Ok(&self.x[self.index_of_site(site)?])
    }

    /// `c_d(x_site) = Tr(x^d)`.
    pub fn hamiltonian(&self, ctx: &LieContext, h: HamiltonianId) -> Result<f64> {
        ctx.casimir(h.degree, self.x_at(h.site)?)
    }

    /// Spin moments `μ^{(1)}, …, μ^{(n)}`.
    pub fn spin_moments(&self) -> Result<Vec<DMatrix<f64>>> {
        let xs: Vec<_> = self.x.iter().map(|x| x.0.clone()).collect();
        let gs: Vec<_> = self.g.iter().map(|g| g.0.clone()).collect();
        let n = self.sites();
        (1..=n)
            .map(|site| {
                let (y, z) = site_pair(self.kind, &xs, &gs, site)?;
                Ok(y - z)
            })
            .collect()
    }

    /// Boundary moments `(π(x_0), −π(Ad_{g_n⁻¹} x_n))` of the open chain.
    pub fn boundary_moments(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if self.kind != ChainKind::Open {
            return Err(Error::InvalidArgument("periodic chain has no boundary".into()));
        }
        let n = self.sites();
        let w = conj_inv(&self.g[n].0, &self.x[n].0)?;
        Ok((antisym(&self.x[0].0), -antisym(&w)))
    }
}

fn antisym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m - m.transpose()) * T::lit(0.5)
}

/// `Ad_{g⁻¹} x = g⁻¹ x g`.
pub(crate) fn conj_inv<T: Real>(g: &DMatrix<T>, x: &DMatrix<T>) -> Result<DMatrix<T>> {
    let gi = g.clone().try_inverse().ok_or(Error::Singular)?;
    Ok(gi * x * g)
}

/// The pair `(Y, Z)` whose words generate the conserved traces at a site.
///
/// Periodic `site ∈ 1..=n`: `(x_i, Ad_{g_{i−1}⁻¹} x_{i−1})`, indices mod `n`.
/// Open `site ∈ 0..=n+1`: `(x_0, x_0ᵀ)`, then as periodic for `1..=n`, then
/// `(W, Wᵀ)` with `W = Ad_{g_n⁻¹} x_n`.
pub fn site_pair<T: Real>(
    kind: ChainKind,
    x: &[DMatrix<T>],
    g: &[DMatrix<T>],
    site: usize,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    match kind {
        ChainKind::Periodic => {
            let n = x.len();
            if site == 0 || site > n {
                return Err(Error::InvalidArgument(format!("site {site} outside 1..={n}")));
            }
            let i = site - 1;
            let prev = (i + n - 1) % n;
            Ok((x[i].clone(), conj_inv(&g[prev], &x[prev])?))
        }
        ChainKind::Open => {
            let n = x.len() - 1;
            if site == 0 {
                Ok((x[0].clone(), x[0].transpose()))
            } else if site <= n {
                Ok((x[site].clone(), conj_inv(&g[site - 1], &x[site - 1])?))
            } else if site == n + 1 {
                let w = conj_inv(&g[n], &x[n])?;
                let wt = w.transpose();
                Ok((w, wt))
            } else {
                Err(Error::InvalidArgument(format!("site {site} outside 0..={}", n + 1)))
            }
        }
    }
}

/// Canonical extended representative of a radial state, as raw matrices.
///
/// Periodic: `x_i = x^{(i)}`, `g = (1, …, 1, e^q)`. Open: `x_k = x^{(k)}`,
/// `g = (1, …, 1, e^q)` with `n + 1` entries.
pub fn embed_matrices<T: Real>(state: &RadialState<T>) -> (Vec<DMatrix<T>>, Vec<DMatrix<T>>) {
    let n = state.dim();
    let torus = DMatrix::from_diagonal(&state.q().map(|v| v.exp()));
    match state {
        RadialState::Periodic(s) => {
            let mus = s.spin_matrices();
            let ns = s.sites();
            let x = (1..=ns).map(|i| reconstruct_from(&mus, &s.p, &s.q, i)).collect();
            let mut g = vec![DMatrix::identity(n, n); ns];
            g[ns - 1] = torus;
            (x, g)
        }
        RadialState::Open(s) => {
            let mus = s.spin_matrices();
            let ns = s.sites();
            let x = (0..=ns)
                .map(|k| reconstruct_open_from(&s.mu_left.matrix, &s.mu_right.matrix, &mus, &s.p, &s.q, k))
                .collect();
            let mut g = vec![DMatrix::identity(n, n); ns + 1];
            g[ns] = torus;
            (x, g)
        }
    }
}

/// Embed a radial state into the extended space.
pub fn embed_extended(ctx: &LieContext, state: &RadialState<f64>) -> Result<ExtendedState> {
    if state.dim() != ctx.n() {
        return Err(Error::DimensionMismatch { expected: ctx.n(), found: state.dim() });
    }
    crate::periodic::check_regular_q(state.q(), REGULARITY_EPS)?;
    let (x, g) = embed_matrices(state);
    let (xis, left, right) = match state {
        RadialState::Periodic(s) => (s.spins.iter().map(|p| p.xi).collect(), Vec::new(), Vec::new()),
        RadialState::Open(s) => (
            s.spins.iter().map(|p| p.xi).collect(),
            s.mu_left.spectrum.clone(),
            s.mu_right.spectrum.clone(),
        ),
    };
    Ok(ExtendedState {
        kind: state.kind(),
        x: x.into_iter().map(AlgebraVector).collect(),
        g: g.into_iter().map(GroupElement).collect(),
        xis,
        left_spectrum: left,
        right_spectrum: right,
    })
}

/// Exact flow of `c_d(x_site)` for time `t`: `g_site → exp(t ∇c_d(x_site)) g_site`.
pub fn flow_extended(ctx: &LieContext, es: &ExtendedState, site: usize, degree: usize, t: f64) -> Result<ExtendedState> {
    let idx = es.index_of_site(site)?;
    let grad = ctx.gradient_invariant(degree, &es.x[idx])?;
    let e = GroupElement::exp(&grad.scale(t));
    let mut out = es.clone();
    out.g[idx] = e.mul(&es.g[idx]);
    Ok(out)
}

/// Act by a gauge element.
///
/// Periodic: `hs = (h_1..h_n)`, `x_i → Ad_{h_i} x_i`, `g_i → h_i g_i h_{i+1}⁻¹`.
/// Open: `hs = (k_l, h_1..h_n, k_r)` with `k_l, k_r ∈ SO(N)`,
/// `x_i → Ad_{h_i} x_i`, `g_i → h_i g_i h_{i+1}⁻¹` for `i = 0..n`.
pub fn gauge_transform(es: &ExtendedState, hs: &[DMatrix<f64>]) -> Result<ExtendedState> {
    let m = es.x.len();
    let expected = match es.kind {
        ChainKind::Periodic => m,
        ChainKind::Open => m + 1,
    };
    if hs.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: hs.len() });
    }
    let inv: Vec<DMatrix<f64>> = hs
        .iter()
        .map(|h| h.clone().try_inverse().ok_or(Error::Singular))
        .collect::<Result<_>>()?;
    let mut out = es.clone();
    for i in 0..m {
        out.x[i] = AlgebraVector(&hs[i] * &es.x[i].0 * &inv[i]);
        let next = match es.kind {
            ChainKind::Periodic => (i + 1) % m,
            ChainKind::Open => i + 1,
        };
        out.g[i] = GroupElement(&hs[i] * &es.g[i].0 * &inv[next]);
    }
    Ok(out)
}

/// Reduce to radial coordinates.
pub fn gauge_fix(es: &ExtendedState) -> Result<RadialState<f64>> {
    match es.kind {
        ChainKind::Periodic => gauge_fix_periodic(es).map(RadialState::Periodic),
        ChainKind::Open => gauge_fix_open(es).map(RadialState::Open),
    }
}

/// Sign rule: the largest-magnitude entry of each column is positive.
fn fix_column_signs(v: &mut DMatrix<f64>, partner: Option<&mut DMatrix<f64>>) {
    let mut flips = Vec::new();
    for j in 0..v.ncols() {
        let col = v.column(j);
        let imax = col.iamax();
        if col[imax] < 0.0 {
            flips.push(j);
        }
    }
    for &j in &flips {
        v.column_mut(j).neg_mut();
    }
    if let Some(p) = partner {
        for &j in &flips {
            p.column_mut(j).neg_mut();
        }
    }
}

/// Real eigenvalues (descending) and unit eigenvectors of a matrix with
/// real, distinct spectrum. Columns follow the sign rule.
pub fn real_eigen_frame(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let ev = m.complex_eigenvalues();
    let scale = ev.iter().map(|c| c.norm()).fold(1f64, f64::max);
    if let Some(c) = ev.iter().find(|c| c.im.abs() > 1e-9 * scale) {
        return Err(Error::Spectrum(format!("non-real eigenvalue {}+{}i", c.re, c.im)));
    }
    let mut vals: Vec<f64> = ev.iter().map(|c| c.re).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for w in vals.windows(2) {
        if w[0] - w[1] <= REGULARITY_EPS * scale {
            return Err(Error::Spectrum(format!("repeated eigenvalue near {}", w[0])));
        }
    }
    let mut v = DMatrix::zeros(n, n);
    for (j, &lam) in vals.iter().enumerate() {
        let shifted = m - DMatrix::identity(n, n) * lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Spectrum("eigenvector frame failure".into()))?;
        let k = svd.singular_values.imin();
        v.set_column(j, &vt.row(k).transpose());
    }
    fix_column_signs(&mut v, None);
    Ok((vals, v))
}

/// Radial coordinates from the periodic extended space.
///
/// Diagonalizes the monodromy `g_1 ⋯ g_n = b a b⁻¹` (eigenvalues descending,
/// column signs fixed, `det b = 1`) and transports by `h_i = b⁻¹ g_1 ⋯ g_{i−1}`.
pub fn gauge_fix_periodic(es: &ExtendedState) -> Result<PeriodicRadialState<f64>> {
    if es.kind != ChainKind::Periodic {
        return Err(Error::InvalidArgument("expected a periodic extended state".into()));
    }
    let n = es.dim();
    let ns = es.sites();
    let mono = es.g.iter().skip(1).fold(es.g[0].0.clone(), |acc, g| acc * &g.0);
    let (vals, mut b) = real_eigen_frame(&mono)?;
    if let Some(v) = vals.iter().find(|v| **v <= 0.0) {
        return Err(Error::Spectrum(format!("monodromy eigenvalue {v} is not positive")));
    }
    let det = b.determinant();
    if det.abs() < 1e-300 {
        return Err(Error::Spectrum("degenerate eigenvector frame".into()));
    }
    if det < 0.0 {
        b.column_mut(n - 1).neg_mut();
    }
    let b = &b / b.determinant().powf(1.0 / n as f64);
    let binv = b.clone().try_inverse().ok_or(Error::Singular)?;

    let mut h = binv.clone();
    let mut xs = Vec::with_capacity(ns);
    for i in 0..ns {
        let hinv = h.clone().try_inverse().ok_or(Error::Singular)?;
        xs.push(&h * &es.x[i].0 * hinv);
        h *= &es.g[i].0;
    }
    let q = DVector::from_iterator(n, vals.iter().map(|v| v.ln()));
    let a = DMatrix::from_diagonal(&q.map(f64::exp));
    let last = conj_inv(&a, &xs[ns - 1])?;
    let mut spins = Vec::with_capacity(ns);
    for i in 0..ns {
        let mu = if i == 0 { &xs[0] - &last } else { &xs[i] - &xs[i - 1] };
        spins.push(normalize_gauge(&factor_rank1(&mu, es.xis[i])?)?);
    }
    let mut p = xs[ns - 1].diagonal();
    let mut q = q;
    p.add_scalar_mut(-p.mean());
    q.add_scalar_mut(-q.mean());
    Ok(PeriodicRadialState::new_unchecked(spins, p, q))
}

/// Radial coordinates from the open extended space.
///
/// SVD `g_0 ⋯ g_n = U Σ Vᵀ` with `U, V ∈ SO(N)`, `Σ` descending; transport by
/// `h_i = Uᵀ g_0 ⋯ g_{i−1}`, so that `Σ` sits on the last link.
fn conj(h: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let hinv = h.clone().try_inverse().ok_or(Error::Singular)?;
    Ok(h * x * hinv)
}

/// Index of the link with the largest singular-value spread.
fn worst_link(g: &[GroupElement<f64>]) -> usize {
    let spread = |m: &DMatrix<f64>| {
        let s = m.singular_values();
        (s.max() / s.min()).ln()
    };
    let mut best = (0, f64::MIN);
    for (i, gi) in g.iter().enumerate() {
        let w = spread(&gi.0);
        if w > best.1 {
            best = (i, w);
        }
    }
    best.0
}

pub fn gauge_fix_open(es: &ExtendedState) -> Result<OpenRadialState<f64>> {
    gauge_fix_open_via(es, worst_link(&es.g))
}

/// [`gauge_fix_open`] with the intermediate gauge placing `Σ` on link `j`.
#[doc(hidden)]
pub fn gauge_fix_open_via(es: &ExtendedState, j: usize) -> Result<OpenRadialState<f64>> {
    if es.kind != ChainKind::Open {
        return Err(Error::InvalidArgument("expected an open extended state".into()));
    }
    let n = es.dim();
    let ns = es.sites();
    let prod = es.g.iter().skip(1).fold(es.g[0].0.clone(), |acc, g| acc * &g.0);
    let svd = prod.svd(true, true);
    let (u0, vt0) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Spectrum("singular value decomposition failed".into())),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
    let mut sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    // det = 1: the smallest value from the others, which carry full relative precision.
    sv[n - 1] = 1.0 / sv[..n - 1].iter().product::<f64>();
    let scale = sv[0].max(1.0);
    for w in sv.windows(2) {
        if w[0] - w[1] <= REGULARITY_EPS * scale {
            return Err(Error::Spectrum(format!("repeated singular value near {}", w[0])));
        }
    }
    let mut u = DMatrix::from_fn(n, n, |r, c| u0[(r, order[c])]);
    let mut v = DMatrix::from_fn(n, n, |r, c| vt0[(order[c], r)]);
    fix_column_signs(&mut u, Some(&mut v));
    if u.determinant() < 0.0 {
        u.column_mut(n - 1).neg_mut();
        v.column_mut(n - 1).neg_mut();
    }
    // The pairing sign of (u_N, v_N) is lost when σ_N is below roundoff;
    // σ_N > 0 from det = 1 fixes it.
    if v.determinant() < 0.0 {
        v.column_mut(n - 1).neg_mut();
    }

    // Work in the gauge that leaves Σ on the worst-conditioned link `j`, so
    // every transport is well conditioned; the standard form (Σ on link n)
    // differs from it by Ad_Σ on sites past `j`, a diagonal rescaling.
    if j > ns {
        return Err(Error::InvalidArgument(format!("link {j} outside 0..={ns}")));
    }
    let mut xs = Vec::with_capacity(ns + 1);
    let mut h = u.transpose();
    for i in 0..=j {
        xs.push(conj(&h, &es.x[i].0)?);
        h *= &es.g[i].0;
    }
    let mut tail = Vec::with_capacity(ns - j);
    let mut hinv = v.clone();
    for i in (j + 1..=ns).rev() {
        hinv = &es.g[i].0 * hinv;
        tail.push(conj_inv(&hinv, &es.x[i].0)?);
    }
    tail.reverse();
    xs.extend(tail);
    let q = DVector::from_iterator(n, sv.iter().map(|v| v.ln()));
    let scale_by = |m: &DMatrix<f64>, sign: f64| DMatrix::from_fn(n, n, |r, c| m[(r, c)] * (sign * (q[r] - q[c])).exp());
    let mu_left = antisym(&xs[0]);
    let mu_right = if j == ns { -antisym(&scale_by(&xs[ns], -1.0)) } else { -antisym(&xs[ns]) };
    let mut spins = Vec::with_capacity(ns);
    for i in 1..=ns {
        let mu = if i <= j {
            &xs[i] - &xs[i - 1]
        } else if i == j + 1 {
            scale_by(&(&xs[i] - scale_by(&xs[i - 1], -1.0)), 1.0)
        } else {
            scale_by(&(&xs[i] - &xs[i - 1]), 1.0)
        };
        spins.push(normalize_gauge(&factor_rank1(&mu, es.xis[i - 1])?)?);
    }
    let mut p = xs[ns].diagonal();
    let mut q = q;
    p.add_scalar_mut(-p.mean());
    q.add_scalar_mut(-q.mean());
    Ok(OpenRadialState {
        mu_left: KOrbitPoint { matrix: mu_left, spectrum: es.left_spectrum.clone() },
        spins,
        mu_right: KOrbitPoint { matrix: mu_right, spectrum: es.right_spectrum.clone() },
        p,
        q,
    })
}

fn invariant_matrices(s: &RadialState<f64>) -> (Vec<DMatrix<f64>>, bool) {
    match s {
        RadialState::Periodic(s) => (s.spin_matrices(), false),
        RadialState::Open(s) => {
            let mut m = vec![s.mu_left.matrix.clone()];
            m.extend(s.spin_matrices());
            m.push(s.mu_right.matrix.clone());
            (m, true)
        }
    }
}

/// Distance between radial states that ignores the residual gauge freedom
/// (diagonal conjugation periodic, sign matrices open).
///
/// Compares `p`, `q`, and all pairwise products `X_ij Y_ji` (and `X_ij Y_ij`
/// for the open chain) of spin and boundary matrices, each difference taken
/// relative to `max(1, |u|, |v|)`.
pub fn radial_distance(s1: &RadialState<f64>, s2: &RadialState<f64>) -> Result<f64> {
    if s1.kind() != s2.kind() || s1.dim() != s2.dim() || s1.sites() != s2.sites() {
        return Err(Error::InvalidArgument("states have different shapes".into()));
    }
    let rel = |u: f64, v: f64| (u - v).abs() / 1f64.max(u.abs()).max(v.abs());
    let mut d = 0f64;
    for (u, v) in s1.p().iter().zip(s2.p().iter()).chain(s1.q().iter().zip(s2.q().iter())) {
        d = d.max(rel(*u, *v));
    }
    let (m1, open) = invariant_matrices(s1);
    let (m2, _) = invariant_matrices(s2);
    let n = s1.dim();
    for a in 0..m1.len() {
        for b in a..m1.len() {
            for i in 0..n {
                for j in 0..n {
                    d = d.max(rel(m1[a][(i, j)] * m1[b][(j, i)], m2[a][(i, j)] * m2[b][(j, i)]));
                    if open {
                        d = d.max(rel(m1[a][(i, j)] * m1[b][(i, j)], m2[a][(i, j)] * m2[b][(i, j)]));
                    }
                }
            }
        }
    }
    Ok(d)
}
