//! Open chain: boundary coefficients, reconstruction of `x^{(0)}, …, x^{(n)}`,
//! the rescaled r-matrix with its twists, and bKZB Hamiltonians.
//!
//! Sites `1..=n` carry spins; `x^{(0)}` and `x^{(n)}` meet the boundary
//! `K`-orbits through `π(x^{(0)}) = μ′` and `−π(Ad*_{a⁻¹} x^{(n)}) = μ″`.

use crate::error::{Error, Result};
use crate::liealg::{AlgebraVector, LieContext, Root};
use crate::orbits::{KOrbitPoint, RankOneOrbitPoint};
use crate::periodic::{check_decreasing, check_regular_q, check_traceless_vectors};
use crate::scalar::Real;
use crate::tolerances::{CONSTRAINT_TOL, REGULARITY_EPS};
use nalgebra::{DMatrix, DVector};

/// Point of the regular part of the reduced open-chain phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenRadialState<T: nalgebra::Scalar> {
    pub mu_left: KOrbitPoint<T>,
    pub spins: Vec<RankOneOrbitPoint<T>>,
    pub mu_right: KOrbitPoint<T>,
    pub p: DVector<T>,
    pub q: DVector<T>,
}

impl<T: Real> OpenRadialState<T> {
    pub fn sites(&self) -> usize {
        self.spins.len()
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn spin_matrices(&self) -> Vec<DMatrix<T>> {
        self.spins.iter().map(RankOneOrbitPoint::matrix).collect()
    }

    pub fn total_spin(&self) -> DMatrix<T> {
        let n = self.dim();
        self.spins.iter().fold(DMatrix::zeros(n, n), |acc, s| acc + s.matrix())
    }

    pub fn check_regular(&self, eps: f64) -> Result<()> {
        check_regular_q(&self.q, eps)
    }

    fn check_shape(&self, ctx: &LieContext) -> Result<()> {
        let n = ctx.n();
        for len in [self.p.len(), self.q.len(), self.mu_left.dim(), self.mu_right.dim()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        if let Some(s) = self.spins.iter().find(|s| s.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
        }
        if self.spins.is_empty() {
            return Err(Error::InvalidArgument("open chain needs at least one site".into()));
        }
        Ok(())
    }
}

impl OpenRadialState<f64> {
    pub fn new(
        ctx: &LieContext,
        mu_left: KOrbitPoint<f64>,
        spins: Vec<RankOneOrbitPoint<f64>>,
        mu_right: KOrbitPoint<f64>,
        p: DVector<f64>,
        q: DVector<f64>,
    ) -> Result<Self> {
        let s = Self { mu_left, spins, mu_right, p, q };
        s.validate(ctx, CONSTRAINT_TOL)?;
        Ok(s)
    }

    pub fn validate(&self, ctx: &LieContext, tol: f64) -> Result<()> {
        self.check_shape(ctx)?;
        check_traceless_vectors(&self.p, &self.q, tol)?;
        check_decreasing(&self.q)?;
        self.check_regular(REGULARITY_EPS)?;
        for s in &self.spins {
            s.check(tol)?;
        }
        for b in [&self.mu_left, &self.mu_right] {
            let asym = (&b.matrix + b.matrix.transpose()).amax();
            if asym > tol * 1f64.max(b.matrix.amax()) {
                return Err(Error::InvalidArgument("boundary matrix is not antisymmetric".into()));
            }
        }
        Ok(())
    }
}

fn check_open_site(k: usize, n: usize, lo: usize) -> Result<()> {
    if k < lo || k > n {
        return Err(Error::InvalidArgument(format!("site {k} outside {lo}..={n}")));
    }
    Ok(())
}

/// Reconstruct `x^{(k)}` in matrix entries; `mus` zero-based (site `l+1`).
pub(crate) fn reconstruct_open_from<T: Real>(
    mu_left: &DMatrix<T>,
    mu_right: &DMatrix<T>,
    mus: &[DMatrix<T>],
    p: &DVector<T>,
    q: &DVector<T>,
    k: usize,
) -> DMatrix<T> {
    let n = p.len();
    let mut x = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if r == c {
                continue;
            }
            let a = (q[r] - q[c]).exp();
            let ai = T::one() / a;
            let den = a - ai;
            let mp = mu_left[(r, c)] - mu_left[(c, r)];
            let mpp = mu_right[(r, c)] - mu_right[(c, r)];
            let mut v = a * mp + mpp;
            for (l, m) in mus.iter().enumerate() {
                if l < k {
                    v += a * (m[(r, c)] - m[(c, r)]);
                } else {
                    v += ai * m[(r, c)] - a * m[(c, r)];
                }
            }
            x[(r, c)] = v / den;
        }
        let mut d = p[r];
        for m in &mus[k..] {
            d -= m[(r, r)];
        }
        x[(r, r)] = d;
    }
    x
}

/// `K_α = (a_α μ′_{[α]} + μ″_{[α]}) / (a_α − a_α⁻¹)`.
pub fn boundary_k<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, root: Root) -> Result<T> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    Ok(boundary_k_unchecked(ctx, state, root))
}

fn boundary_k_unchecked<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, root: Root) -> T {
    let a = root.eval(&state.q).exp();
    let ml = AlgebraVector(state.mu_left.matrix.clone());
    let mr = AlgebraVector(state.mu_right.matrix.clone());
    (a * ctx.bracket_coordinate(&ml, root) + ctx.bracket_coordinate(&mr, root)) / (a - T::one() / a)
}

/// `x^{(k)}`, `k ∈ 0..=n`.
pub fn reconstruct_x_open<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize) -> Result<AlgebraVector<T>> {
    state.check_shape(ctx)?;
    check_open_site(k, state.sites(), 0)?;
    state.check_regular(REGULARITY_EPS)?;
    Ok(AlgebraVector(reconstruct_open_from(
        &state.mu_left.matrix,
        &state.mu_right.matrix,
        &state.spin_matrices(),
        &state.p,
        &state.q,
        k,
    )))
}

/// All of `x^{(0)}, …, x^{(n)}`.
pub fn reconstruct_all_open<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>) -> Result<Vec<AlgebraVector<T>>> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    let mus = state.spin_matrices();
    Ok((0..=state.sites())
        .map(|k| {
            AlgebraVector(reconstruct_open_from(
                &state.mu_left.matrix,
                &state.mu_right.matrix,
                &mus,
                &state.p,
                &state.q,
                k,
            ))
        })
        .collect())
}

/// Root coordinates of `x^{(0)}` and `x^{(n)}` from the total spin alone:
/// `x^{(0)}_α = (a μ′_{[α]} + μ″_{[α]} + a⁻¹μ_α − a μ_{−α})/(a − a⁻¹)` and
/// `x^{(n)}_α = (a μ′_{[α]} + μ″_{[α]} + a μ_α − a μ_{−α})/(a − a⁻¹)`.
pub fn extremes<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>) -> Result<(Vec<(Root, T)>, Vec<(Root, T)>)> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    let mu = AlgebraVector(state.total_spin());
    let mut first = Vec::new();
    let mut last = Vec::new();
    for &root in ctx.roots() {
        let a = root.eval(&state.q).exp();
        let ai = T::one() / a;
        let den = a - ai;
        let ml = AlgebraVector(state.mu_left.matrix.clone());
        let mr = AlgebraVector(state.mu_right.matrix.clone());
        let base = a * ctx.bracket_coordinate(&ml, root) + ctx.bracket_coordinate(&mr, root);
        let mp = ctx.root_coordinate(&mu, root);
        let mm = ctx.root_coordinate(&mu, root.negate());
        first.push((root, (base + ai * mp - a * mm) / den));
        last.push((root, (base + a * mp - a * mm) / den));
    }
    Ok((first, last))
}

fn spin_vectors<T: Real>(state: &OpenRadialState<T>) -> Vec<AlgebraVector<T>> {
    state.spin_matrices().into_iter().map(AlgebraVector).collect()
}

fn cartan_pair<T: Real>(ctx: &LieContext, x: &AlgebraVector<T>, y: &AlgebraVector<T>) -> T {
    ctx.cartan_pairing(&ctx.cartan_component(x), &ctx.cartan_component(y))
}

fn r_from<T: Real>(ctx: &LieContext, mk: &AlgebraVector<T>, ml: &AlgebraVector<T>, q: &DVector<T>) -> T {
    let mut r = -T::lit(0.5) * cartan_pair(ctx, mk, ml);
    for &root in ctx.roots() {
        let a = root.eval(q).exp();
        r += ctx.root_coordinate(mk, root.negate()) * ctx.root_coordinate(ml, root) / (a * a - T::one());
    }
    r
}

fn r_theta_from<T: Real>(ctx: &LieContext, mk: &AlgebraVector<T>, ml: &AlgebraVector<T>, q: &DVector<T>) -> T {
    let mut r = T::lit(0.5) * cartan_pair(ctx, mk, ml);
    for &root in ctx.roots() {
        let a = root.eval(q).exp();
        r -= ctx.root_coordinate(mk, root) * ctx.root_coordinate(ml, root) / (a * a - T::one());
    }
    r
}

fn kappa_from<T: Real>(ctx: &LieContext, mk: &AlgebraVector<T>, q: &DVector<T>) -> T {
    let mut r = T::lit(0.5) * cartan_pair(ctx, mk, mk);
    for &root in ctx.roots() {
        let a = root.eval(q).exp();
        let c = ctx.root_coordinate(mk, root);
        r += c * c / (T::one() - a * a);
    }
    r
}

fn check_pair<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize, l: usize) -> Result<()> {
    state.check_shape(ctx)?;
    check_open_site(k, state.sites(), 1)?;
    check_open_site(l, state.sites(), 1)?;
    if k == l {
        return Err(Error::InvalidArgument("r-matrix needs distinct sites".into()));
    }
    state.check_regular(REGULARITY_EPS)
}

/// Rescaled r-matrix `r_{kl} = −½(μ₀^{(k)}, μ₀^{(l)}) + Σ_α μ^{(k)}_{−α} μ^{(l)}_α / (a_α² − 1)`.
pub fn felder_r_rescaled<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize, l: usize) -> Result<T> {
    check_pair(ctx, state, k, l)?;
    let mus = spin_vectors(state);
    Ok(r_from(ctx, &mus[k - 1], &mus[l - 1], &state.q))
}

/// Twisted form `r^{θ_k}_{kl} = ½(μ₀^{(k)}, μ₀^{(l)}) − Σ_α μ^{(k)}_α μ^{(l)}_α / (a_α² − 1)`.
pub fn theta_twist_r<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize, l: usize) -> Result<T> {
    check_pair(ctx, state, k, l)?;
    let mus = spin_vectors(state);
    Ok(r_theta_from(ctx, &mus[k - 1], &mus[l - 1], &state.q))
}

/// `κ_k = ½(μ₀^{(k)}, μ₀^{(k)}) + Σ_α (μ^{(k)}_α)² / (1 − a_α²)`.
pub fn kappa<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize) -> Result<T> {
    state.check_shape(ctx)?;
    check_open_site(k, state.sites(), 1)?;
    state.check_regular(REGULARITY_EPS)?;
    let mus = spin_vectors(state);
    Ok(kappa_from(ctx, &mus[k - 1], &state.q))
}

/// bKZB Hamiltonian
/// `D_k = (μ₀^{(k)}, p) − Σ_{l<k}(r_{lk} + r^{θ_l}_{lk}) + (Σ_α K_α μ^{(k)}_{−α} − κ_k) + Σ_{l>k}(r_{kl} − r^{θ_k}_{kl})`,
/// `k ∈ 1..=n`.
pub fn bkzb_d<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize) -> Result<T> {
    state.check_shape(ctx)?;
    let n = state.sites();
    check_open_site(k, n, 1)?;
    state.check_regular(REGULARITY_EPS)?;
    let mus = spin_vectors(state);
    let mk = &mus[k - 1];
    let q = &state.q;
    let mut d = ctx.cartan_pairing(&ctx.cartan_component(mk), &state.p);
    for l in 1..k {
        let ml = &mus[l - 1];
        d -= r_from(ctx, ml, mk, q) + r_theta_from(ctx, ml, mk, q);
    }
    for &root in ctx.roots() {
        d += boundary_k_unchecked(ctx, state, root) * ctx.root_coordinate(mk, root.negate());
    }
    d -= kappa_from(ctx, mk, q);
    for l in k + 1..=n {
        let ml = &mus[l - 1];
        d += r_from(ctx, mk, ml, q) - r_theta_from(ctx, mk, ml, q);
    }
    Ok(d)
}

/// Closed-form open `H₂^{(n)}`:
/// `½(p,p) + Σ_{α>0} (a μ′_{[α]} + μ″_{[α]} + a(μ_α − μ_{−α}))(a⁻¹μ′_{[α]} + μ″_{[α]} + a⁻¹(μ_α − μ_{−α})) / (a − a⁻¹)²`.
pub fn h2_open_closed<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>) -> Result<T> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    let mu = AlgebraVector(state.total_spin());
    let ml = AlgebraVector(state.mu_left.matrix.clone());
    let mr = AlgebraVector(state.mu_right.matrix.clone());
    let mut h = T::lit(0.5) * ctx.cartan_pairing(&state.p, &state.p);
    for root in ctx.positive_roots() {
        let a = root.eval(&state.q).exp();
        let ai = T::one() / a;
        let lp = ctx.bracket_coordinate(&ml, root);
        let rp = ctx.bracket_coordinate(&mr, root);
        let s = ctx.root_coordinate(&mu, root) - ctx.root_coordinate(&mu, root.negate());
        let den = a - ai;
        h += (a * lp + rp + a * s) * (ai * lp + rp + ai * s) / (den * den);
    }
    Ok(h)
}

/// `H₂^{(k)} = ½(x^{(k)}, x^{(k)})`, `k ∈ 0..=n`.
pub fn h2_open<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize) -> Result<T> {
    let x = reconstruct_x_open(ctx, state, k)?;
    Ok(T::lit(0.5) * ctx.killing_form(&x, &x)?)
}

/// `H_d^{(k)} = Tr((x^{(k)})^d)`, `k ∈ 0..=n`.
pub fn hamiltonian_open<T: Real>(ctx: &LieContext, state: &OpenRadialState<T>, k: usize, d: usize) -> Result<T> {
    let x = reconstruct_x_open(ctx, state, k)?;
    ctx.casimir(d, &x)
}
