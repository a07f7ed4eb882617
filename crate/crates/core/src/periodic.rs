//! Periodic chain: radial coordinates, reconstruction of the `x^{(i)}`, the
//! Felder r-matrix, KZB differences and the Casimir Hamiltonians.
//!
//! Sites are labelled `1..=n`. The gauge is the one fixing `g = (1, …, 1, a)`,
//! so `x^{(n)}` has Cartan part `p`.

use crate::error::{Error, Result};
use crate::liealg::{AlgebraVector, LieContext};
use crate::orbits::{chain_moment_residual, RankOneOrbitPoint};
use crate::scalar::Real;
use crate::tolerances::{CONSTRAINT_TOL, REGULARITY_EPS};
use nalgebra::{DMatrix, DVector};

/// Point of the regular part of the reduced periodic phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicRadialState<T: nalgebra::Scalar> {
    pub spins: Vec<RankOneOrbitPoint<T>>,
    pub p: DVector<T>,
    pub q: DVector<T>,
}

impl<T: Real> PeriodicRadialState<T> {
    pub fn new_unchecked(spins: Vec<RankOneOrbitPoint<T>>, p: DVector<T>, q: DVector<T>) -> Self {
        Self { spins, p, q }
    }

    /// Number of sites `n`.
    pub fn sites(&self) -> usize {
        self.spins.len()
    }

    /// Matrix size `N`.
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn spin_matrices(&self) -> Vec<DMatrix<T>> {
        self.spins.iter().map(RankOneOrbitPoint::matrix).collect()
    }

    /// Total spin `μ = Σ_k μ^{(k)}`.
    pub fn total_spin(&self) -> DMatrix<T> {
        let n = self.dim();
        self.spins.iter().fold(DMatrix::zeros(n, n), |acc, s| acc + s.matrix())
    }

    /// Fail unless every `|q_i − q_j|` exceeds `eps · max(1, max|q|)`.
    pub fn check_regular(&self, eps: f64) -> Result<()> {
        check_regular_q(&self.q, eps)
    }

    fn check_shape(&self, ctx: &LieContext) -> Result<()> {
        let n = ctx.n();
        if self.p.len() != n || self.q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.p.len().min(self.q.len()) });
        }
        if let Some(s) = self.spins.iter().find(|s| s.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
        }
        if self.spins.is_empty() {
            return Err(Error::InvalidArgument("periodic chain needs at least one site".into()));
        }
        Ok(())
    }
}

impl PeriodicRadialState<f64> {
    /// Construct and validate (shape, `Σp = Σq = 0`, decreasing regular `q`, all constraints).
    pub fn new(
        ctx: &LieContext,
        spins: Vec<RankOneOrbitPoint<f64>>,
        p: DVector<f64>,
        q: DVector<f64>,
    ) -> Result<Self> {
        let s = Self { spins, p, q };
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
        let scale = self.spins.iter().map(|s| s.a.amax() * s.b.amax()).fold(1.0, f64::max);
        let r = chain_moment_residual(&self.spins).amax();
        if r > tol * scale {
            return Err(Error::ConstraintViolated(r));
        }
        Ok(())
    }
}

pub(crate) fn check_traceless_vectors(p: &DVector<f64>, q: &DVector<f64>, tol: f64) -> Result<()> {
    let sp = p.sum().abs();
    let sq = q.sum().abs();
    let scale = 1f64.max(p.amax()).max(q.amax()) * p.len() as f64;
    if sp > tol * scale || sq > tol * scale {
        return Err(Error::InvalidArgument(format!(
            "p and q must sum to zero (got {sp:e}, {sq:e})"
        )));
    }
    Ok(())
}

pub(crate) fn check_decreasing(q: &DVector<f64>) -> Result<()> {
    if q.as_slice().windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("q must be strictly decreasing".into()));
    }
    Ok(())
}

pub(crate) fn check_regular_q<T: Real>(q: &DVector<T>, eps: f64) -> Result<()> {
    let n = q.len();
    let mut scale = T::one();
    for v in q.iter() {
        if v.abs() > scale {
            scale = v.abs();
        }
    }
    let thr = scale * T::lit(eps);
    for i in 0..n {
        for j in i + 1..n {
            if (q[i] - q[j]).abs() <= thr {
                return Err(Error::NonRegular(format!("q_{} and q_{} coincide", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

fn check_site(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("site {k} outside 1..={n}")));
    }
    Ok(())
}

/// Reconstruct `x^{(i)}` from matrices `μ^{(l)}` (zero-based vector, site `l+1`).
pub(crate) fn reconstruct_from<T: Real>(mus: &[DMatrix<T>], p: &DVector<T>, q: &DVector<T>, i: usize) -> DMatrix<T> {
    let n = p.len();
    let mut x = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if r == c {
                continue;
            }
            let a = (q[r] - q[c]).exp();
            let (mut lo, mut hi) = (T::zero(), T::zero());
            for (l, m) in mus.iter().enumerate() {
                if l < i {
                    lo += m[(r, c)];
                } else {
                    hi += m[(r, c)];
                }
            }
            x[(r, c)] = (a * lo + hi) / (a - T::one());
        }
        let mut d = p[r];
        for m in &mus[i..] {
            d -= m[(r, r)];
        }
        x[(r, r)] = d;
    }
    x
}

/// `x^{(i)}`, `i ∈ 1..=n`.
pub fn reconstruct_x<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>, i: usize) -> Result<AlgebraVector<T>> {
    state.check_shape(ctx)?;
    check_site(i, state.sites())?;
    state.check_regular(REGULARITY_EPS)?;
    Ok(AlgebraVector(reconstruct_from(&state.spin_matrices(), &state.p, &state.q, i)))
}

/// All of `x^{(1)}, …, x^{(n)}`.
pub fn reconstruct_all<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>) -> Result<Vec<AlgebraVector<T>>> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    let mus = state.spin_matrices();
    Ok((1..=state.sites())
        .map(|i| AlgebraVector(reconstruct_from(&mus, &state.p, &state.q, i)))
        .collect())
}

fn spin_vectors<T: Real>(state: &PeriodicRadialState<T>) -> Vec<AlgebraVector<T>> {
    state.spin_matrices().into_iter().map(AlgebraVector).collect()
}

fn felder_from<T: Real>(ctx: &LieContext, mk: &AlgebraVector<T>, ml: &AlgebraVector<T>, q: &DVector<T>) -> T {
    let half = T::lit(0.5);
    let mut r = -half * ctx.cartan_pairing(&ctx.cartan_component(mk), &ctx.cartan_component(ml));
    for &root in ctx.roots() {
        let a = root.eval(q).exp();
        r += ctx.root_coordinate(mk, root.negate()) * ctx.root_coordinate(ml, root) / (a - T::one());
    }
    r
}

/// Felder r-matrix `r_{kl} = −½(μ₀^{(k)}, μ₀^{(l)}) + Σ_α μ^{(k)}_{−α} μ^{(l)}_α / (a_α − 1)`.
pub fn felder_r<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>, k: usize, l: usize) -> Result<T> {
    state.check_shape(ctx)?;
    check_site(k, state.sites())?;
    check_site(l, state.sites())?;
    if k == l {
        return Err(Error::InvalidArgument("r-matrix needs distinct sites".into()));
    }
    state.check_regular(REGULARITY_EPS)?;
    let mus = spin_vectors(state);
    Ok(felder_from(ctx, &mus[k - 1], &mus[l - 1], &state.q))
}

/// Same r-matrix written with sums over positive roots only.
pub fn felder_r_positive<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>, k: usize, l: usize) -> Result<T> {
    state.check_shape(ctx)?;
    check_site(k, state.sites())?;
    check_site(l, state.sites())?;
    if k == l {
        return Err(Error::InvalidArgument("r-matrix needs distinct sites".into()));
    }
    state.check_regular(REGULARITY_EPS)?;
    let mus = spin_vectors(state);
    let (mk, ml) = (&mus[k - 1], &mus[l - 1]);
    let mut r = -T::lit(0.5) * ctx.cartan_pairing(&ctx.cartan_component(mk), &ctx.cartan_component(ml));
    for root in ctx.positive_roots() {
        let a = root.eval(&state.q).exp();
        let neg = root.negate();
        r += ctx.root_coordinate(mk, neg) * ctx.root_coordinate(ml, root) / (a - T::one());
        r -= a * ctx.root_coordinate(mk, root) * ctx.root_coordinate(ml, neg) / (a - T::one());
    }
    Ok(r)
}

/// KZB Hamiltonian `D_k = (μ₀^{(k)}, p) − Σ_{l<k} r_{lk} + Σ_{l>k} r_{kl}`, `k ∈ 2..=n`.
pub fn kzb_d<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>, k: usize) -> Result<T> {
    state.check_shape(ctx)?;
    let n = state.sites();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("KZB index {k} outside 2..={n}")));
    }
    state.check_regular(REGULARITY_EPS)?;
    let mus = spin_vectors(state);
    let mk = &mus[k - 1];
    let mut d = ctx.cartan_pairing(&ctx.cartan_component(mk), &state.p);
    for l in 1..k {
        d -= felder_from(ctx, &mus[l - 1], mk, &state.q);
    }
    for l in k + 1..=n {
        d += felder_from(ctx, mk, &mus[l - 1], &state.q);
    }
    Ok(d)
}

/// Closed-form `H₂^{(n)} = ½(p,p) − Σ_{α>0} μ_α μ_{−α} / (4 sh²(q_α/2))`, `μ` the total spin.
pub fn h2_closed_form<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>) -> Result<T> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    let mu = AlgebraVector(state.total_spin());
    let mut h = T::lit(0.5) * ctx.cartan_pairing(&state.p, &state.p);
    for root in ctx.positive_roots() {
        let sh = (root.eval(&state.q) * T::lit(0.5)).sinh();
        h -= ctx.root_coordinate(&mu, root) * ctx.root_coordinate(&mu, root.negate()) / (T::lit(4.0) * sh * sh);
    }
    Ok(h)
}

/// [`h2_closed_form`] divided by `2N`: `½Σp_i² − Σ_{i<j} μ_ij μ_ji / (4 sh²((q_i − q_j)/2))`.
pub fn h2_closed_form_rescaled<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>) -> Result<T> {
    state.check_shape(ctx)?;
    state.check_regular(REGULARITY_EPS)?;
    let mu = state.total_spin();
    let n = ctx.n();
    let mut h = T::lit(0.5) * state.p.dot(&state.p);
    for i in 0..n {
        for j in i + 1..n {
            let sh = ((state.q[i] - state.q[j]) * T::lit(0.5)).sinh();
            h -= mu[(i, j)] * mu[(j, i)] / (T::lit(4.0) * sh * sh);
        }
    }
    Ok(h)
}

/// `H₂^{(k)} = ½(x^{(k)}, x^{(k)})` via reconstruction.
pub fn h2<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>, k: usize) -> Result<T> {
    let x = reconstruct_x(ctx, state, k)?;
    Ok(T::lit(0.5) * ctx.killing_form(&x, &x)?)
}

/// `H_d^{(k)} = c_d(x^{(k)}) = Tr((x^{(k)})^d)`.
pub fn hamiltonian<T: Real>(ctx: &LieContext, state: &PeriodicRadialState<T>, k: usize, d: usize) -> Result<T> {
    let x = reconstruct_x(ctx, state, k)?;
    ctx.casimir(d, &x)
}
