//! Rank-one coadjoint orbits in Darboux `(a, b)` coordinates, `so(N)*` orbit
//! points for open-chain boundaries, and the local-spin transform.

use crate::error::{Error, Result};
use crate::liealg::AlgebraVector;
use crate::scalar::Real;
use crate::tolerances::CONSTRAINT_TOL;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Point `μ = b aᵀ − (ξ/N) I` of the rank-one orbit `O^{(ξ)}`.
///
/// The pair `(a, b)` is defined up to `(λa, λ⁻¹b)`, `λ ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneOrbitPoint<T: nalgebra::Scalar> {
    pub xi: f64,
    pub a: DVector<T>,
    pub b: DVector<T>,
}

impl<T: Real> RankOneOrbitPoint<T> {
    /// Construct without checking the orbit constraint.
    pub fn new_unchecked(xi: f64, a: DVector<T>, b: DVector<T>) -> Self {
        Self { xi, a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `aᵀb − ξ`.
    pub fn constraint_residual(&self) -> T {
        self.a.dot(&self.b) - T::lit(self.xi)
    }

    /// The embedded matrix `b aᵀ − (ξ/N) I`.
    pub fn matrix(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut m = &self.b * self.a.transpose();
        let shift = T::lit(self.xi / n as f64);
        for i in 0..n {
            m[(i, i)] -= shift;
        }
        m
    }
}

impl RankOneOrbitPoint<f64> {
    /// Construct and check `aᵀb = ξ` to [`CONSTRAINT_TOL`] (relative to the data scale).
    pub fn new(xi: f64, a: DVector<f64>, b: DVector<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        let pt = Self { xi, a, b };
        pt.check(CONSTRAINT_TOL)?;
        Ok(pt)
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let scale = 1.0f64.max(self.a.norm() * self.b.norm());
        let r = self.constraint_residual().abs();
        if !(r <= tol * scale) {
            return Err(Error::ConstraintViolated(r));
        }
        Ok(())
    }

    /// `(λa, λ⁻¹b)`.
    pub fn gauge_move(&self, lambda: f64) -> Self {
        Self { xi: self.xi, a: &self.a * lambda, b: &self.b / lambda }
    }
}

/// `μ = b aᵀ − (ξ/N) I`, checking the orbit constraint first.
pub fn embed_rank1(pt: &RankOneOrbitPoint<f64>) -> Result<AlgebraVector<f64>> {
    pt.check(CONSTRAINT_TOL)?;
    Ok(AlgebraVector(pt.matrix()))
}

/// Canonical gauge representative: `‖a‖ = ‖b‖`, first nonzero entry of `a` positive.
pub fn normalize_gauge(pt: &RankOneOrbitPoint<f64>) -> Result<RankOneOrbitPoint<f64>> {
    let na = pt.a.norm();
    let nb = pt.b.norm();
    if na == 0.0 {
        return Err(Error::InvalidArgument("zero a-vector".into()));
    }
    let first = pt.a.iter().copied().find(|v| *v != 0.0).unwrap_or(1.0);
    let mut lambda = if nb > 0.0 { (nb / na).sqrt() } else { 1.0 / na };
    if first < 0.0 {
        lambda = -lambda;
    }
    Ok(pt.gauge_move(lambda))
}

/// Recover `(a, b)` from a matrix `μ` with `μ + (ξ/N) I` of rank one, `ξ = Tr(μ + ξ/N I)`.
pub fn factor_rank1(mu: &DMatrix<f64>, xi: f64) -> Result<RankOneOrbitPoint<f64>> {
    let n = mu.nrows();
    let mut r = mu.clone();
    for i in 0..n {
        r[(i, i)] += xi / n as f64;
    }
    let (jc, _) = (0..n)
        .map(|j| (j, r.column(j).norm()))
        .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
    let b: DVector<f64> = r.column(jc).into_owned();
    let ir = b.iamax();
    if b[ir] == 0.0 {
        return Err(Error::InvalidArgument("rank-one factor vanishes".into()));
    }
    let a: DVector<f64> = r.row(ir).transpose() / b[ir];
    normalize_gauge(&RankOneOrbitPoint { xi, a, b })
}

/// `Σ_k diag(μ^{(k)})`; zero iff the Cartan moment constraint holds.
pub fn chain_moment_residual<T: Real>(spins: &[RankOneOrbitPoint<T>]) -> DVector<T> {
    let n = spins.first().map_or(0, |s| s.dim());
    let mut acc = DVector::zeros(n);
    for s in spins {
        let shift = T::lit(s.xi / n as f64);
        for i in 0..n {
            acc[i] += s.a[i] * s.b[i] - shift;
        }
    }
    acc
}

/// Per-site orbit specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OrbitSpecification {
    #[serde(rename = "rank1")]
    RankOne { xi: f64 },
    #[serde(rename = "k-orbit")]
    KOrbit { spectrum: Vec<f64> },
}

impl OrbitSpecification {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::RankOne { xi } => {
                if *xi == 0.0 || !xi.is_finite() {
                    return Err(Error::Infeasible(format!("rank-one orbit needs finite nonzero xi, got {xi}")));
                }
            }
            Self::KOrbit { spectrum } => validate_k_spectrum(n, spectrum)?,
        }
        Ok(())
    }
}

/// Impose `aᵀb = ξ_k` per spin and `Σ_k a_i b_i = Ξ/N` per index by the
/// minimal-norm change of the `b` vectors (both families are linear in `b`).
pub fn project_onto_constraints(spins: &mut [RankOneOrbitPoint<f64>]) -> Result<f64> {
    let ns = spins.len();
    if ns == 0 {
        return Ok(0.0);
    }
    let n = spins[0].dim();
    let rows = ns + n;
    let mut m = DMatrix::zeros(rows, ns * n);
    let mut resid = DVector::zeros(rows);
    for (k, s) in spins.iter().enumerate() {
        for i in 0..n {
            m[(k, k * n + i)] = s.a[i];
            m[(ns + i, k * n + i)] = s.a[i];
        }
        resid[k] = s.a.dot(&s.b) - s.xi;
    }
    let diag = chain_moment_residual(spins);
    for i in 0..n {
        resid[ns + i] = diag[i];
    }
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    let pinv = svd
        .pseudo_inverse(smax * 1e-12)
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    let delta = pinv * &resid;
    for (k, s) in spins.iter_mut().enumerate() {
        for i in 0..n {
            s.b[i] -= delta[k * n + i];
        }
    }
    let after = constraint_residual_max(spins);
    Ok(after)
}

/// Largest violation over both constraint families.
pub fn constraint_residual_max(spins: &[RankOneOrbitPoint<f64>]) -> f64 {
    let orbit = spins.iter().map(|s| s.constraint_residual().abs()).fold(0.0, f64::max);
    let cartan = chain_moment_residual(spins).amax();
    orbit.max(cartan)
}

/// Draws rejected by [`sample_constrained`] before giving up.
const SAMPLE_ATTEMPTS: usize = 50;

/// Random spins satisfying `aᵀb = ξ_k` and `Σ_k a_i b_i = Ξ/N`, in canonical gauge.
/// Nearly degenerate draws are rejected and redrawn.
pub fn sample_constrained<R: Rng + ?Sized>(
    n: usize,
    xis: &[f64],
    rng: &mut R,
) -> Result<Vec<RankOneOrbitPoint<f64>>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("N must be at least 2, got {n}")));
    }
    if xis.is_empty() {
        return Err(Error::Infeasible("at least one site is required".into()));
    }
    for &xi in xis {
        OrbitSpecification::RankOne { xi }.validate(n)?;
    }
    let mut last = 0.0;
    for _ in 0..SAMPLE_ATTEMPTS {
        let mut spins: Vec<_> = xis
            .iter()
            .map(|&xi| RankOneOrbitPoint {
                xi,
                a: gaussian_vector(n, rng),
                b: gaussian_vector(n, rng),
            })
            .collect();
        project_onto_constraints(&mut spins)?;
        let res = project_onto_constraints(&mut spins)?;
        let scale = spins.iter().map(|s| s.b.amax() * s.a.amax()).fold(1.0, f64::max);
        if res <= CONSTRAINT_TOL * scale {
            return spins.iter().map(normalize_gauge).collect();
        }
        last = res;
    }
    Err(Error::Infeasible(format!("constraint residual {last:e} after projection")))
}

/// Local spin matrices `g^{(i)}_{kℓ} = b_i^{(k)} a_i^{(ℓ)} − δ_{kℓ} Ξ/(Nn)`, one `n × n` matrix per index `i`.
pub fn local_spins(spins: &[RankOneOrbitPoint<f64>], tol: f64) -> Result<Vec<DMatrix<f64>>> {
    let ns = spins.len();
    if ns == 0 {
        return Ok(Vec::new());
    }
    let n = spins[0].dim();
    let res = chain_moment_residual(spins).amax();
    if res > tol {
        return Err(Error::ConstraintViolated(res));
    }
    let total: f64 = spins.iter().map(|s| s.xi).sum();
    let shift = total / (n * ns) as f64;
    Ok((0..n)
        .map(|i| {
            DMatrix::from_fn(ns, ns, |k, l| {
                spins[k].b[i] * spins[l].a[i] - if k == l { shift } else { 0.0 }
            })
        })
        .collect())
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Point of a coadjoint `SO(N)`-orbit in `so(N)* ≅ so(N)` (antisymmetric matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct KOrbitPoint<T: nalgebra::Scalar> {
    pub matrix: DMatrix<T>,
    /// Invariant label: the `⌊N/2⌋` rotation frequencies, sorted decreasing.
    pub spectrum: Vec<f64>,
}

impl<T: Real> KOrbitPoint<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Independent coordinates `m_ij`, `i < j`, row-major.
    pub fn coordinates(&self) -> Vec<T> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }

    /// Rebuild from upper-triangular coordinates, keeping the orbit label.
    pub fn from_coordinates(n: usize, coords: &[T], spectrum: Vec<f64>) -> Self {
        let mut m = DMatrix::zeros(n, n);
        let mut c = 0;
        for i in 0..n {
            for j in i + 1..n {
                m[(i, j)] = coords[c];
                m[(j, i)] = -coords[c];
                c += 1;
            }
        }
        Self { matrix: m, spectrum }
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, n), spectrum: vec![0.0; n / 2] }
    }
}

impl KOrbitPoint<f64> {
    /// Construct from an antisymmetric matrix, computing the label.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let asym = (&m + m.transpose()).amax();
        if asym > CONSTRAINT_TOL * 1f64.max(m.amax()) {
            return Err(Error::InvalidArgument(format!("matrix is not antisymmetric (defect {asym:e})")));
        }
        let spectrum = k_spectrum(&m);
        Ok(Self { matrix: m, spectrum })
    }
}

fn validate_k_spectrum(n: usize, spectrum: &[f64]) -> Result<()> {
    if spectrum.len() != n / 2 {
        return Err(Error::Spectrum(format!(
            "so({n}) orbit needs {} frequencies, got {}",
            n / 2,
            spectrum.len()
        )));
    }
    if spectrum.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Spectrum("frequencies must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Rotation frequencies of an antisymmetric matrix (eigenvalues `±i s_j`), sorted decreasing.
pub fn k_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (0..n / 2).map(|j| 0.5 * (sv[2 * j] + sv[2 * j + 1])).collect()
}

/// Block-diagonal normal form with blocks `[[0, s], [−s, 0]]`.
pub fn k_normal_form(n: usize, spectrum: &[f64]) -> Result<DMatrix<f64>> {
    validate_k_spectrum(n, spectrum)?;
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut m = DMatrix::zeros(n, n);
    for (j, s) in sorted.iter().enumerate() {
        m[(2 * j, 2 * j + 1)] = *s;
        m[(2 * j + 1, 2 * j)] = -*s;
    }
    Ok(m)
}

/// Random point of the `SO(N)`-orbit with the given frequencies.
pub fn sample_k_orbit<R: Rng + ?Sized>(n: usize, spectrum: &[f64], rng: &mut R) -> Result<KOrbitPoint<f64>> {
    let base = k_normal_form(n, spectrum)?;
    let k = random_special_orthogonal(n, rng);
    let m = &k * base * k.transpose();
    let m = (&m - m.transpose()) * 0.5;
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(KOrbitPoint { matrix: m, spectrum: sorted })
}

/// Haar-random element of `SO(N)` (QR of a Gaussian matrix with sign correction).
pub fn random_special_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    if q.determinant() < 0.0 {
        let mut col = q.column_mut(0);
        col *= -1.0;
    }
    q
}
