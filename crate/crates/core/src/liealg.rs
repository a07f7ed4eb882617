//! Root data, Killing form and matrix-group helpers for `sl_N(R)` / `SL_N(R)`.
//!
//! Conventions:
//! - Killing form `(x, y) = 2N Tr(xy)`, used for every pairing.
//! - Root `ε_i − ε_j` is stored as `(i, j)`; it is positive when `i < j`.
//! - Root vector `e_{ε_i−ε_j} = E_ij / √(2N)`, so `(e_α, e_{−α}) = 1`.
//! - Root coordinate `y_α = y(e_{−α}) = √(2N) y_ij`.
//! - `Ad*_g x = g x g⁻¹` under the identification `g* ≅ g`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Neg, Sub};

/// Root `ε_i − ε_j` of `A_{N−1}` (zero-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Root {
    pub i: usize,
    pub j: usize,
}

impl Root {
    pub fn new(i: usize, j: usize) -> Self {
        debug_assert_ne!(i, j);
        Self { i, j }
    }

    pub fn is_positive(&self) -> bool {
        self.i < self.j
    }

    pub fn negate(&self) -> Self {
        Self { i: self.j, j: self.i }
    }

    /// `α(q) = q_i − q_j`.
    pub fn eval<T: Real>(&self, q: &DVector<T>) -> T {
        q[self.i] - q[self.j]
    }
}

/// Root and normalization data for a fixed `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieContext {
    n: usize,
    roots: Vec<Root>,
}

impl LieContext {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("N must be at least 2, got {n}")));
        }
        let mut roots = Vec::with_capacity(n * (n - 1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    roots.push(Root { i, j });
                }
            }
        }
        Ok(Self { n, roots })
    }

    /// Matrix size `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Rank `r = N − 1`.
    pub fn rank(&self) -> usize {
        self.n - 1
    }

    /// `dim sl_N = N² − 1`.
    pub fn dim(&self) -> usize {
        self.n * self.n - 1
    }

    /// The factor `2N` in `(x, y) = 2N Tr(xy)`.
    pub fn killing_scale(&self) -> f64 {
        2.0 * self.n as f64
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn positive_roots(&self) -> impl Iterator<Item = Root> + '_ {
        self.roots.iter().copied().filter(Root::is_positive)
    }

    /// Matrix realization `E_ij / √(2N)` of `e_α`.
    pub fn root_vector(&self, root: Root) -> AlgebraVector<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        m[(root.i, root.j)] = 1.0 / self.killing_scale().sqrt();
        AlgebraVector(m)
    }

    pub fn check<T: Real>(&self, x: &AlgebraVector<T>) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.dim() });
        }
        Ok(())
    }

    /// `(x, y) = 2N Tr(xy)`.
    pub fn killing_form<T: Real>(&self, x: &AlgebraVector<T>, y: &AlgebraVector<T>) -> Result<T> {
        self.check(x)?;
        self.check(y)?;
        let mut acc = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc += x.0[(i, j)] * y.0[(j, i)];
            }
        }
        Ok(acc * T::lit(self.killing_scale()))
    }

    /// Killing form restricted to the Cartan subalgebra: `2N Σ u_i v_i`.
    pub fn cartan_pairing<T: Real>(&self, u: &DVector<T>, v: &DVector<T>) -> T {
        u.dot(v) * T::lit(self.killing_scale())
    }

    /// `y_α = √(2N) y_ij`.
    pub fn root_coordinate<T: Real>(&self, y: &AlgebraVector<T>, root: Root) -> T {
        y.0[(root.i, root.j)] * T::lit(self.killing_scale().sqrt())
    }

    /// `y_{[α]} = y(e_{−α} − e_α) = y_α − y_{−α}`.
    pub fn bracket_coordinate<T: Real>(&self, y: &AlgebraVector<T>, root: Root) -> T {
        self.root_coordinate(y, root) - self.root_coordinate(y, root.negate())
    }

    /// Diagonal part.
    pub fn cartan_component<T: Real>(&self, y: &AlgebraVector<T>) -> DVector<T> {
        y.0.diagonal()
    }

    /// Assemble an element from its Cartan part and a root-coordinate function.
    pub fn from_components<T: Real>(
        &self,
        cartan: &DVector<T>,
        mut coord: impl FnMut(Root) -> T,
    ) -> AlgebraVector<T> {
        let s = T::lit(1.0 / self.killing_scale().sqrt());
        let mut m = DMatrix::from_diagonal(cartan);
        for &r in &self.roots {
            m[(r.i, r.j)] = coord(r) * s;
        }
        AlgebraVector(m)
    }

    fn check_degree(&self, d: usize) -> Result<()> {
        if d < 2 || d > self.n {
            return Err(Error::InvalidArgument(format!(
                "Casimir degree {d} outside 2..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// `c_d(x) = Tr(x^d)`.
    pub fn casimir<T: Real>(&self, d: usize, x: &AlgebraVector<T>) -> Result<T> {
        self.check_degree(d)?;
        self.check(x)?;
        Ok(matrix_power(&x.0, d).trace())
    }

    /// Killing-dual gradient of `c_d`: `(d/2N)(x^{d−1} − Tr(x^{d−1})/N · I)`.
    pub fn gradient_invariant<T: Real>(&self, d: usize, x: &AlgebraVector<T>) -> Result<AlgebraVector<T>> {
        self.check_degree(d)?;
        self.check(x)?;
        let mut p = matrix_power(&x.0, d - 1);
        let shift = p.trace() / T::lit(self.n as f64);
        for i in 0..self.n {
            p[(i, i)] -= shift;
        }
        Ok(AlgebraVector(p * T::lit(d as f64 / self.killing_scale())))
    }

    /// Convert a Killing-normalized quantity to trace units (divide by `2N`).
    pub fn to_trace_units(&self, h: f64) -> f64 {
        h / self.killing_scale()
    }
}

/// `m^d` for `d ≥ 0`.
pub fn matrix_power<T: Real>(m: &DMatrix<T>, d: usize) -> DMatrix<T> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..d {
        out = &out * m;
    }
    out
}

/// Element of `sl_N* ≅ sl_N`, stored as an `N × N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraVector<T: nalgebra::Scalar>(pub DMatrix<T>);

impl<T: Real> AlgebraVector<T> {
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &DVector<T>) -> Self {
        Self(DMatrix::from_diagonal(d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.0
    }

    pub fn trace(&self) -> T {
        self.0.trace()
    }

    pub fn scale(&self, s: T) -> Self {
        Self(&self.0 * s)
    }

    /// Commutator `[x, y]`.
    pub fn bracket(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl AlgebraVector<f64> {
    /// Construct and check `|Tr m| ≤ tol`.
    pub fn traceless(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let x = Self::new(m)?;
        let t = x.trace();
        if t.abs() > tol {
            return Err(Error::InvalidArgument(format!("trace {t:e} exceeds tolerance")));
        }
        Ok(x)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

impl<T: Real> Add for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn add(self, rhs: Self) -> AlgebraVector<T> {
        AlgebraVector(&self.0 + &rhs.0)
    }
}

impl<T: Real> Sub for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn sub(self, rhs: Self) -> AlgebraVector<T> {
        AlgebraVector(&self.0 - &rhs.0)
    }
}

impl<T: Real> Neg for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn neg(self) -> AlgebraVector<T> {
        AlgebraVector(-&self.0)
    }
}

/// Element of `SL_N(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement<T: nalgebra::Scalar>(pub DMatrix<T>);

impl<T: Real> GroupElement<T> {
    /// Construct and check `|det − 1| < DET_TOL`.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let det = m.determinant();
        if (det - T::one()).abs() > T::lit(crate::tolerances::DET_TOL) {
            return Err(Error::InvalidArgument("group element must have determinant 1".into()));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Diagonal torus element `diag(e^{q})`.
    pub fn torus(q: &DVector<T>) -> Self {
        Self(DMatrix::from_diagonal(&q.map(|v| v.exp())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Self> {
        self.0.clone().try_inverse().map(Self).ok_or(Error::Singular)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `exp(x)` for `x ∈ sl_N`.
    pub fn exp(x: &AlgebraVector<T>) -> Self {
        Self(x.0.clone().exp())
    }
}

/// `Ad*_g x = g x g⁻¹`.
pub fn adjoint_star<T: Real>(g: &GroupElement<T>, x: &AlgebraVector<T>) -> Result<AlgebraVector<T>> {
    if g.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: x.dim() });
    }
    let inv = g.inverse()?;
    Ok(AlgebraVector(&g.0 * &x.0 * &inv.0))
}

/// `θ(x) = −xᵀ`.
pub fn cartan_involution_alg<T: Real>(x: &AlgebraVector<T>) -> AlgebraVector<T> {
    AlgebraVector(-x.0.transpose())
}

/// Projection `π: g* → k*`, the antisymmetric part `(x − xᵀ)/2`.
pub fn project_k<T: Real>(x: &AlgebraVector<T>) -> AlgebraVector<T> {
    AlgebraVector((&x.0 - x.0.transpose()) * T::lit(0.5))
}
