//! Flat coordinate layout and Poisson tensor.
//!
//! Layout: `q_1..q_N`, `p_1..p_N`, then per site `a^{(k)}`, `b^{(k)}`, then
//! (open chain) the upper-triangular entries `μ′_ij`, `μ″_ij`, `i < j`.
//!
//! `(q, p)` and `(a, b)` are canonical pairs, so that `μ = b aᵀ − (ξ/N) I` obeys
//! `{μ_ij, μ_kl} = δ_jk μ_il − δ_il μ_kj`. The boundary coordinates carry the
//! Lie–Poisson structure of `so(N)*`, which has no global Darboux form.

use super::{ChainKind, RadialState};
use crate::error::{Error, Result};
use crate::openchain::OpenRadialState;
use crate::orbits::{KOrbitPoint, RankOneOrbitPoint};
use crate::periodic::PeriodicRadialState;
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

/// Coordinate layout for a chain with fixed orbit data.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxChart {
    kind: ChainKind,
    n: usize,
    xis: Vec<f64>,
    left_spectrum: Vec<f64>,
    right_spectrum: Vec<f64>,
}

impl DarbouxChart {
    pub fn new(kind: ChainKind, n: usize, xis: Vec<f64>, left_spectrum: Vec<f64>, right_spectrum: Vec<f64>) -> Self {
        Self { kind, n, xis, left_spectrum, right_spectrum }
    }

    pub fn for_state(state: &RadialState<f64>) -> Self {
        match state {
            RadialState::Periodic(s) => Self::new(
                ChainKind::Periodic,
                s.dim(),
                s.spins.iter().map(|p| p.xi).collect(),
                Vec::new(),
                Vec::new(),
            ),
            RadialState::Open(s) => Self::new(
                ChainKind::Open,
                s.dim(),
                s.spins.iter().map(|p| p.xi).collect(),
                s.mu_left.spectrum.clone(),
                s.mu_right.spectrum.clone(),
            ),
        }
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    /// Matrix size `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.xis.len()
    }

    pub fn xis(&self) -> &[f64] {
        &self.xis
    }

    fn boundary_len(&self) -> usize {
        match self.kind {
            ChainKind::Periodic => 0,
            ChainKind::Open => self.n * (self.n - 1) / 2,
        }
    }

    /// Total number of flat coordinates.
    pub fn len(&self) -> usize {
        2 * self.n + 2 * self.n * self.sites() + 2 * self.boundary_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn q_range(&self) -> Range<usize> {
        0..self.n
    }

    pub fn p_range(&self) -> Range<usize> {
        self.n..2 * self.n
    }

    /// `a^{(k)}` for site `k ∈ 1..=n`.
    pub fn a_range(&self, k: usize) -> Range<usize> {
        let s = 2 * self.n + 2 * self.n * (k - 1);
        s..s + self.n
    }

    /// `b^{(k)}` for site `k ∈ 1..=n`.
    pub fn b_range(&self, k: usize) -> Range<usize> {
        let s = 2 * self.n + 2 * self.n * (k - 1) + self.n;
        s..s + self.n
    }

    pub fn left_range(&self) -> Range<usize> {
        let s = 2 * self.n + 2 * self.n * self.sites();
        s..s + self.boundary_len()
    }

    pub fn right_range(&self) -> Range<usize> {
        let s = self.left_range().end;
        s..s + self.boundary_len()
    }

    /// Canonical pairs `(Q, P)` with `{Q, P} = 1`: `(q_i, p_i)` and `(a_i, b_i)`.
    pub fn conjugate_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.q_range().zip(self.p_range()).collect();
        for k in 1..=self.sites() {
            out.extend(self.a_range(k).zip(self.b_range(k)));
        }
        out
    }

    fn check_state(&self, state: &RadialState<f64>) -> Result<()> {
        let other = Self::for_state(state);
        if other.kind != self.kind || other.n != self.n || other.sites() != self.sites() {
            return Err(Error::InvalidArgument("state does not match chart layout".into()));
        }
        Ok(())
    }

    /// Flatten a state.
    pub fn pack(&self, state: &RadialState<f64>) -> Result<DVector<f64>> {
        self.check_state(state)?;
        let mut z = DVector::zeros(self.len());
        let (p, q) = (state.p(), state.q());
        z.rows_mut(0, self.n).copy_from(q);
        z.rows_mut(self.n, self.n).copy_from(p);
        let spins = match state {
            RadialState::Periodic(s) => &s.spins,
            RadialState::Open(s) => &s.spins,
        };
        for (k, s) in spins.iter().enumerate() {
            z.rows_mut(self.a_range(k + 1).start, self.n).copy_from(&s.a);
            z.rows_mut(self.b_range(k + 1).start, self.n).copy_from(&s.b);
        }
        if let RadialState::Open(s) = state {
            for (c, v) in self.left_range().zip(s.mu_left.coordinates()) {
                z[c] = v;
            }
            for (c, v) in self.right_range().zip(s.mu_right.coordinates()) {
                z[c] = v;
            }
        }
        Ok(z)
    }

    /// Rebuild a state over any scalar type.
    pub fn unpack<T: Real>(&self, z: &[T]) -> Result<RadialState<T>> {
        if z.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: z.len() });
        }
        let vec = |r: Range<usize>| DVector::from_column_slice(&z[r]);
        let q = vec(self.q_range());
        let p = vec(self.p_range());
        let spins = (1..=self.sites())
            .map(|k| RankOneOrbitPoint::new_unchecked(self.xis[k - 1], vec(self.a_range(k)), vec(self.b_range(k))))
            .collect();
        Ok(match self.kind {
            ChainKind::Periodic => RadialState::Periodic(PeriodicRadialState::new_unchecked(spins, p, q)),
            ChainKind::Open => RadialState::Open(OpenRadialState {
                mu_left: KOrbitPoint::from_coordinates(self.n, &z[self.left_range()], self.left_spectrum.clone()),
                spins,
                mu_right: KOrbitPoint::from_coordinates(self.n, &z[self.right_range()], self.right_spectrum.clone()),
                p,
                q,
            }),
        })
    }

    /// Poisson tensor `J` at `z` (trace normalization).
    pub fn poisson_tensor(&self, z: &[f64]) -> DMatrix<f64> {
        let m = self.len();
        let n = self.n;
        let mut j = DMatrix::zeros(m, m);
        let inv_n = 1.0 / n as f64;
        for (a, qi) in self.q_range().enumerate() {
            for (b, pj) in self.p_range().enumerate() {
                let v = if a == b { 1.0 - inv_n } else { -inv_n };
                j[(qi, pj)] = v;
                j[(pj, qi)] = -v;
            }
        }
        for k in 1..=self.sites() {
            for (bi, ai) in self.b_range(k).zip(self.a_range(k)) {
                j[(ai, bi)] = 1.0;
                j[(bi, ai)] = -1.0;
            }
        }
        if self.kind == ChainKind::Open {
            for range in [self.left_range(), self.right_range()] {
                let block = so_lie_poisson(n, &z[range.clone()]);
                j.view_mut((range.start, range.start), (range.len(), range.len())).copy_from(&block);
            }
        }
        j
    }

    /// `J v` without forming `J`.
    pub fn apply_poisson(&self, z: &[f64], v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(self.len());
        let (qr, pr) = (self.q_range(), self.p_range());
        let vp_mean = v.rows(pr.start, n).sum() / n as f64;
        let vq_mean = v.rows(qr.start, n).sum() / n as f64;
        for i in 0..n {
            out[qr.start + i] = v[pr.start + i] - vp_mean;
            out[pr.start + i] = -(v[qr.start + i] - vq_mean);
        }
        for k in 1..=self.sites() {
            for (bi, ai) in self.b_range(k).zip(self.a_range(k)) {
                out[ai] = v[bi];
                out[bi] = -v[ai];
            }
        }
        if self.kind == ChainKind::Open {
            for range in [self.left_range(), self.right_range()] {
                let block = so_lie_poisson(n, &z[range.clone()]);
                let w = block * v.rows(range.start, range.len());
                out.rows_mut(range.start, range.len()).copy_from(&w);
            }
        }
        out
    }

    /// `{F, G} = ∇Fᵀ J ∇G`.
    pub fn bracket(&self, z: &[f64], grad_f: &DVector<f64>, grad_g: &DVector<f64>) -> f64 {
        grad_f.dot(&self.apply_poisson(z, grad_g))
    }

    /// Killing-normalized Hamiltonian vector field `(1/2N) J ∇H`.
    pub fn vector_field(&self, z: &[f64], grad_h: &DVector<f64>) -> DVector<f64> {
        self.apply_poisson(z, grad_h) / (2.0 * self.n as f64)
    }
}

/// Lie–Poisson tensor of `so(N)*` in coordinates `m_ij = μ_ij`, `i < j`:
/// `{μ_ij, μ_kl} = ½(δ_jk μ_il + δ_il μ_jk + δ_jl μ_ki + δ_ik μ_lj)`.
pub fn so_lie_poisson(n: usize, coords: &[f64]) -> DMatrix<f64> {
    let mut mu = DMatrix::zeros(n, n);
    let mut idx = Vec::new();
    let mut c = 0;
    for i in 0..n {
        for j in i + 1..n {
            mu[(i, j)] = coords[c];
            mu[(j, i)] = -coords[c];
            idx.push((i, j));
            c += 1;
        }
    }
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    DMatrix::from_fn(idx.len(), idx.len(), |r, s| {
        let (i, j) = idx[r];
        let (k, l) = idx[s];
        0.5 * (d(j, k) * mu[(i, l)] + d(i, l) * mu[(j, k)] + d(j, l) * mu[(k, i)] + d(i, k) * mu[(l, j)])
    })
}
