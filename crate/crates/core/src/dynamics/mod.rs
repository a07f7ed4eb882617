//! Time evolution: Darboux/Poisson charts, Hamiltonian vector fields,
//! integrators, the exact projection method and angle variables.
//!
//! Dynamics uses the Killing normalization: the Hamiltonian vector field of
//! `H` is `(1/2N) J ∇H`, where `J` is the chart Poisson tensor with
//! `{q_i, p_j} = δ_ij − 1/N` and `{a_i, b_j} = δ_ij`.

pub mod angles;
pub mod chart;
pub mod extended;
pub mod gradient;
pub mod integrate;
pub mod serialize;

use crate::error::Result;
use crate::liealg::LieContext;
use crate::openchain::{self, OpenRadialState};
use crate::periodic::{self, PeriodicRadialState};
use crate::scalar::Real;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use angles::{angle_open, angle_periodic, AngleValue};
pub use chart::DarbouxChart;
pub use extended::{
    embed_extended, flow_extended, gauge_fix, gauge_fix_open, gauge_fix_periodic, radial_distance, ExtendedState,
};
pub use gradient::{gradient, poisson_bracket, GradientMode, Observable};
pub use integrate::{integrate, integrate_partial, IntegratorConfig, Scheme, Trajectory, TrajectoryMeta};

/// Chain topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Periodic,
    Open,
}

/// `H_d^{(k)} = Tr((x^{(k)})^d)`; periodic sites `1..=n`, open sites `0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamiltonianId {
    pub site: usize,
    pub degree: usize,
}

/// Radial state of either chain.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialState<T: nalgebra::Scalar> {
    Periodic(PeriodicRadialState<T>),
    Open(OpenRadialState<T>),
}

impl<T: Real> RadialState<T> {
    pub fn kind(&self) -> ChainKind {
        match self {
            Self::Periodic(_) => ChainKind::Periodic,
            Self::Open(_) => ChainKind::Open,
        }
    }

    pub fn dim(&self) -> usize {
        self.p().len()
    }

    pub fn sites(&self) -> usize {
        match self {
            Self::Periodic(s) => s.sites(),
            Self::Open(s) => s.sites(),
        }
    }

    pub fn p(&self) -> &DVector<T> {
        match self {
            Self::Periodic(s) => &s.p,
            Self::Open(s) => &s.p,
        }
    }

    pub fn q(&self) -> &DVector<T> {
        match self {
            Self::Periodic(s) => &s.q,
            Self::Open(s) => &s.q,
        }
    }

    /// Evaluate `H_d^{(k)}`.
    pub fn hamiltonian(&self, ctx: &LieContext, h: HamiltonianId) -> Result<T> {
        match self {
            Self::Periodic(s) => periodic::hamiltonian(ctx, s, h.site, h.degree),
            Self::Open(s) => openchain::hamiltonian_open(ctx, s, h.site, h.degree),
        }
    }

    /// All Hamiltonian labels `(site, degree)` of the commuting family.
    pub fn hamiltonian_family(&self) -> Vec<HamiltonianId> {
        let n = self.dim();
        let sites: Vec<usize> = match self {
            Self::Periodic(s) => (1..=s.sites()).collect(),
            Self::Open(s) => (0..=s.sites()).collect(),
        };
        sites
            .into_iter()
            .flat_map(|site| (2..=n).map(move |degree| HamiltonianId { site, degree }))
            .collect()
    }
}

impl<T: Real> From<PeriodicRadialState<T>> for RadialState<T> {
    fn from(s: PeriodicRadialState<T>) -> Self {
        Self::Periodic(s)
    }
}

impl<T: Real> From<OpenRadialState<T>> for RadialState<T> {
    fn from(s: OpenRadialState<T>) -> Self {
        Self::Open(s)
    }
}
