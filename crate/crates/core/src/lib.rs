//! Spin Calogero-Moser chains for `SL_N(R)`.

pub mod dynamics;
pub mod error;
pub mod liealg;
pub mod openchain;
pub mod orbits;
pub mod periodic;
pub mod sampling;
pub mod scalar;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use liealg::{LieContext, Root};
pub use scalar::Real;

pub type AlgebraVector = liealg::AlgebraVector<f64>;
pub type GroupElement = liealg::GroupElement<f64>;
pub type RankOneOrbitPoint = orbits::RankOneOrbitPoint<f64>;
pub type KOrbitPoint = orbits::KOrbitPoint<f64>;
pub type PeriodicRadialState = periodic::PeriodicRadialState<f64>;
pub type OpenRadialState = openchain::OpenRadialState<f64>;
