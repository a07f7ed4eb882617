//! Scalar abstraction shared by the generic algebraic core.
//!
//! Every algebraic routine is written once over [`Real`], which covers `f32`,
//! `f64` and forward-mode dual numbers (used for exact gradients).

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Real scalar usable by the generic algebra.
pub trait Real: RealField + Copy + FromPrimitive {
    /// Lift an `f64` constant into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl<T: RealField + Copy + FromPrimitive> Real for T {}
