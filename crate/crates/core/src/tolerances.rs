//! Default numerical thresholds.

/// Relative gap below which two torus coordinates or eigenvalues count as equal.
pub const REGULARITY_EPS: f64 = 1e-8;

/// Absolute residual accepted for orbit and moment constraints on unit-scale data.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Tolerance on `|det g - 1|` for group elements.
pub const DET_TOL: f64 = 1e-9;

/// Relative singular-value threshold used by rank probes.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Required separation factor between the rank threshold and the nearest singular value.
pub const RANK_GAP_FACTOR: f64 = 10.0;

/// Relative central-difference step.
pub const FD_STEP: f64 = 1e-6;
