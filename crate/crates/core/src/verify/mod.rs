//! Numerical certification of the structural claims: KZB identities,
//! commutativity, conservation of trace words, the projection method, angle
//! variables, rank and dimension counts, and the two-site `ψ` map.
//!
//! Every suite samples independent random states from [`trial_rng`]`(seed, i)`,
//! runs the trials in parallel, and folds the per-trial residuals into a
//! [`Report`] keyed by case label. The fold is a maximum, so reports do not
//! depend on scheduling.

pub mod probes;
pub mod psi;
pub mod suites;
pub mod words;

use crate::dynamics::serialize::Exact;
use crate::dynamics::ChainKind;
use crate::error::{Error, Result};
use crate::sampling::SampleParams;
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

pub use probes::{dimension_probe, liouville_count_probe, numerical_rank, DimensionProbe, RankProbe};
pub use psi::{psi_equivariance_check, psi_leaf_residual, psi_map, starred_action, starred_moment};
pub use suites::run_suite;
pub use words::{default_words, trace_word, trace_word_matrices, Letter, RadialTraceWord, TraceWordSpec};

/// Relative error of `D_k` against the quadratic Casimir difference.
pub const DK_TOL: f64 = 1e-10;
/// Symmetry `r^{θ_k}_{kl} = r^{θ_l}_{lk}` and closed-form `H₂` agreement.
pub const R_THETA_TOL: f64 = 1e-12;
pub const H2_CLOSED_TOL: f64 = 1e-10;
/// `max |{H_a, H_b}|`.
pub const COMMUTE_TOL: f64 = 1e-7;
/// Relative drift of trace words under exact flows and integrated flows.
pub const FLOW_DRIFT_TOL: f64 = 1e-8;
pub const ODE_DRIFT_TOL: f64 = 1e-6;
/// Sup radial distance between the projection method and the ODE.
pub const PROJECTION_TOL: f64 = 1e-6;
/// Deviation of `log|f(t)|` from the predicted line.
pub const ANGLE_TOL: f64 = 1e-9;
/// Orbit Casimir and local-spin identity.
pub const CASIMIR_TOL: f64 = 1e-12;
pub const PSI_EQUIVARIANCE_TOL: f64 = 1e-12;
pub const PSI_LEAF_TOL: f64 = 1e-10;
/// Integer-valued probes pass when the count matches exactly.
pub const COUNT_TOL: f64 = 0.5;

/// Chain shape: kind, matrix size `N` and number of spin sites `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub kind: ChainKind,
    pub dim: usize,
    pub sites: usize,
}

impl ChainSpec {
    pub fn new(kind: ChainKind, dim: usize, sites: usize) -> Self {
        Self { kind, dim, sites }
    }

    pub fn periodic(dim: usize, sites: usize) -> Self {
        Self::new(ChainKind::Periodic, dim, sites)
    }

    pub fn open(dim: usize, sites: usize) -> Self {
        Self::new(ChainKind::Open, dim, sites)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!("N must be at least 2, got {}", self.dim)));
        }
        if self.sites == 0 {
            return Err(Error::InvalidArgument("at least one site is required".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ChainKind::Periodic => "periodic",
            ChainKind::Open => "open",
        };
        write!(f, "{kind} N={} n={}", self.dim, self.sites)
    }
}

/// Verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Dk,
    Commute,
    Conserve,
    Angles,
    Projection,
    Psi,
    Dims,
    Liouville,
    All,
}

impl Suite {
    pub const INDIVIDUAL: [Suite; 8] = [
        Suite::Dk,
        Suite::Commute,
        Suite::Conserve,
        Suite::Angles,
        Suite::Projection,
        Suite::Psi,
        Suite::Dims,
        Suite::Liouville,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Dk => "dk",
            Suite::Commute => "commute",
            Suite::Conserve => "conserve",
            Suite::Angles => "angles",
            Suite::Projection => "projection",
            Suite::Psi => "psi",
            Suite::Dims => "dims",
            Suite::Liouville => "liouville",
            Suite::All => "all",
        }
    }

    /// Headline tolerance reported at the top of the suite's report.
    pub fn tolerance(&self) -> f64 {
        match self {
            Suite::Dk => DK_TOL,
            Suite::Commute => COMMUTE_TOL,
            Suite::Conserve => ODE_DRIFT_TOL,
            Suite::Angles => ANGLE_TOL,
            Suite::Projection => PROJECTION_TOL,
            Suite::Psi => PSI_LEAF_TOL,
            Suite::Dims | Suite::Liouville => COUNT_TOL,
            Suite::All => PROJECTION_TOL,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dk" => Ok(Suite::Dk),
            "commute" => Ok(Suite::Commute),
            "conserve" => Ok(Suite::Conserve),
            "angles" => Ok(Suite::Angles),
            "projection" => Ok(Suite::Projection),
            "psi" => Ok(Suite::Psi),
            "dims" => Ok(Suite::Dims),
            "liouville" => Ok(Suite::Liouville),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite '{other}'"))),
        }
    }
}

/// Knobs shared by all suites. `None` fields fall back to per-suite defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct SuiteOptions {
    pub seed: u64,
    pub trials: Option<usize>,
    pub chains: Option<Vec<ChainSpec>>,
    /// Replaces every case tolerance; comparisons become strict.
    pub tol: Option<f64>,
    pub params: SampleParams,
}


/// How a residual is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `residual < tol`.
    Below(f64),
    /// `residual == 0`.
    Exact,
}

impl Bound {
    fn tolerance(&self) -> f64 {
        match self {
            Bound::Below(t) => *t,
            Bound::Exact => 0.0,
        }
    }

    fn accepts(&self, residual: f64) -> bool {
        match self {
            Bound::Below(t) => residual < *t,
            Bound::Exact => residual == 0.0,
        }
    }
}

/// One residual from one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub label: String,
    pub residual: f64,
    pub bound: Bound,
    pub note: Option<String>,
}

impl Observation {
    pub fn new(label: impl Into<String>, residual: f64, bound: Bound) -> Self {
        Self { label: label.into(), residual, bound, note: None }
    }

    pub fn below(label: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self::new(label, residual, Bound::Below(tol))
    }

    /// A failed trial; the residual is infinite.
    pub fn failure(label: impl Into<String>, bound: Bound, err: &Error) -> Self {
        Self { label: label.into(), residual: f64::INFINITY, bound, note: Some(err.to_string()) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

fn exact<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    Exact(*v).serialize(s)
}

/// Aggregate over all trials of one case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub label: String,
    #[serde(serialize_with = "exact")]
    pub residual: f64,
    #[serde(serialize_with = "exact")]
    pub tolerance: f64,
    pub exact: bool,
    pub samples: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Suite outcome. `pass` holds iff every case passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub trials: usize,
    #[serde(serialize_with = "exact")]
    pub tolerance: f64,
    #[serde(serialize_with = "exact")]
    pub max_residual: f64,
    pub pass: bool,
    pub per_case: Vec<CaseResult>,
}

impl Report {
    /// Fold observations into cases, in order of first appearance.
    pub fn from_observations(
        suite: &str,
        trials: usize,
        tolerance: f64,
        observations: impl IntoIterator<Item = Observation>,
        tol_override: Option<f64>,
    ) -> Self {
        let mut cases: Vec<(CaseResult, Bound)> = Vec::new();
        for mut o in observations {
            if let Some(t) = tol_override {
                o.bound = Bound::Below(t);
            }
            let residual = if o.residual.is_nan() { f64::INFINITY } else { o.residual };
            let ok = o.bound.accepts(residual);
            match cases.iter_mut().find(|(c, _)| c.label == o.label) {
                Some((c, _)) => {
                    c.samples += 1;
                    if residual > c.residual {
                        c.residual = residual;
                    }
                    if !ok && c.pass {
                        c.pass = false;
                        c.note = o.note.or_else(|| c.note.take());
                    } else if c.note.is_none() {
                        c.note = o.note;
                    }
                }
                None => cases.push((
                    CaseResult {
                        label: o.label,
                        residual,
                        tolerance: o.bound.tolerance(),
                        exact: matches!(o.bound, Bound::Exact),
                        samples: 1,
                        pass: ok,
                        note: o.note,
                    },
                    o.bound,
                )),
            }
        }
        let per_case: Vec<CaseResult> = cases.into_iter().map(|(c, _)| c).collect();
        let max_residual = per_case.iter().map(|c| c.residual).fold(0.0, f64::max);
        let pass = !per_case.is_empty() && per_case.iter().all(|c| c.pass);
        Self {
            suite: suite.to_string(),
            trials,
            tolerance: tol_override.unwrap_or(tolerance),
            max_residual,
            pass,
            per_case,
        }
    }

    /// Concatenate suite reports, prefixing case labels with the suite name.
    pub fn combine(suite: &str, tolerance: f64, reports: Vec<Report>) -> Self {
        let trials = reports.iter().map(|r| r.trials).sum();
        let per_case: Vec<CaseResult> = reports
            .into_iter()
            .flat_map(|r| {
                let name = r.suite;
                r.per_case.into_iter().map(move |mut c| {
                    c.label = format!("{name}: {}", c.label);
                    c
                })
            })
            .collect();
        let max_residual = per_case.iter().map(|c| c.residual).fold(0.0, f64::max);
        let pass = !per_case.is_empty() && per_case.iter().all(|c| c.pass);
        Self { suite: suite.to_string(), trials, tolerance, max_residual, pass, per_case }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Cases that failed.
    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.per_case.iter().filter(|c| !c.pass)
    }
}

/// Drift of a set of conserved quantities along a sequence of samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub labels: Vec<String>,
    pub initial: Vec<Exact>,
    #[serde(serialize_with = "exact")]
    pub max_abs_drift: f64,
    /// Drift of each quantity relative to `max(1, |initial|)`, maximized.
    #[serde(serialize_with = "exact")]
    pub max_rel_drift: f64,
    #[serde(serialize_with = "exact")]
    pub tolerance: f64,
    pub pass: bool,
}

impl ConservationReport {
    /// `samples[t][j]` is quantity `j` at sample `t`; passes on relative drift.
    pub fn from_samples(labels: Vec<String>, samples: &[Vec<f64>], tolerance: f64) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
        if labels.len() != first.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), found: first.len() });
        }
        let mut max_abs = 0f64;
        let mut max_rel = 0f64;
        for row in samples {
            if row.len() != first.len() {
                return Err(Error::DimensionMismatch { expected: first.len(), found: row.len() });
            }
            for (v, v0) in row.iter().zip(first) {
                let d = (v - v0).abs();
                let d = if d.is_nan() { f64::INFINITY } else { d };
                max_abs = max_abs.max(d);
                max_rel = max_rel.max(d / v0.abs().max(1.0));
            }
        }
        Ok(Self {
            labels,
            initial: first.iter().copied().map(Exact).collect(),
            max_abs_drift: max_abs,
            max_rel_drift: max_rel,
            tolerance,
            pass: max_rel < tolerance,
        })
    }
}
