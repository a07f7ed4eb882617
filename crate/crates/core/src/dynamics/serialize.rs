//! Trajectory output: JSON with 17 significant digits, and flat CSV.
//!
//! CSV columns: `t`, `p_1..p_N`, `q_1..q_N`, per site `a^{(k)}` then `b^{(k)}`,
//! then the boundary coordinates `μ′_ij`, `μ″_ij` (`i < j`, row-major).

use super::integrate::{Trajectory, TrajectoryMeta};
use super::RadialState;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

/// A real written with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exact(pub f64);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format_real(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

/// `{:.16e}` formatting, shared by JSON and CSV.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn exact_vec(v: &[f64]) -> Vec<Exact> {
    v.iter().copied().map(Exact).collect()
}

#[derive(Serialize)]
struct SpinOut {
    xi: Exact,
    a: Vec<Exact>,
    b: Vec<Exact>,
}

#[derive(Serialize)]
struct BoundaryOut {
    matrix: Vec<Vec<Exact>>,
    spectrum: Vec<Exact>,
}

#[derive(Serialize)]
struct StateOut {
    p: Vec<Exact>,
    q: Vec<Exact>,
    spins: Vec<SpinOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_left: Option<BoundaryOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_right: Option<BoundaryOut>,
}

#[derive(Serialize)]
struct TrajectoryOut<'a, M: Serialize> {
    times: Vec<Exact>,
    states: Vec<StateOut>,
    meta: &'a M,
}

#[derive(Serialize)]
struct MetaOut<'a, E: Serialize> {
    #[serde(flatten)]
    base: &'a TrajectoryMeta,
    #[serde(flatten)]
    extra: &'a E,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<Exact>> {
    m.row_iter().map(|r| r.iter().copied().map(Exact).collect()).collect()
}

fn state_out(s: &RadialState<f64>) -> StateOut {
    let spins = match s {
        RadialState::Periodic(s) => &s.spins,
        RadialState::Open(s) => &s.spins,
    };
    let spins = spins
        .iter()
        .map(|sp| SpinOut { xi: Exact(sp.xi), a: exact_vec(sp.a.as_slice()), b: exact_vec(sp.b.as_slice()) })
        .collect();
    let (mu_left, mu_right) = match s {
        RadialState::Open(o) => (
            Some(BoundaryOut { matrix: matrix_rows(&o.mu_left.matrix), spectrum: exact_vec(&o.mu_left.spectrum) }),
            Some(BoundaryOut { matrix: matrix_rows(&o.mu_right.matrix), spectrum: exact_vec(&o.mu_right.spectrum) }),
        ),
        RadialState::Periodic(_) => (None, None),
    };
    StateOut { p: exact_vec(s.p().as_slice()), q: exact_vec(s.q().as_slice()), spins, mu_left, mu_right }
}

/// Serialize a trajectory; `extra` fields are merged into `meta`.
pub fn trajectory_to_json<E: Serialize>(traj: &Trajectory, extra: &E) -> Result<String> {
    let states = traj.radial_states()?.iter().map(state_out).collect();
    let meta = MetaOut { base: &traj.meta, extra };
    let out = TrajectoryOut { times: exact_vec(&traj.times), states, meta: &meta };
    serde_json::to_string_pretty(&out).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[derive(Deserialize)]
struct SpinIn {
    xi: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Deserialize)]
struct BoundaryIn {
    matrix: Vec<Vec<f64>>,
    spectrum: Vec<f64>,
}

#[derive(Deserialize)]
struct StateIn {
    p: Vec<f64>,
    q: Vec<f64>,
    spins: Vec<SpinIn>,
    mu_left: Option<BoundaryIn>,
    mu_right: Option<BoundaryIn>,
}

#[derive(Deserialize)]
struct TrajectoryIn {
    times: Vec<f64>,
    states: Vec<StateIn>,
    meta: serde_json::Value,
}

/// Parsed trajectory file.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<RadialState<f64>>,
    pub meta: serde_json::Value,
}

fn boundary_in(b: BoundaryIn) -> crate::orbits::KOrbitPoint<f64> {
    let n = b.matrix.len();
    let m = DMatrix::from_fn(n, n, |r, c| b.matrix[r][c]);
    crate::orbits::KOrbitPoint { matrix: m, spectrum: b.spectrum }
}

pub fn trajectory_from_json(text: &str) -> Result<TrajectoryRecord> {
    let t: TrajectoryIn = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let states = t
        .states
        .into_iter()
        .map(|s| {
            let spins = s
                .spins
                .into_iter()
                .map(|sp| crate::orbits::RankOneOrbitPoint::new_unchecked(sp.xi, DVector::from_vec(sp.a), DVector::from_vec(sp.b)))
                .collect();
            let p = DVector::from_vec(s.p);
            let q = DVector::from_vec(s.q);
            match (s.mu_left, s.mu_right) {
                (Some(l), Some(r)) => RadialState::Open(crate::openchain::OpenRadialState {
                    mu_left: boundary_in(l),
                    spins,
                    mu_right: boundary_in(r),
                    p,
                    q,
                }),
                _ => RadialState::Periodic(crate::periodic::PeriodicRadialState::new_unchecked(spins, p, q)),
            }
        })
        .collect();
    Ok(TrajectoryRecord { times: t.times, states, meta: t.meta })
}

/// CSV header for a trajectory's chart.
pub fn csv_header(traj: &Trajectory) -> String {
    let c = &traj.chart;
    let n = c.n();
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("p{i}")));
    cols.extend((1..=n).map(|i| format!("q{i}")));
    for k in 1..=c.sites() {
        cols.extend((1..=n).map(|i| format!("a{k}_{i}")));
        cols.extend((1..=n).map(|i| format!("b{k}_{i}")));
    }
    for side in ["left", "right"] {
        if c.kind() == super::ChainKind::Open {
            for i in 1..=n {
                for j in i + 1..=n {
                    cols.push(format!("{side}_{i}{j}"));
                }
            }
        }
    }
    cols.join(",")
}

/// One row per sample, columns as in [`csv_header`].
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let c = &traj.chart;
    let mut out = csv_header(traj);
    out.push('\n');
    for (t, z) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![format_real(*t)];
        let z = z.as_slice();
        row.extend(z[c.p_range()].iter().map(|v| format_real(*v)));
        row.extend(z[c.q_range()].iter().map(|v| format_real(*v)));
        row.extend(z[c.p_range().end..].iter().map(|v| format_real(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
