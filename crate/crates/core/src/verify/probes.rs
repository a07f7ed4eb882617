//! Jacobian-rank probes: Liouville count and dimension bookkeeping.

use super::words::{default_words, RadialTraceWord, TraceWordSpec};
use crate::dynamics::{gradient, ChainKind, DarbouxChart, GradientMode, RadialState};
use crate::error::{Error, Result};
use crate::liealg::LieContext;
use crate::tolerances::{RANK_GAP_FACTOR, RANK_THRESHOLD};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Numerical rank with the normalized singular values it was read from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProbe {
    pub rank: usize,
    /// Singular values divided by the largest, descending.
    pub singular_values: Vec<f64>,
}

/// Rank of the matrix whose rows are `rows`, each scaled to unit norm.
///
/// Rows shorter than [`RANK_THRESHOLD`] times the longest row are roundoff
/// (gradients of identically vanishing functions) and are dropped.
///
/// Relative singular values below [`RANK_THRESHOLD`] count as zero. A value
/// within a factor [`RANK_GAP_FACTOR`] of the threshold on either side makes
/// the rank ambiguous and is reported as an error.
pub fn numerical_rank(rows: &[DVector<f64>]) -> Result<RankProbe> {
    if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Gradient("non-finite row in rank probe".into()));
    }
    let longest = rows.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let rows: Vec<DVector<f64>> =
        rows.iter().filter(|r| r.norm() > RANK_THRESHOLD * longest).map(|r| r.normalize()).collect();
    if rows.is_empty() {
        return Ok(RankProbe { rank: 0, singular_values: Vec::new() });
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = sv[0];
    let sv: Vec<f64> = sv.iter().map(|s| s / top).collect();
    let lo = RANK_THRESHOLD / RANK_GAP_FACTOR;
    let hi = RANK_THRESHOLD * RANK_GAP_FACTOR;
    if let Some(s) = sv.iter().find(|s| **s > lo && **s <= hi) {
        return Err(Error::RankAmbiguous(format!(
            "relative singular value {s:.3e} within a factor {RANK_GAP_FACTOR} of the threshold {RANK_THRESHOLD:e}"
        )));
    }
    let rank = sv.iter().filter(|s| **s >= RANK_THRESHOLD).count();
    Ok(RankProbe { rank, singular_values: sv })
}

/// Rank of the chart gradients of the Hamiltonian family `{H_d^{(k)}}`.
pub fn liouville_count_probe(ctx: &LieContext, state: &RadialState<f64>) -> Result<RankProbe> {
    let chart = DarbouxChart::for_state(state);
    let z = chart.pack(state)?;
    let rows = state
        .hamiltonian_family()
        .iter()
        .map(|h| gradient(h, ctx, &chart, z.as_slice(), GradientMode::Analytic))
        .collect::<Result<Vec<_>>>()?;
    numerical_rank(&rows)
}

/// Gradients of the first-class constraints cut out by the reduction that
/// the chart has not already performed: `aᵀb` per spin and, for the
/// periodic chain, the Cartan moments `ν_i = Σ_k a_i^{(k)} b_i^{(k)}`.
pub fn constraint_gradients(chart: &DarbouxChart, z: &[f64]) -> Vec<DVector<f64>> {
    let n = chart.n();
    let mut rows = Vec::new();
    for k in 1..=chart.sites() {
        let mut g = DVector::zeros(chart.len());
        for (ia, ib) in chart.a_range(k).zip(chart.b_range(k)) {
            g[ia] = z[ib];
            g[ib] = z[ia];
        }
        rows.push(g);
    }
    if chart.kind() == ChainKind::Periodic {
        for i in 0..n {
            let mut g = DVector::zeros(chart.len());
            for k in 1..=chart.sites() {
                let (ia, ib) = (chart.a_range(k).start + i, chart.b_range(k).start + i);
                g[ia] = z[ib];
                g[ib] = z[ia];
            }
            rows.push(g);
        }
    }
    rows
}

/// Output of [`dimension_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionProbe {
    /// `rank J − 2 rank(J∇C)`.
    pub dim_s: usize,
    /// Independent Hamiltonian vector fields of the family modulo gauge.
    pub dim_b: usize,
    /// Independent Hamiltonian vector fields of trace words modulo gauge.
    pub dim_p: usize,
    pub poisson_rank: usize,
    pub constraint_rank: usize,
    pub words: usize,
}

/// Jacobian-rank dimension counts at a state; `words` defaults to the mixed
/// words of length ≤ 4 plus the Casimir words `Y^d`.
pub fn dimension_probe(ctx: &LieContext, state: &RadialState<f64>, words: Option<&[TraceWordSpec]>) -> Result<DimensionProbe> {
    let chart = DarbouxChart::for_state(state);
    let z = chart.pack(state)?;
    let z = z.as_slice();
    let n = ctx.n();

    let j = chart.poisson_tensor(z);
    let j_rows: Vec<DVector<f64>> = j.row_iter().map(|r| r.transpose()).collect();
    let poisson_rank = numerical_rank(&j_rows)?.rank;

    let hamiltonian_field = |g: DVector<f64>| chart.apply_poisson(z, &g);
    let c_fields: Vec<DVector<f64>> = constraint_gradients(&chart, z).into_iter().map(hamiltonian_field).collect();
    let constraint_rank = numerical_rank(&c_fields)?.rank;

    let mut h_fields = c_fields.clone();
    for h in state.hamiltonian_family() {
        h_fields.push(hamiltonian_field(gradient(&h, ctx, &chart, z, GradientMode::Analytic)?));
    }
    let dim_b = numerical_rank(&h_fields)?.rank - constraint_rank;

    let owned;
    let words = match words {
        Some(w) => w,
        None => {
            let mut w = default_words(state.kind(), state.sites(), 4);
            let sites: Vec<usize> = match state.kind() {
                ChainKind::Periodic => (1..=state.sites()).collect(),
                ChainKind::Open => (0..=state.sites() + 1).collect(),
            };
            for site in sites {
                for d in 2..=n {
                    w.push(TraceWordSpec::new(site, vec![(super::words::Letter::Y, d as u32)])?);
                }
            }
            owned = w;
            &owned
        }
    };
    let mut w_fields = c_fields;
    for w in words {
        let obs = RadialTraceWord(w.clone());
        w_fields.push(hamiltonian_field(gradient(&obs, ctx, &chart, z, GradientMode::Autodiff)?));
    }
    let dim_p = numerical_rank(&w_fields)?.rank - constraint_rank;

    if poisson_rank < 2 * constraint_rank {
        return Err(Error::RankAmbiguous(format!(
            "Poisson rank {poisson_rank} below twice the constraint rank {constraint_rank}"
        )));
    }
    Ok(DimensionProbe {
        dim_s: poisson_rank - 2 * constraint_rank,
        dim_b,
        dim_p,
        poisson_rank,
        constraint_rank,
        words: words.len(),
    })
}

/// Dimension of the `SO(N)` coadjoint orbit with the given rotation frequencies.
pub fn k_orbit_dim(n: usize, spectrum: &[f64]) -> usize {
    let total = n * (n - 1) / 2;
    let mut freqs: Vec<f64> = spectrum.iter().map(|w| w.abs()).filter(|w| *w > 0.0).collect();
    freqs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let zeros = n - 2 * freqs.len();
    let mut centralizer = zeros * zeros.saturating_sub(1) / 2;
    let mut i = 0;
    while i < freqs.len() {
        let mut k = 1;
        while i + k < freqs.len() && (freqs[i + k] - freqs[i]).abs() <= 1e-12 * freqs[i] {
            k += 1;
        }
        centralizer += k * k;
        i += k;
    }
    total - centralizer
}

/// Symplectic dimension expected from the orbit data alone.
pub fn expected_dim_s(state: &RadialState<f64>) -> usize {
    let n = state.dim();
    let r = n - 1;
    match state {
        RadialState::Periodic(s) => 2 * s.sites() * r,
        RadialState::Open(s) => {
            2 * r + 2 * s.sites() * r + k_orbit_dim(n, &s.mu_left.spectrum) + k_orbit_dim(n, &s.mu_right.spectrum)
        }
    }
}
