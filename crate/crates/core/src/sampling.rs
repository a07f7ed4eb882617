//! Random regular states and gauge elements for tests and verification.

use crate::dynamics::{ChainKind, RadialState};
use crate::error::{Error, Result};
use crate::liealg::LieContext;
use crate::openchain::OpenRadialState;
use crate::orbits::{gaussian_vector, normalize_gauge, random_special_orthogonal, sample_constrained, sample_k_orbit, KOrbitPoint, RankOneOrbitPoint};
use crate::periodic::PeriodicRadialState;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Sampling ranges for random states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    /// Consecutive gaps `q_i − q_{i+1}` are uniform in this range.
    pub gap: (f64, f64),
    /// Standard deviation of `p` before centring.
    pub p_sigma: f64,
    /// `|ξ|` is uniform in this range, with a random sign.
    pub xi: (f64, f64),
    /// Boundary frequencies are uniform in this range; `None` gives zero boundaries.
    pub boundary: Option<(f64, f64)>,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self { gap: (0.5, 1.5), p_sigma: 1.0, xi: (0.5, 2.0), boundary: Some((0.2, 1.5)) }
    }
}

/// Deterministic per-trial generator: stream `index` of `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_q<R: Rng + ?Sized>(n: usize, gap: (f64, f64), rng: &mut R) -> DVector<f64> {
    let mut q = DVector::<f64>::zeros(n);
    for i in 1..n {
        q[i] = q[i - 1] - rng.random_range(gap.0..=gap.1);
    }
    let m = q.mean();
    q.add_scalar_mut(-m);
    q
}

pub fn random_p<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> DVector<f64> {
    let mut p = gaussian_vector(n, rng) * sigma;
    let m = p.mean();
    p.add_scalar_mut(-m);
    p
}

pub fn random_xis<R: Rng + ?Sized>(sites: usize, range: (f64, f64), rng: &mut R) -> Vec<f64> {
    (0..sites)
        .map(|_| {
            let v = rng.random_range(range.0..=range.1);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Rank-one spins with `aᵀb = ξ_k` only (no Cartan constraint), canonical gauge.
pub fn random_free_spins<R: Rng + ?Sized>(n: usize, xis: &[f64], rng: &mut R) -> Result<Vec<RankOneOrbitPoint<f64>>> {
    xis.iter()
        .map(|&xi| {
            let a = gaussian_vector(n, rng);
            let mut b = gaussian_vector(n, rng);
            let r = xi - a.dot(&b);
            b += &a * (r / a.norm_squared());
            normalize_gauge(&RankOneOrbitPoint::new_unchecked(xi, a, b))
        })
        .collect()
}

pub fn random_periodic_state<R: Rng + ?Sized>(
    ctx: &LieContext,
    sites: usize,
    params: &SampleParams,
    rng: &mut R,
) -> Result<PeriodicRadialState<f64>> {
    let n = ctx.n();
    let xis = random_xis(sites, params.xi, rng);
    let spins = sample_constrained(n, &xis, rng)?;
    let q = random_q(n, params.gap, rng);
    let p = random_p(n, params.p_sigma, rng);
    Ok(PeriodicRadialState::new_unchecked(spins, p, q))
}

pub fn random_boundary<R: Rng + ?Sized>(n: usize, range: Option<(f64, f64)>, rng: &mut R) -> Result<KOrbitPoint<f64>> {
    match range {
        None => Ok(KOrbitPoint::zero(n)),
        Some((lo, hi)) => {
            let spectrum: Vec<f64> = (0..n / 2).map(|_| rng.random_range(lo..=hi)).collect();
            sample_k_orbit(n, &spectrum, rng)
        }
    }
}

pub fn random_open_state<R: Rng + ?Sized>(
    ctx: &LieContext,
    sites: usize,
    params: &SampleParams,
    rng: &mut R,
) -> Result<OpenRadialState<f64>> {
    let n = ctx.n();
    if sites == 0 {
        return Err(Error::InvalidArgument("open chain needs at least one site".into()));
    }
    let xis = random_xis(sites, params.xi, rng);
    let spins = random_free_spins(n, &xis, rng)?;
    let mu_left = random_boundary(n, params.boundary, rng)?;
    let mu_right = random_boundary(n, params.boundary, rng)?;
    let q = random_q(n, params.gap, rng);
    let p = random_p(n, params.p_sigma, rng);
    Ok(OpenRadialState { mu_left, spins, mu_right, p, q })
}

pub fn random_state<R: Rng + ?Sized>(
    ctx: &LieContext,
    kind: ChainKind,
    sites: usize,
    params: &SampleParams,
    rng: &mut R,
) -> Result<RadialState<f64>> {
    match kind {
        ChainKind::Periodic => random_periodic_state(ctx, sites, params, rng).map(RadialState::Periodic),
        ChainKind::Open => random_open_state(ctx, sites, params, rng).map(RadialState::Open),
    }
}

/// Random element of `SL_N(ℝ)` near the identity: `exp(scale·X)` with `X`
/// Gaussian and traceless.
pub fn random_sl<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let mut x = DMatrix::from_fn(n, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let shift = x.trace() / n as f64;
    for i in 0..n {
        x[(i, i)] -= shift;
    }
    x.exp()
}

/// Random gauge element for [`crate::dynamics::extended::gauge_transform`]:
/// `n` elements of `SL_N` (periodic) or `(k_l, h_1..h_n, k_r)` (open).
pub fn random_gauge<R: Rng + ?Sized>(kind: ChainKind, n: usize, sites: usize, scale: f64, rng: &mut R) -> Vec<DMatrix<f64>> {
    match kind {
        ChainKind::Periodic => (0..sites).map(|_| random_sl(n, scale, rng)).collect(),
        ChainKind::Open => {
            let mut hs = vec![random_special_orthogonal(n, rng)];
            hs.extend((0..sites).map(|_| random_sl(n, scale, rng)));
            hs.push(random_special_orthogonal(n, rng));
            hs
        }
    }
}
