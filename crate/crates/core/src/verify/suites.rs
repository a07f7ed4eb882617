//! Suite drivers.

use super::probes::{dimension_probe, expected_dim_s, liouville_count_probe};
use super::psi::{psi_equivariance_check, psi_leaf_residual};
use super::words::{default_words, trace_word};
use super::*;
use crate::dynamics::angles::{angle_rate, m_invariance_defect};
use crate::dynamics::extended::{embed_matrices, gauge_transform};
use crate::dynamics::{
    angle_open, angle_periodic, embed_extended, flow_extended, gauge_fix, gradient, integrate_partial, radial_distance,
    AngleValue, ChainKind, DarbouxChart, ExtendedState, GradientMode, HamiltonianId, IntegratorConfig, RadialState, Scheme,
};
use crate::liealg::{AlgebraVector, GroupElement, LieContext};
use nalgebra::DMatrix;
use rand_distr::StandardNormal;
use crate::openchain::{self, OpenRadialState};
use crate::orbits::{local_spins, KOrbitPoint};
use crate::periodic::{self, PeriodicRadialState};
use crate::sampling::{random_gauge, random_q, random_sl, random_state, trial_rng};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const MAX_RESAMPLE: usize = 200;
/// Integrated T = 10 runs per chain in the conservation suite.
const ODE_TRIALS: usize = 5;

/// Run a suite (or all of them).
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Report> {
    if let Some(chains) = &opts.chains {
        for c in chains {
            c.validate()?;
        }
    }
    let observations = match suite {
        Suite::All => {
            let reports = Suite::INDIVIDUAL.iter().map(|s| run_suite(*s, opts)).collect::<Result<Vec<_>>>()?;
            let tol = opts.tol.unwrap_or(suite.tolerance());
            return Ok(Report::combine("all", tol, reports));
        }
        Suite::Dk => fan_out(opts, DK_CHAINS, 1000, dk_trial)?,
        Suite::Commute => fan_out(opts, COMMUTE_CHAINS, 200, commute_trial)?,
        Suite::Conserve => {
            let mut obs = fan_out(opts, CONSERVE_CHAINS, 20, conserve_flow_trial)?;
            let ode_opts = SuiteOptions { trials: Some(opts.trials.unwrap_or(ODE_TRIALS).min(ODE_TRIALS)), ..opts.clone() };
            obs.1.extend(fan_out(&ode_opts, CONSERVE_CHAINS, ODE_TRIALS, conserve_ode_trial)?.1);
            obs
        }
        Suite::Angles => fan_out(opts, ANGLE_CHAINS, 20, angle_trial)?,
        Suite::Projection => fan_out(opts, PROJECTION_CHAINS, 10, projection_trial)?,
        Suite::Psi => fan_out(opts, PSI_CHAINS, 100, psi_trial)?,
        Suite::Dims => fan_out(opts, DIMS_CHAINS, 20, dims_trial)?,
        Suite::Liouville => fan_out(opts, LIOUVILLE_CHAINS, 20, liouville_trial)?,
    };
    let (trials, obs) = observations;
    Ok(Report::from_observations(suite.name(), trials, suite.tolerance(), obs, opts.tol))
}

type Shape = (ChainKind, usize, usize);

const P: ChainKind = ChainKind::Periodic;
const O: ChainKind = ChainKind::Open;

const DK_CHAINS: &[Shape] = &[
    (P, 2, 2), (P, 2, 3), (P, 2, 4), (P, 3, 2), (P, 3, 3), (P, 3, 4),
    (P, 4, 2), (P, 4, 3), (P, 4, 4), (P, 5, 2), (P, 5, 3), (P, 5, 4),
    (O, 2, 1), (O, 2, 2), (O, 2, 3), (O, 2, 4), (O, 3, 1), (O, 3, 2), (O, 3, 3), (O, 3, 4),
    (O, 4, 1), (O, 4, 2), (O, 4, 3), (O, 4, 4), (O, 5, 1), (O, 5, 2), (O, 5, 3), (O, 5, 4),
];
const COMMUTE_CHAINS: &[Shape] = &[(P, 2, 2), (P, 3, 2), (P, 4, 3), (O, 2, 1), (O, 3, 2), (O, 4, 2)];
const CONSERVE_CHAINS: &[Shape] = &[(P, 2, 2), (P, 3, 2), (O, 2, 1), (O, 3, 2)];
const ANGLE_CHAINS: &[Shape] = &[(P, 2, 2), (P, 3, 2), (O, 2, 1), (O, 3, 2)];
const PROJECTION_CHAINS: &[Shape] =
    &[(P, 2, 1), (P, 2, 2), (P, 3, 1), (P, 3, 2), (O, 2, 1), (O, 2, 2), (O, 3, 1), (O, 3, 2)];
const PSI_CHAINS: &[Shape] = &[(P, 2, 2), (P, 3, 2), (P, 4, 2)];
const DIMS_CHAINS: &[Shape] = &[(P, 2, 1), (P, 2, 2), (P, 3, 1), (P, 3, 2), (P, 4, 2), (O, 2, 1), (O, 3, 1), (O, 3, 2)];
const LIOUVILLE_CHAINS: &[Shape] = &[(P, 2, 1), (P, 2, 2), (P, 3, 2), (P, 4, 3)];

/// Per-trial context handed to suite bodies.
struct Trial<'a> {
    ctx: LieContext,
    spec: ChainSpec,
    params: &'a crate::sampling::SampleParams,
    rng: ChaCha8Rng,
}

impl Trial<'_> {
    fn label(&self, what: &str) -> String {
        format!("{} {what}", self.spec)
    }

    fn state(&mut self) -> Result<RadialState<f64>> {
        random_state(&self.ctx, self.spec.kind, self.spec.sites, self.params, &mut self.rng)
    }

    /// Draw states until `accept` succeeds.
    fn state_where<T>(&mut self, mut accept: impl FnMut(&mut Self, RadialState<f64>) -> Result<T>) -> Result<T> {
        let mut last = Error::Infeasible("no sample drawn".into());
        for _ in 0..MAX_RESAMPLE {
            let s = match self.state() {
                Ok(s) => s,
                Err(e) => {
                    last = e;
                    continue;
                }
            };
            match accept(self, s) {
                Ok(v) => return Ok(v),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}

/// Run `body` for every chain and trial in parallel; observations keep trial order.
fn fan_out(
    opts: &SuiteOptions,
    defaults: &[Shape],
    default_trials: usize,
    body: fn(&mut Trial) -> Vec<Observation>,
) -> Result<(usize, Vec<Observation>)> {
    let chains: Vec<ChainSpec> = match &opts.chains {
        Some(c) => c.clone(),
        None => defaults.iter().map(|&(k, n, s)| ChainSpec::new(k, n, s)).collect(),
    };
    let trials = opts.trials.unwrap_or(default_trials);
    let jobs: Vec<(usize, ChainSpec, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..trials).map(move |i| (ci, *c, i)))
        .collect();
    let obs: Vec<Vec<Observation>> = jobs
        .par_iter()
        .map(|&(ci, spec, i)| {
            let ctx = match LieContext::new(spec.dim) {
                Ok(c) => c,
                Err(e) => return vec![Observation::failure(format!("{spec} setup"), Bound::Below(0.0), &e)],
            };
            let stream = ((ci as u64) << 32) | i as u64;
            let mut t = Trial { ctx, spec, params: &opts.params, rng: trial_rng(opts.seed, stream) };
            body(&mut t)
        })
        .collect();
    Ok((jobs.len(), obs.into_iter().flatten().collect()))
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn or_failure(label: String, bound: Bound, r: Result<f64>) -> Observation {
    match r {
        Ok(v) => Observation::new(label, v, bound),
        Err(e) => Observation::failure(label, bound, &e),
    }
}

// ---- D_k identities ----

fn dk_trial(t: &mut Trial) -> Vec<Observation> {
    let state = match t.state() {
        Ok(s) => s,
        Err(e) => return vec![Observation::failure(t.label("sampling"), Bound::Below(DK_TOL), &e)],
    };
    let ctx = &t.ctx;
    let mut out = Vec::new();
    match &state {
        RadialState::Periodic(s) => {
            for k in 2..=s.sites() {
                let r = periodic_dk_residual(ctx, s, k);
                out.push(or_failure(t.label("D_k vs H2 difference"), Bound::Below(DK_TOL), r));
            }
            let r = (|| {
                let c = periodic::h2_closed_form(ctx, s)?;
                let h = periodic::h2(ctx, s, s.sites())?;
                Ok(rel(c, h, h2_scale(ctx, &s.p, c, h)))
            })();
            out.push(or_failure(t.label("closed-form H2"), Bound::Below(H2_CLOSED_TOL), r));
        }
        RadialState::Open(s) => {
            for k in 1..=s.sites() {
                let r = open_dk_residual(ctx, s, k);
                out.push(or_failure(t.label("D_k vs H2 difference"), Bound::Below(DK_TOL), r));
            }
            for k in 1..=s.sites() {
                for l in k + 1..=s.sites() {
                    let r = (|| {
                        let a = openchain::theta_twist_r(ctx, s, k, l)?;
                        let b = openchain::theta_twist_r(ctx, s, l, k)?;
                        Ok(rel(a, b, a.abs().max(b.abs()).max(1.0)))
                    })();
                    out.push(or_failure(t.label("r-theta symmetry"), Bound::Below(R_THETA_TOL), r));
                }
            }
            let r = (|| {
                let c = openchain::h2_open_closed(ctx, s)?;
                let h = openchain::h2_open(ctx, s, s.sites())?;
                Ok(rel(c, h, h2_scale(ctx, &s.p, c, h)))
            })();
            out.push(or_failure(t.label("closed-form H2"), Bound::Below(H2_CLOSED_TOL), r));
        }
    }
    out
}

/// `max(|c|, |h|, ½(p, p))`: the kinetic term bounds the size of the
/// cancelling potential.
fn h2_scale(ctx: &LieContext, p: &nalgebra::DVector<f64>, c: f64, h: f64) -> f64 {
    c.abs().max(h.abs()).max(0.5 * ctx.cartan_pairing(p, p))
}

/// `|D_k − (H₂^{(k)} − H₂^{(k−1)})| / max(|D_k|, |H₂^{(k)}|, |H₂^{(k−1)}|)`.
pub fn periodic_dk_residual(ctx: &LieContext, s: &PeriodicRadialState<f64>, k: usize) -> Result<f64> {
    let d = periodic::kzb_d(ctx, s, k)?;
    let hk = periodic::h2(ctx, s, k)?;
    let hm = periodic::h2(ctx, s, k - 1)?;
    Ok(rel(d, hk - hm, d.abs().max(hk.abs()).max(hm.abs())))
}

/// Open-chain analogue of [`periodic_dk_residual`], `k ∈ 1..=n`.
pub fn open_dk_residual(ctx: &LieContext, s: &OpenRadialState<f64>, k: usize) -> Result<f64> {
    let d = openchain::bkzb_d(ctx, s, k)?;
    let hk = openchain::h2_open(ctx, s, k)?;
    let hm = openchain::h2_open(ctx, s, k - 1)?;
    Ok(rel(d, hk - hm, d.abs().max(hk.abs()).max(hm.abs())))
}

// ---- commutativity ----

/// `max |{H_a, H_b}|` over the family at one state.
pub fn max_family_bracket(ctx: &LieContext, state: &RadialState<f64>, mode: GradientMode) -> Result<f64> {
    let chart = DarbouxChart::for_state(state);
    let z = chart.pack(state)?;
    let grads = state
        .hamiltonian_family()
        .iter()
        .map(|h| gradient(h, ctx, &chart, z.as_slice(), mode))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0f64;
    for a in 0..grads.len() {
        for b in a + 1..grads.len() {
            worst = worst.max(chart.bracket(z.as_slice(), &grads[a], &grads[b]).abs());
        }
    }
    Ok(worst)
}

/// Largest Frobenius norm of the Lax matrices `x_k` of the embedded state.
pub fn lax_scale(state: &RadialState<f64>) -> f64 {
    embed_matrices(state).0.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// States with [`lax_scale`] above `UNIT_SCALE · N` are redrawn by the commutator suite.
pub const UNIT_SCALE: f64 = 2.0;

fn commute_trial(t: &mut Trial) -> Vec<Observation> {
    let label = t.label("max |{H_a, H_b}|");
    let bound = UNIT_SCALE * t.spec.dim as f64;
    let r = t.state_where(|t, s| {
        if lax_scale(&s) > bound {
            return Err(Error::InvalidArgument(format!("Lax scale above {bound}")));
        }
        max_family_bracket(&t.ctx, &s, GradientMode::Analytic)
    });
    vec![or_failure(label, Bound::Below(COMMUTE_TOL), r)]
}

// ---- conservation ----

/// Largest log-spread of `exp(t ∇c_d)` kept by exact-flow checks.
pub const FLOW_SPREAD_MAX: f64 = 5.0;

/// `t_max`, shortened so that the spectrum of `t ∇c_d(x_site)` spans at most
/// [`FLOW_SPREAD_MAX`].
pub fn conditioned_time(ctx: &LieContext, es: &ExtendedState, h: HamiltonianId, t_max: f64) -> Result<f64> {
    let grad = ctx.gradient_invariant(h.degree, es.x_at(h.site)?)?;
    let ev = grad.0.complex_eigenvalues();
    let hi = ev.iter().map(|c| c.re).fold(f64::MIN, f64::max);
    let lo = ev.iter().map(|c| c.re).fold(f64::MAX, f64::min);
    Ok(t_max.min(FLOW_SPREAD_MAX / (hi - lo).max(f64::MIN_POSITIVE)))
}

fn word_values(es: &ExtendedState, words: &[TraceWordSpec]) -> Result<Vec<f64>> {
    words.iter().map(|w| trace_word(es, w)).collect()
}

fn max_rel_drift(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs() / u.abs().max(1.0)).fold(0.0, f64::max)
}

/// Drift of all default trace words under every exact flow, each run for
/// [`conditioned_time`] with `t_max = t`.
pub fn exact_flow_drift(ctx: &LieContext, es: &ExtendedState, t: f64) -> Result<f64> {
    let words = default_words(es.kind, es.sites(), 4);
    let before = word_values(es, &words)?;
    let sites: Vec<usize> = match es.kind {
        ChainKind::Periodic => (1..=es.sites()).collect(),
        ChainKind::Open => (0..=es.sites()).collect(),
    };
    let mut worst = 0f64;
    for site in sites {
        for d in 2..=ctx.n() {
            let t = conditioned_time(ctx, es, HamiltonianId { site, degree: d }, t)?;
            let after = word_values(&flow_extended(ctx, es, site, d, t)?, &words)?;
            worst = worst.max(max_rel_drift(&before, &after));
        }
    }
    Ok(worst)
}

fn generic_extended(t: &mut Trial, state: &RadialState<f64>, scale: f64) -> Result<ExtendedState> {
    let es = embed_extended(&t.ctx, state)?;
    let hs = random_gauge(t.spec.kind, t.spec.dim, t.spec.sites, scale, &mut t.rng);
    gauge_transform(&es, &hs)
}

fn conserve_flow_trial(t: &mut Trial) -> Vec<Observation> {
    let label = t.label("trace words under exact flows");
    let r = (|| {
        let s = t.state()?;
        let es = generic_extended(t, &s, 0.3)?;
        exact_flow_drift(&t.ctx, &es, 0.5)
    })();
    vec![or_failure(label, Bound::Below(FLOW_DRIFT_TOL), r)]
}

/// Replace `p` by a strictly decreasing vector so that particles separate.
fn with_diverging_momenta(state: RadialState<f64>, gap: (f64, f64), rng: &mut ChaCha8Rng) -> RadialState<f64> {
    let p = random_q(state.dim(), gap, rng);
    match state {
        RadialState::Periodic(mut s) => {
            s.p = p;
            RadialState::Periodic(s)
        }
        RadialState::Open(mut s) => {
            s.p = p;
            RadialState::Open(s)
        }
    }
}

/// Integrator settings shared by the ODE-based suites.
pub fn reference_integrator(sample_interval: f64) -> IntegratorConfig {
    IntegratorConfig {
        scheme: Scheme::DormandPrince,
        step: 1e-2,
        tol: 1e-13,
        sample_interval: Some(sample_interval),
        ..Default::default()
    }
}

/// Relative drift of the default trace words along an integrated trajectory.
pub fn integrated_drift(ctx: &LieContext, state: &RadialState<f64>, h: HamiltonianId, t_final: f64) -> Result<ConservationReport> {
    let words = default_words(state.kind(), state.sites(), 4);
    let (traj, err) = integrate_partial(ctx, state, h, t_final, &reference_integrator(0.5));
    if let Some(e) = err {
        return Err(e);
    }
    let samples = traj
        .radial_states()?
        .iter()
        .map(|s| embed_extended(ctx, s).and_then(|es| word_values(&es, &words)))
        .collect::<Result<Vec<_>>>()?;
    let labels = words.iter().map(|w| w.to_string()).collect();
    ConservationReport::from_samples(labels, &samples, ODE_DRIFT_TOL)
}

fn conserve_ode_trial(t: &mut Trial) -> Vec<Observation> {
    let label = t.label("trace words along integrated H2 flow, T=10");
    let h = HamiltonianId { site: t.spec.sites, degree: 2 };
    let r = t.state_where(|t, s| {
        let s = with_diverging_momenta(s, (0.5, 1.5), &mut t.rng);
        integrated_drift(&t.ctx, &s, h, 10.0)
    });
    vec![or_failure(label, Bound::Below(ODE_DRIFT_TOL), r.map(|c| c.max_rel_drift))]
}

// ---- angle variables ----

const ANGLE_SAMPLES: usize = 50;
const ANGLE_GAUGE_TOL: f64 = 1e-10;

fn angle(es: &ExtendedState, weights: &[usize]) -> Result<AngleValue> {
    match es.kind {
        ChainKind::Periodic => angle_periodic(es, weights),
        ChainKind::Open => angle_open(es, weights),
    }
}

/// Largest deviation of `log|f(t)|` from `log|f(0)| + t·rate` over
/// [`ANGLE_SAMPLES`] equally spaced times in `[0, T]`, `T` from
/// [`conditioned_time`] with `t_max = 1`.
pub fn angle_linearity_residual(ctx: &LieContext, es: &ExtendedState, weights: &[usize], h: HamiltonianId) -> Result<f64> {
    let rate = angle_rate(ctx, es, weights, h.site, h.degree)?;
    let t_final = conditioned_time(ctx, es, h, 1.0)?;
    let f0 = angle(es, weights)?;
    let mut worst = 0f64;
    for j in 0..ANGLE_SAMPLES {
        let t = t_final * j as f64 / (ANGLE_SAMPLES - 1) as f64;
        let f = angle(&flow_extended(ctx, es, h.site, h.degree, t)?, weights)?;
        if f.sign != f0.sign {
            return Err(Error::InvalidArgument(format!("angle variable changed sign at t = {t}")));
        }
        worst = worst.max((f.log_abs - f0.log_abs - t * rate).abs());
    }
    Ok(worst)
}

fn random_weights(rng: &mut ChaCha8Rng, len: usize, n: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..n)).collect()
}

/// Sample a generic extended state whose angle variable is defined, with
/// strictly decreasing momenta to keep the spectra real. `symmetric_left`
/// zeroes the left boundary so that `x_0` is symmetric.
fn angle_sample(t: &mut Trial, symmetric_left: bool) -> Result<(ExtendedState, Vec<usize>)> {
    let len = match t.spec.kind {
        ChainKind::Periodic => t.spec.sites,
        ChainKind::Open => t.spec.sites + 2,
    };
    t.state_where(|t, s| {
        let s = with_diverging_momenta(s, (1.0, 2.0), &mut t.rng);
        let s = match s {
            RadialState::Open(mut o) if symmetric_left => {
                o.mu_left = KOrbitPoint::zero(o.dim());
                RadialState::Open(o)
            }
            other => other,
        };
        let es = generic_extended(t, &s, 0.3)?;
        let w = random_weights(&mut t.rng, len, t.spec.dim);
        angle(&es, &w)?;
        Ok((es, w))
    })
}

fn angle_trial(t: &mut Trial) -> Vec<Observation> {
    let mut out = Vec::new();
    let lin = t.label("log|f| linearity");
    let gauge = t.label("angle gauge invariance");
    let sample = angle_sample(t, false);
    let (es, w) = match sample {
        Ok(v) => v,
        Err(e) => return vec![Observation::failure(lin, Bound::Below(ANGLE_TOL), &e)],
    };
    for site in 1..=t.spec.sites {
        for degree in 2..=t.spec.dim {
            let r = angle_linearity_residual(&t.ctx, &es, &w, HamiltonianId { site, degree });
            out.push(or_failure(lin.clone(), Bound::Below(ANGLE_TOL), r));
        }
    }
    let hs = random_gauge(t.spec.kind, t.spec.dim, t.spec.sites, 0.3, &mut t.rng);
    let r = (|| {
        let a = angle(&es, &w)?;
        let b = angle(&gauge_transform(&es, &hs)?, &w)?;
        if a.sign != b.sign {
            return Ok(f64::INFINITY);
        }
        Ok((a.log_abs - b.log_abs).abs() / a.log_abs.abs().max(1.0))
    })();
    out.push(or_failure(gauge, Bound::Below(ANGLE_GAUGE_TOL), r));

    if t.spec.kind == ChainKind::Open {
        out.push(or_failure(t.label("M-invariance"), Bound::Exact, m_invariance_defect(&es, &w)));
        let lin0 = t.label("log|f| linearity, site 0 (symmetric x_0)");
        match angle_sample(t, true) {
            Ok((es0, w0)) => {
                for degree in 2..=t.spec.dim {
                    let r = angle_linearity_residual(&t.ctx, &es0, &w0, HamiltonianId { site: 0, degree });
                    out.push(or_failure(lin0.clone(), Bound::Below(ANGLE_TOL), r));
                }
                out.push(or_failure(t.label("M-invariance"), Bound::Exact, m_invariance_defect(&es0, &w0)));
            }
            Err(e) => out.push(Observation::failure(lin0, Bound::Below(ANGLE_TOL), &e)),
        }
    }
    out
}

// ---- projection method ----

/// Sup radial distance between the integrated and projected flows of `h`
/// over `[0, t_final]`, sampled every `dt`.
pub fn projection_distance(ctx: &LieContext, state: &RadialState<f64>, h: HamiltonianId, t_final: f64, dt: f64) -> Result<f64> {
    let es = embed_extended(ctx, state)?;
    let (traj, err) = integrate_partial(ctx, state, h, t_final, &reference_integrator(dt));
    if let Some(e) = err {
        return Err(e);
    }
    let mut worst = 0f64;
    for (i, &t) in traj.times.iter().enumerate() {
        let projected = gauge_fix(&flow_extended(ctx, &es, h.site, h.degree, t)?)?;
        worst = worst.max(radial_distance(&traj.radial(i)?, &projected)?);
    }
    Ok(worst)
}

fn projection_trial(t: &mut Trial) -> Vec<Observation> {
    let label = t.label("sup radial distance, projection vs ODE, T=1");
    let r = t.state_where(|t, s| {
        let mut worst = 0f64;
        for h in s.hamiltonian_family() {
            worst = worst.max(projection_distance(&t.ctx, &s, h, 1.0, 0.05)?);
        }
        Ok(worst)
    });
    vec![or_failure(label, Bound::Below(PROJECTION_TOL), r)]
}

// ---- psi map ----

fn psi_trial(t: &mut Trial) -> Vec<Observation> {
    let eq = t.label("psi equivariance");
    let leaf = t.label("psi leaf swap spectra");
    if t.spec.kind != ChainKind::Periodic || t.spec.sites != 2 {
        let e = Error::InvalidArgument("psi needs a two-site periodic chain".into());
        return vec![Observation::failure(eq, Bound::Below(PSI_EQUIVARIANCE_TOL), &e)];
    }
    let es = random_pair_state(t.spec.dim, &mut t.rng);
    let h1 = random_sl(t.spec.dim, 0.3, &mut t.rng);
    let h2 = random_sl(t.spec.dim, 0.3, &mut t.rng);
    vec![
        or_failure(eq, Bound::Below(PSI_EQUIVARIANCE_TOL), psi_equivariance_check(&es, &h1, &h2)),
        or_failure(leaf, Bound::Below(PSI_LEAF_TOL), psi_leaf_residual(&t.ctx, &es)),
    ]
}

/// Unit-scale point of `T*(G × G)`: Gaussian traceless `x_i`, `g_i` near the identity.
pub fn random_pair_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ExtendedState {
    let x = (0..2)
        .map(|_| {
            let mut m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let shift = m.trace() / n as f64;
            for i in 0..n {
                m[(i, i)] -= shift;
            }
            AlgebraVector(m)
        })
        .collect();
    let g = (0..2).map(|_| GroupElement(random_sl(n, 0.3, rng))).collect();
    ExtendedState {
        kind: ChainKind::Periodic,
        x,
        g,
        xis: vec![0.0; 2],
        left_spectrum: Vec::new(),
        right_spectrum: Vec::new(),
    }
}

// ---- dimensions ----

fn count(label: String, r: Result<(usize, usize)>) -> Observation {
    match r {
        Ok((found, expected)) => {
            let o = Observation::below(label, (found as f64 - expected as f64).abs(), COUNT_TOL);
            if found != expected {
                o.with_note(format!("found {found}, expected {expected}"))
            } else {
                o
            }
        }
        Err(e) => Observation::failure(label, Bound::Below(COUNT_TOL), &e),
    }
}

fn dims_trial(t: &mut Trial) -> Vec<Observation> {
    let (ls, lb, lsum) = (t.label("dim S"), t.label("dim B"), t.label("dim S = dim P + dim B"));
    let probe = t.state().and_then(|s| Ok((dimension_probe(&t.ctx, &s, None)?, s)));
    let (p, s) = match probe {
        Ok(v) => v,
        Err(e) => return vec![Observation::failure(ls, Bound::Below(COUNT_TOL), &e)],
    };
    let r = t.spec.dim - 1;
    let expected_b = match t.spec.kind {
        ChainKind::Periodic => t.spec.sites * r,
        ChainKind::Open => (t.spec.sites + 1) * r,
    };
    vec![
        count(ls, Ok((p.dim_s, expected_dim_s(&s)))),
        count(lb, Ok((p.dim_b, expected_b))),
        count(lsum, Ok((p.dim_p + p.dim_b, p.dim_s))),
    ]
}

// ---- rank-one example ----

fn liouville_trial(t: &mut Trial) -> Vec<Observation> {
    let state = match t.state() {
        Ok(s) => s,
        Err(e) => return vec![Observation::failure(t.label("Liouville rank"), Bound::Below(COUNT_TOL), &e)],
    };
    let expected = match t.spec.kind {
        ChainKind::Periodic => t.spec.sites * (t.spec.dim - 1),
        ChainKind::Open => (t.spec.sites + 1) * (t.spec.dim - 1),
    };
    let mut out = vec![count(t.label("Liouville rank"), liouville_count_probe(&t.ctx, &state).map(|p| (p.rank, expected)))];
    let spins = match &state {
        RadialState::Periodic(s) => s.spins.clone(),
        RadialState::Open(s) => s.spins.clone(),
    };
    let n = t.spec.dim;
    let mut casimir = 0f64;
    for sp in &spins {
        let lambda = t.rng.random_range(0.2..5.0);
        let h = random_sl(n, 0.5, &mut t.rng);
        let hinv = h.clone().try_inverse().expect("random_sl returns invertible matrices");
        let moved = sp.gauge_move(lambda).matrix();
        let rotated = &h * &moved * &hinv;
        let target = sp.xi * sp.xi * (1.0 - 1.0 / n as f64);
        for m in [moved, rotated] {
            match t.ctx.casimir(2, &AlgebraVector(m)) {
                Ok(c) => casimir = casimir.max(rel(c, target, target.abs().max(1.0))),
                Err(_) => casimir = f64::INFINITY,
            }
        }
    }
    out.push(Observation::below(t.label("rank-one orbit Casimir"), casimir, CASIMIR_TOL));
    if t.spec.kind == ChainKind::Periodic {
        out.push(or_failure(t.label("local-spin identity"), Bound::Below(CASIMIR_TOL), local_spin_residual(&spins)));
    }
    out
}

/// `Σ_{k,ℓ} g^{(i)}_{kℓ} g^{(j)}_{ℓk} − (μ_ij μ_ji − Ξ²/(N²n))` for `i ≠ j`,
/// relative to the scale of the terms.
pub fn local_spin_residual(spins: &[crate::orbits::RankOneOrbitPoint<f64>]) -> Result<f64> {
    let scale = spins.iter().map(|s| s.a.amax() * s.b.amax()).fold(1.0, f64::max);
    let g = local_spins(spins, crate::tolerances::CONSTRAINT_TOL * scale)?;
    let n = spins[0].dim();
    let ns = spins.len() as f64;
    let total: f64 = spins.iter().map(|s| s.xi).sum();
    let mu = spins.iter().skip(1).fold(spins[0].matrix(), |acc, s| acc + s.matrix());
    let mut worst = 0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let lhs = (&g[i] * &g[j]).trace();
            let rhs = mu[(i, j)] * mu[(j, i)] - total * total / (n as f64 * n as f64 * ns);
            worst = worst.max(rel(lhs, rhs, lhs.abs().max(rhs.abs()).max(1.0)));
        }
    }
    Ok(worst)
}
