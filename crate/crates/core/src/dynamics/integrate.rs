//! Numerical integration of radial Hamiltonian flows.

use super::chart::DarbouxChart;
use super::gradient::{gradient, GradientMode, Observable};
use super::{HamiltonianId, RadialState};
use crate::error::{Error, Result};
use crate::liealg::LieContext;
use crate::orbits::{normalize_gauge, project_onto_constraints};
use crate::tolerances::REGULARITY_EPS;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Time-stepping scheme.
///
/// The Hamiltonians are not separable in `(p, q)`, so the symplectic choice is
/// the implicit midpoint rule rather than leapfrog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rk4,
    DormandPrince,
    ImplicitMidpoint,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Self::Rk4),
            "dopri5" | "dormand-prince" | "adaptive" | "rk45" => Ok(Self::DormandPrince),
            "implicit-midpoint" | "midpoint" | "symplectic" => Ok(Self::ImplicitMidpoint),
            other => Err(Error::InvalidArgument(format!("unknown integration scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Fixed step, or the initial step for the adaptive scheme.
    pub step: f64,
    /// Local error tolerance (adaptive) or fixed-point tolerance (implicit).
    pub tol: f64,
    /// Output spacing; `None` records every step.
    pub sample_interval: Option<f64>,
    pub gradient: GradientMode,
    /// Re-impose the orbit and moment constraints after each step.
    pub project: bool,
    /// `-1.0` integrates the reversed field.
    pub time_direction: f64,
    pub max_steps: usize,
    pub regularity_eps: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            step: 1e-3,
            tol: 1e-12,
            sample_interval: None,
            gradient: GradientMode::Analytic,
            project: true,
            time_direction: 1.0,
            max_steps: 50_000_000,
            regularity_eps: REGULARITY_EPS,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("sample interval must be positive, got {s}")));
            }
        }
        if self.time_direction != 1.0 && self.time_direction != -1.0 {
            return Err(Error::InvalidArgument("time direction must be +1 or -1".into()));
        }
        if let GradientMode::CentralDifference { rel_step } = self.gradient {
            if !(rel_step > 0.0) {
                return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub scheme: Scheme,
    pub step: f64,
    pub tol: f64,
    pub hamiltonian: Option<HamiltonianId>,
    pub time_direction: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Failure message when the run stopped early.
    pub failure: Option<String>,
}

/// Sampled radial trajectory, stored as flat chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub chart: DarbouxChart,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn radial(&self, i: usize) -> Result<RadialState<f64>> {
        self.chart.unpack(self.states[i].as_slice())
    }

    pub fn radial_states(&self) -> Result<Vec<RadialState<f64>>> {
        (0..self.len()).map(|i| self.radial(i)).collect()
    }

    pub fn last(&self) -> Option<(f64, &DVector<f64>)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Integrate `H_d^{(k)}` from `state` for time `t_final`.
pub fn integrate(
    ctx: &LieContext,
    state: &RadialState<f64>,
    h: HamiltonianId,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let (traj, err) = integrate_partial(ctx, state, h, t_final, cfg);
    match err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Like [`integrate`], but returns the samples gathered before a failure.
pub fn integrate_partial(
    ctx: &LieContext,
    state: &RadialState<f64>,
    h: HamiltonianId,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> (Trajectory, Option<Error>) {
    let chart = DarbouxChart::for_state(state);
    let z0 = match chart.pack(state) {
        Ok(z) => z,
        Err(e) => return (empty(chart, cfg, Some(h)), Some(e)),
    };
    integrate_observable(ctx, &chart, &h, Some(h), z0, t_final, cfg)
}

fn empty(chart: DarbouxChart, cfg: &IntegratorConfig, h: Option<HamiltonianId>) -> Trajectory {
    Trajectory {
        chart,
        times: Vec::new(),
        states: Vec::new(),
        meta: TrajectoryMeta {
            scheme: cfg.scheme,
            step: cfg.step,
            tol: cfg.tol,
            hamiltonian: h,
            time_direction: cfg.time_direction,
            accepted_steps: 0,
            rejected_steps: 0,
            failure: None,
        },
    }
}

/// Integrate the flow of an arbitrary observable from flat coordinates `z0`.
pub fn integrate_observable<O: Observable>(
    ctx: &LieContext,
    chart: &DarbouxChart,
    obs: &O,
    label: Option<HamiltonianId>,
    z0: DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> (Trajectory, Option<Error>) {
    let mut traj = empty(chart.clone(), cfg, label);
    let res = run(ctx, chart, obs, z0, t_final, cfg, &mut traj);
    if let Err(e) = &res {
        traj.meta.failure = Some(e.to_string());
    }
    (traj, res.err())
}

struct Stepper<'a, O> {
    ctx: &'a LieContext,
    chart: &'a DarbouxChart,
    obs: &'a O,
    cfg: &'a IntegratorConfig,
}

impl<O: Observable> Stepper<'_, O> {
    fn field(&self, z: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        let g = gradient(self.obs, self.ctx, self.chart, z.as_slice(), self.cfg.gradient).map_err(|e| match e {
            Error::NonRegular(_) | Error::Gradient(_) => {
                Error::RegularityLoss { time: t, min_gap: min_gap(&z.as_slice()[self.chart.q_range()]) }
            }
            other => other,
        })?;
        Ok(self.chart.vector_field(z.as_slice(), &g) * self.cfg.time_direction)
    }

    fn rk4(&self, z: &DVector<f64>, h: f64, t: f64) -> Result<DVector<f64>> {
        let k1 = self.field(z, t)?;
        let k2 = self.field(&(z + &k1 * (h / 2.0)), t)?;
        let k3 = self.field(&(z + &k2 * (h / 2.0)), t)?;
        let k4 = self.field(&(z + &k3 * h), t)?;
        Ok(z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }

    /// One Dormand–Prince attempt: (5th-order solution, error estimate).
    fn dopri(&self, z: &DVector<f64>, h: f64, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push(self.field(z, t)?);
        for row in A.iter() {
            let mut y = z.clone();
            for (j, kj) in k.iter().enumerate() {
                if row[j] != 0.0 {
                    y += kj * (h * row[j]);
                }
            }
            k.push(self.field(&y, t)?);
        }
        let mut y5 = z.clone();
        let mut err = DVector::zeros(z.len());
        for j in 0..7 {
            y5 += &k[j] * (h * B5[j]);
            err += &k[j] * (h * (B5[j] - B4[j]));
        }
        Ok((y5, err))
    }

    fn midpoint(&self, z: &DVector<f64>, h: f64, t: f64) -> Result<DVector<f64>> {
        let mut next = z + self.field(z, t)? * h;
        for _ in 0..200 {
            let mid = (z + &next) * 0.5;
            let cand = z + self.field(&mid, t)? * h;
            let delta = (&cand - &next).amax();
            next = cand;
            if delta <= self.cfg.tol * 1f64.max(next.amax()) {
                return Ok(next);
            }
        }
        Err(Error::StepFailure { time: t, reason: "implicit midpoint iteration did not converge".into() })
    }

    /// Re-impose constraints; returns the corrected point.
    fn project(&self, z: DVector<f64>) -> Result<DVector<f64>> {
        let mut st = self.chart.unpack::<f64>(z.as_slice())?;
        match &mut st {
            RadialState::Periodic(s) => {
                project_onto_constraints(&mut s.spins)?;
                for sp in &mut s.spins {
                    *sp = normalize_gauge(sp)?;
                }
                recenter(&mut s.p);
                recenter(&mut s.q);
            }
            RadialState::Open(s) => {
                for sp in &mut s.spins {
                    let r = sp.xi - sp.a.dot(&sp.b);
                    let na = sp.a.norm_squared();
                    if na > 0.0 {
                        sp.b += &sp.a * (r / na);
                    }
                    *sp = normalize_gauge(sp)?;
                }
                recenter(&mut s.p);
                recenter(&mut s.q);
            }
        }
        self.chart.pack(&st)
    }
}

fn recenter(v: &mut DVector<f64>) {
    let m = v.mean();
    v.add_scalar_mut(-m);
}

fn min_gap(q: &[f64]) -> f64 {
    q.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
}

fn check_point(chart: &DarbouxChart, z: &DVector<f64>, t: f64, eps: f64) -> Result<()> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure { time: t, reason: "non-finite state".into() });
    }
    let q = &z.as_slice()[chart.q_range()];
    let scale = q.iter().fold(1f64, |m, v| m.max(v.abs()));
    let gap = min_gap(q);
    if !(gap > eps * scale) {
        return Err(Error::RegularityLoss { time: t, min_gap: gap });
    }
    Ok(())
}

fn run<O: Observable>(
    ctx: &LieContext,
    chart: &DarbouxChart,
    obs: &O,
    z0: DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
    traj: &mut Trajectory,
) -> Result<()> {
    cfg.validate()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be nonnegative, got {t_final}")));
    }
    if z0.len() != chart.len() {
        return Err(Error::DimensionMismatch { expected: chart.len(), found: z0.len() });
    }
    check_point(chart, &z0, 0.0, cfg.regularity_eps)?;
    let st = Stepper { ctx, chart, obs, cfg };
    let mut z = z0;
    let mut t = 0.0;
    traj.times.push(t);
    traj.states.push(z.clone());
    if t_final == 0.0 {
        return Ok(());
    }

    let n_samples = cfg.sample_interval.map(|s| ((t_final / s) - 1e-9).ceil().max(1.0) as usize);
    let sample_time = |j: usize| -> f64 {
        match (cfg.sample_interval, n_samples) {
            (Some(s), Some(m)) if j < m => s * j as f64,
            _ => t_final,
        }
    };
    let mut next_sample = 1;
    let mut h = cfg.step.min(t_final);
    let mut steps = 0usize;
    let time_eps = 1e-12 * t_final.max(1.0);

    while t < t_final - time_eps {
        if steps >= cfg.max_steps {
            return Err(Error::StepFailure { time: t, reason: "step limit reached".into() });
        }
        let target = if cfg.sample_interval.is_some() { sample_time(next_sample) } else { t_final };
        let mut dt = h.min(target - t);
        let last_in_window = dt >= target - t - time_eps;
        if last_in_window {
            dt = target - t;
        }
        let znew = match cfg.scheme {
            Scheme::Rk4 => st.rk4(&z, dt, t)?,
            Scheme::ImplicitMidpoint => st.midpoint(&z, dt, t)?,
            Scheme::DormandPrince => {
                let (y, err) = st.dopri(&z, dt, t)?;
                let scale = z.iter().zip(y.iter()).map(|(a, b)| a.abs().max(b.abs())).fold(1f64, f64::max);
                let e = err.amax() / (cfg.tol * scale);
                let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if e > 1.0 {
                    traj.meta.rejected_steps += 1;
                    h = dt * factor;
                    if h < 1e-14 * t_final.max(1.0) {
                        return Err(Error::StepFailure { time: t, reason: "adaptive step underflow".into() });
                    }
                    steps += 1;
                    continue;
                }
                if !last_in_window {
                    h = dt * factor;
                } else {
                    h = h.max(dt * factor.min(1.0));
                }
                y
            }
        };
        steps += 1;
        let tn = if last_in_window { target } else { t + dt };
        let znew = if cfg.project { st.project(znew)? } else { znew };
        check_point(chart, &znew, tn, cfg.regularity_eps)?;
        z = znew;
        t = tn;
        traj.meta.accepted_steps += 1;
        if cfg.sample_interval.is_none() || last_in_window {
            traj.times.push(t);
            traj.states.push(z.clone());
            if last_in_window {
                next_sample += 1;
            }
        }
    }
    Ok(())
}
