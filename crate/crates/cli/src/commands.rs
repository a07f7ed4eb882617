//! `simulate`, `verify` and `compare`.

use crate::config::{ConfigError, Format, LoadedConfig, Simulation};
use crate::output::{to_json, write_atomic, Provenance};
use serde::Serialize;
use spincm_core::dynamics::serialize::{exact_vec, trajectory_to_csv, trajectory_to_json, Exact};
use spincm_core::dynamics::{
    embed_extended, flow_extended, gauge_fix, gradient, integrate_partial, radial_distance, GradientMode, HamiltonianId,
    Trajectory,
};
use spincm_core::verify::{run_suite, Report, Suite, SuiteOptions};
use spincm_core::Error as CoreError;
use std::path::{Path, PathBuf};

/// How a command ended; maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Numerical failure or I/O error (exit 3).
    Runtime(String),
    /// Ran to completion but a check did not pass (exit 1).
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Check(_) => 1,
            Self::Usage(_) => 2,
            Self::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Runtime(m) | Self::Check(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Usage(format!("config error: {e}"))
    }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct CommonArgs {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
}

struct Context {
    loaded: LoadedConfig,
    seed: u64,
    out: PathBuf,
    format: Format,
    tol: Option<f64>,
}

impl Context {
    fn new(args: &CommonArgs, config_required: bool) -> Result<Self, Failure> {
        let loaded = match &args.config {
            Some(p) => LoadedConfig::load(p)?,
            None if config_required => return Err(Failure::Usage("--config is required".into())),
            None => LoadedConfig::empty(),
        };
        if let Some(t) = args.tol {
            if !(t >= 0.0) {
                return Err(Failure::Usage(format!("--tol must be non-negative, got {t}")));
            }
        }
        let seed = args.seed.or(loaded.config.seed).unwrap_or(0);
        let out = args.out.clone().or_else(|| loaded.config.out_dir()).unwrap_or_else(|| PathBuf::from("."));
        let format = args.format.or_else(|| loaded.config.format()).unwrap_or(Format::Json);
        Ok(Self { loaded, seed, out, format, tol: args.tol })
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(&self.loaded.hash, self.seed)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        write_atomic(&path, contents.as_bytes()).map_err(io_failure(&path))?;
        Ok(path)
    }

    fn write_trajectory<E: Serialize>(&self, stem: &str, traj: &Trajectory, extra: &E) -> Result<Vec<PathBuf>, Failure> {
        let mut written = Vec::new();
        if self.format.json() {
            let mut json = trajectory_to_json(traj, extra).map_err(runtime)?;
            json.push('\n');
            written.push(self.write(&format!("{stem}.json"), &json)?);
        }
        if self.format.csv() {
            written.push(self.write(&format!("{stem}.csv"), &trajectory_to_csv(traj))?);
        }
        Ok(written)
    }
}

fn failure_time(e: &CoreError, traj: &Trajectory) -> Option<f64> {
    match e {
        CoreError::RegularityLoss { time, .. } | CoreError::StepFailure { time, .. } => Some(*time),
        _ => traj.times.last().copied(),
    }
}

#[derive(Serialize)]
struct SimulateMeta {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(rename = "T")]
    t_final: Exact,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure_time: Option<Exact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_flight_residual: Option<Exact>,
}

/// Default bound for `--assert-free-flight`.
pub const FREE_FLIGHT_TOL: f64 = 1e-9;

/// Largest deviation of the samples from `p(t) = p(0)`, `q(t) = q(0) + t·∂H/∂p(0)`,
/// relative to `max(1, |expected|)`.
pub fn free_flight_residual(sim: &Simulation, traj: &Trajectory) -> Result<f64, CoreError> {
    let chart = &traj.chart;
    let z0 = chart.pack(&sim.state)?;
    let grad = gradient(&sim.hamiltonian, &sim.ctx, chart, z0.as_slice(), GradientMode::Analytic)?;
    let v = chart.vector_field(z0.as_slice(), &grad);
    let (qr, pr) = (chart.q_range(), chart.p_range());
    let mut worst = 0f64;
    for (t, z) in traj.times.iter().zip(&traj.states) {
        for (i, j) in qr.clone().zip(pr.clone()) {
            let q = z0[i] + t * v[i];
            let p = z0[j];
            worst = worst.max((z[i] - q).abs() / q.abs().max(1.0));
            worst = worst.max((z[j] - p).abs() / p.abs().max(1.0));
        }
    }
    Ok(worst)
}

pub fn simulate(args: &CommonArgs, assert_free_flight: bool) -> Result<String, Failure> {
    let ctx = Context::new(args, true)?;
    let sim = ctx.loaded.config.simulation(ctx.seed)?;
    let (traj, err) = integrate_partial(&sim.ctx, &sim.state, sim.hamiltonian, sim.t_final, &sim.integrator);
    let free_flight = if assert_free_flight && err.is_none() {
        Some(free_flight_residual(&sim, &traj).map_err(runtime)?)
    } else {
        None
    };
    let meta = SimulateMeta {
        provenance: ctx.provenance(),
        t_final: Exact(sim.t_final),
        failure_time: err.as_ref().and_then(|e| failure_time(e, &traj)).map(Exact),
        free_flight_residual: free_flight.map(Exact),
    };
    let written = ctx.write_trajectory(&ctx.loaded.config.output_name(), &traj, &meta)?;
    let files = written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ");
    if let Some(e) = err {
        return Err(Failure::Runtime(format!("integration failed: {e}; partial trajectory written to {files}")));
    }
    let mut summary = format!("{} samples over T = {} written to {files}", traj.len(), sim.t_final);
    if let Some(r) = free_flight {
        let tol = ctx.tol.unwrap_or(FREE_FLIGHT_TOL);
        let line = format!("free flight: max deviation {r:.3e} (tolerance {tol:.1e})");
        if !(r <= tol) {
            return Err(Failure::Check(format!("{summary}\n{line}: FAIL")));
        }
        summary = format!("{summary}\n{line}: pass");
    }
    Ok(summary)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(flatten)]
    report: &'a Report,
}

/// Suite options from flags and the `[verify]` section.
fn suite_options(ctx: &Context, trials: Option<usize>) -> Result<SuiteOptions, Failure> {
    let section = ctx.loaded.config.verify.clone().unwrap_or_default();
    let tol = ctx.tol.or(section.tol);
    if let Some(t) = section.tol {
        if !(t >= 0.0) {
            return Err(ConfigError { key: "verify.tol".into(), message: "must be non-negative".into() }.into());
        }
    }
    let trials = trials.or(section.trials);
    if trials == Some(0) {
        return Err(Failure::Usage("trials must be positive".into()));
    }
    Ok(SuiteOptions {
        seed: ctx.seed,
        trials,
        chains: ctx.loaded.config.verify_chains()?,
        tol,
        ..Default::default()
    })
}

pub fn verify(suite: &str, args: &CommonArgs, trials: Option<usize>) -> Result<String, Failure> {
    let suite: Suite = suite.parse().map_err(|e: CoreError| Failure::Usage(format!("{e}; expected one of dk, commute, conserve, angles, projection, psi, dims, liouville, all")))?;
    let ctx = Context::new(args, false)?;
    let opts = suite_options(&ctx, trials)?;
    let report = run_suite(suite, &opts).map_err(runtime)?;
    let file = ReportFile { provenance: ctx.provenance(), report: &report };
    let path = ctx.write(&format!("report-{}.json", suite.name()), &to_json(&file).map_err(runtime)?)?;
    let mut lines = vec![format!(
        "{}: {} (max residual {:.3e}, tolerance {:.1e}, {} trials) -> {}",
        report.suite,
        if report.pass { "pass" } else { "FAIL" },
        report.max_residual,
        report.tolerance,
        report.trials,
        path.display()
    )];
    for c in report.failures() {
        lines.push(format!("  failed: {} residual {:.3e} > {:.1e}", c.label, c.residual, c.tolerance));
    }
    let text = lines.join("\n");
    if report.pass {
        Ok(text)
    } else {
        Err(Failure::Check(text))
    }
}

/// Default bound on the sup radial distance for `compare`.
pub const COMPARE_TOL: f64 = 1e-6;

#[derive(Serialize)]
struct CompareReport {
    #[serde(flatten)]
    provenance: Provenance,
    hamiltonian: HamiltonianId,
    #[serde(rename = "T")]
    t_final: Exact,
    times: Vec<Exact>,
    distances: Vec<Exact>,
    sup_distance: Exact,
    tolerance: Exact,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct CompareMeta {
    #[serde(flatten)]
    provenance: Provenance,
    method: &'static str,
}

/// ODE trajectory and the projection-method states at the same times.
pub fn projection_trajectory(sim: &Simulation, ode: &Trajectory) -> Result<(Trajectory, Vec<f64>), CoreError> {
    let es = embed_extended(&sim.ctx, &sim.state)?;
    let mut proj = Trajectory { chart: ode.chart.clone(), times: Vec::new(), states: Vec::new(), meta: ode.meta.clone() };
    let mut distances = Vec::with_capacity(ode.len());
    for (i, &t) in ode.times.iter().enumerate() {
        let s = gauge_fix(&flow_extended(&sim.ctx, &es, sim.hamiltonian.site, sim.hamiltonian.degree, t)?)?;
        distances.push(radial_distance(&ode.radial(i)?, &s)?);
        proj.states.push(ode.chart.pack(&s)?);
        proj.times.push(t);
    }
    Ok((proj, distances))
}

pub fn compare(args: &CommonArgs) -> Result<String, Failure> {
    let ctx = Context::new(args, true)?;
    let sim = ctx.loaded.config.simulation(ctx.seed)?;
    let tol = ctx.tol.unwrap_or(COMPARE_TOL);
    let (ode, err) = integrate_partial(&sim.ctx, &sim.state, sim.hamiltonian, sim.t_final, &sim.integrator);
    let (proj, distances) = projection_trajectory(&sim, &ode).map_err(runtime)?;
    let sup = distances.iter().copied().fold(0.0, f64::max);
    let pass = err.is_none() && sup <= tol;
    let stem = ctx.loaded.config.output_name();
    ctx.write_trajectory(&format!("{stem}-ode"), &ode, &CompareMeta { provenance: ctx.provenance(), method: "ode" })?;
    ctx.write_trajectory(&format!("{stem}-projection"), &proj, &CompareMeta { provenance: ctx.provenance(), method: "projection" })?;
    let report = CompareReport {
        provenance: ctx.provenance(),
        hamiltonian: sim.hamiltonian,
        t_final: Exact(sim.t_final),
        times: exact_vec(&ode.times),
        distances: exact_vec(&distances),
        sup_distance: Exact(sup),
        tolerance: Exact(tol),
        pass,
        failure: err.as_ref().map(|e| e.to_string()),
    };
    let path = ctx.write(&format!("{stem}-compare.json"), &to_json(&report).map_err(runtime)?)?;
    let text = format!(
        "projection vs ODE: sup distance {sup:.3e} over {} samples (tolerance {tol:.1e}) -> {}",
        ode.len(),
        path.display()
    );
    match err {
        Some(e) => Err(Failure::Runtime(format!("integration failed: {e}; partial comparison written to {}", path.display()))),
        None if pass => Ok(text),
        None => Err(Failure::Check(format!("{text}: FAIL"))),
    }
}
