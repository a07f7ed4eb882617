//! Acceptance criteria, one line per criterion. Exits nonzero if any fails.

use spincm_core::dynamics::ChainKind;
use spincm_core::verify::{run_suite, CaseResult, ChainSpec, Report, Suite, SuiteOptions};
use std::fs;
use std::io::Write;
use std::process::{Command, ExitCode};

const SEED: u64 = 20;

const KZB_TOL: f64 = 1e-10;
const R_THETA_TOL: f64 = 1e-12;
const COMMUTE_TOL: f64 = 1e-7;
const EXACT_FLOW_TOL: f64 = 1e-8;
const ODE_FLOW_TOL: f64 = 1e-6;
const PROJECTION_TOL: f64 = 1e-6;
const ANGLE_TOL: f64 = 1e-9;
const CASIMIR_TOL: f64 = 1e-12;
const LOCAL_SPIN_TOL: f64 = 1e-12;
const PSI_EQUIVARIANCE_TOL: f64 = 1e-12;
const PSI_LEAF_TOL: f64 = 1e-10;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn error(e: impl std::fmt::Display) -> Self {
        Self { pass: false, detail: format!("error: {e}") }
    }
}

/// A case family of a report, checked against a pinned bound.
struct Check<'a> {
    label: &'a str,
    tol: f64,
    exact: bool,
    min_samples: usize,
}

impl<'a> Check<'a> {
    fn below(label: &'a str, tol: f64, min_samples: usize) -> Self {
        Self { label, tol, exact: false, min_samples }
    }

    fn zero(label: &'a str, min_samples: usize) -> Self {
        Self { label, tol: 0.0, exact: true, min_samples }
    }
}

fn case_label(c: &CaseResult) -> &str {
    // Labels read "<kind> N=<N> n=<n> <what>".
    c.label.splitn(4, ' ').nth(3).unwrap_or(&c.label)
}

fn judge(report: &Report, checks: &[Check]) -> Outcome {
    let mut pass = report.pass;
    let mut parts = Vec::new();
    for ch in checks {
        let cases: Vec<&CaseResult> = report.per_case.iter().filter(|c| case_label(c) == ch.label).collect();
        let samples: usize = cases.iter().map(|c| c.samples).sum();
        let worst = cases.iter().map(|c| c.residual).fold(0.0, f64::max);
        let ok = !cases.is_empty()
            && samples >= ch.min_samples
            && cases.iter().all(|c| if ch.exact { c.residual == 0.0 } else { c.residual < ch.tol });
        pass &= ok;
        let bound = if ch.exact { "== 0".to_string() } else { format!("< {:.0e}", ch.tol) };
        parts.push(format!("{} {worst:.2e} {bound} ({samples} samples)", ch.label));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn suite(s: Suite, trials: usize, chains: Vec<ChainSpec>) -> Result<Report, spincm_core::Error> {
    run_suite(s, &SuiteOptions { seed: SEED, trials: Some(trials), chains: Some(chains), ..Default::default() })
}

fn shapes(kind: ChainKind, dims: &[usize], sites: &[usize]) -> Vec<ChainSpec> {
    dims.iter().flat_map(|&n| sites.iter().map(move |&s| ChainSpec::new(kind, n, s))).collect()
}

fn kzb() -> Outcome {
    match suite(Suite::Dk, 1000, shapes(ChainKind::Periodic, &[2, 3, 4, 5], &[2, 3, 4])) {
        Ok(r) => judge(&r, &[Check::below("D_k vs H2 difference", KZB_TOL, 12 * 1000)]),
        Err(e) => Outcome::error(e),
    }
}

fn bkzb() -> Outcome {
    match suite(Suite::Dk, 1000, shapes(ChainKind::Open, &[2, 3, 4, 5], &[1, 2, 3, 4])) {
        Ok(r) => judge(
            &r,
            &[Check::below("D_k vs H2 difference", KZB_TOL, 16 * 1000), Check::below("r-theta symmetry", R_THETA_TOL, 1000)],
        ),
        Err(e) => Outcome::error(e),
    }
}

fn commute() -> Outcome {
    let mut chains = shapes(ChainKind::Periodic, &[2, 3], &[2]);
    chains.push(ChainSpec::periodic(4, 3));
    chains.extend([ChainSpec::open(2, 1), ChainSpec::open(3, 2), ChainSpec::open(4, 2)]);
    match suite(Suite::Commute, 200, chains) {
        Ok(r) => judge(&r, &[Check::below("max |{H_a, H_b}|", COMMUTE_TOL, 6 * 200)]),
        Err(e) => Outcome::error(e),
    }
}

fn conservation() -> Outcome {
    let chains = vec![ChainSpec::periodic(2, 2), ChainSpec::periodic(3, 2), ChainSpec::open(2, 1), ChainSpec::open(3, 2)];
    match suite(Suite::Conserve, 20, chains) {
        Ok(r) => judge(
            &r,
            &[
                Check::below("trace words under exact flows", EXACT_FLOW_TOL, 4 * 20),
                Check::below("trace words along integrated H2 flow, T=10", ODE_FLOW_TOL, 4),
            ],
        ),
        Err(e) => Outcome::error(e),
    }
}

fn projection() -> Outcome {
    let mut chains = shapes(ChainKind::Periodic, &[2, 3], &[1, 2]);
    chains.extend(shapes(ChainKind::Open, &[2, 3], &[1, 2]));
    match suite(Suite::Projection, 10, chains) {
        Ok(r) => judge(&r, &[Check::below("sup radial distance, projection vs ODE, T=1", PROJECTION_TOL, 8 * 10)]),
        Err(e) => Outcome::error(e),
    }
}

fn angles() -> Outcome {
    let chains = vec![ChainSpec::periodic(2, 2), ChainSpec::periodic(3, 2), ChainSpec::open(2, 1), ChainSpec::open(3, 2)];
    match suite(Suite::Angles, 20, chains) {
        Ok(r) => judge(
            &r,
            &[
                Check::below("log|f| linearity", ANGLE_TOL, 4 * 20),
                Check::below("log|f| linearity, site 0 (symmetric x_0)", ANGLE_TOL, 2 * 20),
                Check::zero("M-invariance", 2 * 20),
            ],
        ),
        Err(e) => Outcome::error(e),
    }
}

fn rank_one() -> Outcome {
    let chains = vec![ChainSpec::periodic(2, 1), ChainSpec::periodic(2, 2), ChainSpec::periodic(3, 2), ChainSpec::periodic(4, 3)];
    match suite(Suite::Liouville, 20, chains) {
        Ok(r) => judge(
            &r,
            &[
                Check::below("rank-one orbit Casimir", CASIMIR_TOL, 4 * 20),
                Check::below("local-spin identity", LOCAL_SPIN_TOL, 4 * 20),
                Check::zero("Liouville rank", 4 * 20),
            ],
        ),
        Err(e) => Outcome::error(e),
    }
}

fn dimensions() -> Outcome {
    let chains = shapes(ChainKind::Periodic, &[2, 3, 4], &[2]);
    match suite(Suite::Dims, 20, chains) {
        Ok(r) => judge(
            &r,
            &[Check::zero("dim S", 3 * 20), Check::zero("dim B", 3 * 20), Check::zero("dim S = dim P + dim B", 3 * 20)],
        ),
        Err(e) => Outcome::error(e),
    }
}

fn psi() -> Outcome {
    let chains = shapes(ChainKind::Periodic, &[2, 3, 4], &[2]);
    match suite(Suite::Psi, 100, chains) {
        Ok(r) => judge(
            &r,
            &[Check::below("psi equivariance", PSI_EQUIVARIANCE_TOL, 100), Check::below("psi leaf swap spectra", PSI_LEAF_TOL, 100)],
        ),
        Err(e) => Outcome::error(e),
    }
}

const DETERMINISM_CONFIG: &str = r#"
seed = 11
[chain]
kind = "open"
N = 3
n = 2
[orbits.1]
kind = "rank1"
xi = 0.9
[orbits.2]
kind = "rank1"
xi = -1.4
[orbits.left]
kind = "k-orbit"
spectrum = [0.7]
[orbits.right]
kind = "k-orbit"
spectrum = [1.2]
[hamiltonian]
site = 1
degree = 3
[time]
T = 1.0
sample = 0.05
[output]
format = "both"
name = "det"
"#;

fn determinism() -> Outcome {
    let run = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = dir.path().join("det.toml");
        fs::write(&cfg, DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
        let bin = env!("CARGO_BIN_EXE_spincm");
        let out = dir.path().to_str().unwrap().to_string();
        let cfg = cfg.to_str().unwrap().to_string();
        for args in [
            vec!["simulate", "--config", &cfg, "--out", &out],
            vec!["verify", "projection", "--trials", "2", "--seed", "11", "--out", &out],
        ] {
            let o = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{args:?} exited with {}", o.status));
            }
        }
        ["det.json", "det.csv", "report-projection.json"]
            .iter()
            .map(|f| fs::read(dir.path().join(f)).map(|b| (f.to_string(), b)).map_err(|e| e.to_string()))
            .collect()
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
            let bytes: usize = a.iter().map(|(_, v)| v.len()).sum();
            Outcome {
                pass: differing.is_empty(),
                detail: if differing.is_empty() {
                    format!("{} files, {bytes} bytes identical across two runs", a.len())
                } else {
                    format!("differing: {}", differing.join(", "))
                },
            }
        }
        (Err(e), _) | (_, Err(e)) => Outcome::error(e),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("KZB identity, periodic chain", kzb),
        ("bKZB identity, open chain", bkzb),
        ("Poisson commutativity", commute),
        ("superintegrable conservation", conservation),
        ("projection method vs ODE", projection),
        ("angle variables evolve linearly", angles),
        ("rank-one example", rank_one),
        ("dimension bookkeeping", dimensions),
        ("psi equivariance and leaf swap", psi),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        let _ = writeln!(out, "[{}] criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        let _ = out.flush();
    }
    let _ = writeln!(out, "acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
