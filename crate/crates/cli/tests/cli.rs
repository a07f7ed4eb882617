use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn spincm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spincm")).args(args).output().expect("spawn spincm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const PERIODIC: &str = r#"
seed = 3
[chain]
kind = "periodic"
N = 2
n = 1
[orbits.1]
kind = "rank1"
xi = 1.0
[hamiltonian]
site = 1
degree = 2
[time]
T = 1.0
sample = 0.1
[output]
name = "run"
"#;

const OPEN: &str = r#"
seed = 5
[chain]
kind = "open"
N = 2
n = 1
[orbits.1]
kind = "rank1"
xi = 0.7
[orbits.left]
kind = "k-orbit"
spectrum = [0.5]
[orbits.right]
kind = "k-orbit"
spectrum = [0.9]
[hamiltonian]
site = 0
degree = 2
[time]
T = 1.0
sample = 0.1
[output]
name = "run"
"#;

const FREE: &str = r#"
[chain]
kind = "open"
N = 3
n = 1
[orbits.1]
kind = "rank1"
xi = 1.5
a = [1.0, 0.0, 0.0]
b = [1.5, 0.0, 0.0]
[initial]
q = [1.0, 0.0, -1.0]
p = [0.4, -0.1, -0.3]
[hamiltonian]
site = 1
[time]
T = 2.0
method = "rk4"
step = 1e-3
sample = 0.1
"#;

fn str_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_monotone_trajectory_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", PERIODIC);
    let o = spincm(&["simulate", "--config", str_arg(&cfg), "--out", str_arg(dir.path()), "--format", "both"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("run.json"));
    let times: Vec<f64> = j["times"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert_eq!(times.len(), 11);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(j["meta"]["seed"], 3);
    assert_eq!(j["meta"]["config_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,p1,p2,q1,q2,a1_1,a1_2,b1_1,b1_2");
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "o.toml", OPEN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = spincm(&["simulate", "--config", str_arg(&cfg), "--out", str_arg(out), "--format", "both"]);
        assert_eq!(code(&o), 0);
        let o = spincm(&["verify", "psi", "--trials", "5", "--seed", "9", "--out", str_arg(out)]);
        assert_eq!(code(&o), 0);
    }
    for f in ["run.json", "run.csv", "report-psi.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    assert_eq!(code(&spincm(&["simulate", "--config", str_arg(&cfg), "--out", str_arg(&c), "--seed", "6"])), 0);
    assert_ne!(fs::read(a.join("run.json")).unwrap(), fs::read(c.join("run.json")).unwrap());
}

#[test]
fn free_flight_assertion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.toml", FREE);
    let o = spincm(&["simulate", "--config", str_arg(&cfg), "--out", str_arg(dir.path()), "--assert-free-flight"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let j = read_json(&dir.path().join("trajectory.json"));
    assert!(j["meta"]["free_flight_residual"].as_f64().unwrap() < 1e-9);
    let o = spincm(&["simulate", "--config", str_arg(&cfg), "--out", str_arg(dir.path()), "--assert-free-flight", "--tol", "0"]);
    let j = read_json(&dir.path().join("trajectory.json"));
    let r = j["meta"]["free_flight_residual"].as_f64().unwrap();
    assert_eq!(code(&o), if r > 0.0 { 1 } else { 0 });

    let interacting = write_config(dir.path(), "p.toml", PERIODIC);
    let o = spincm(&["simulate", "--config", str_arg(&interacting), "--out", str_arg(dir.path()), "--assert-free-flight"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn compare_agrees_for_both_chains() {
    for (name, text) in [("periodic", PERIODIC), ("open", OPEN)] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "c.toml", text);
        let o = spincm(&["compare", "--config", str_arg(&cfg), "--out", str_arg(dir.path())]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
        let r = read_json(&dir.path().join("run-compare.json"));
        assert!(r["sup_distance"].as_f64().unwrap() < 1e-6, "{name}");
        assert_eq!(r["pass"], true);
        assert!(dir.path().join("run-ode.json").exists());
        assert!(dir.path().join("run-projection.json").exists());
    }
}

#[test]
fn compare_at_time_zero_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &OPEN.replace("T = 1.0", "T = 0.0"));
    let o = spincm(&["compare", "--config", str_arg(&cfg), "--out", str_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("run-compare.json"));
    let d: Vec<f64> = r["distances"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(!d.is_empty());
    assert!(d.iter().all(|x| *x < 1e-12), "{d:?}");
}

#[test]
fn verify_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = str_arg(dir.path());
    let o = spincm(&["verify", "dk", "--trials", "5", "--out", out]);
    assert_eq!(code(&o), 0);
    let r = read_json(&dir.path().join("report-dk.json"));
    assert_eq!(r["pass"], true);
    assert!(r["per_case"].as_array().unwrap().len() > 1);
    assert_eq!(r["config_hash"], "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    let o = spincm(&["verify", "dk", "--trials", "5", "--tol", "0", "--out", out]);
    assert_eq!(code(&o), 1);
    let r = read_json(&dir.path().join("report-dk.json"));
    assert_eq!(r["pass"], false);
    assert!(r["max_residual"].as_f64().unwrap() > 0.0);

    assert_eq!(code(&spincm(&["verify", "nonsense", "--out", out])), 2);
    assert_eq!(code(&spincm(&["verify", "dk", "--trials", "0", "--out", out])), 2);
    assert_eq!(code(&spincm(&["verify", "dk", "--tol", "-1", "--out", out])), 2);
}

#[test]
fn verify_reads_chains_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        "seed = 4\n[verify]\ntrials = 3\n[[verify.chains]]\nkind = \"periodic\"\nN = 3\nn = 2\n",
    );
    let o = spincm(&["verify", "liouville", "--config", str_arg(&cfg), "--out", str_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("report-liouville.json"));
    assert_eq!(r["seed"], 4);
    assert_eq!(r["trials"], 3);
    assert!(r["per_case"].as_array().unwrap().iter().all(|c| c["label"].as_str().unwrap().contains("periodic N=3 n=2")));
}

#[test]
fn config_errors_name_the_key_and_write_nothing() {
    let cases = [
        (PERIODIC.replace("N = 2", "N = 1"), "chain.N"),
        (PERIODIC.replace("xi = 1.0", "xi = 0.0"), "orbits.1"),
        (PERIODIC.replace("T = 1.0", "T = -1.0"), "time.T"),
        (PERIODIC.replace("degree = 2", "degree = 7"), "hamiltonian.degree"),
        (PERIODIC.replace("site = 1", "site = 4"), "hamiltonian.site"),
        (PERIODIC.replace("[output]", "[output]\ncolour = 1"), "colour"),
        (PERIODIC.replace("[orbits.1]\nkind = \"rank1\"\nxi = 1.0\n", ""), "orbits"),
    ];
    for (text, key) in cases {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "bad.toml", &text);
        let out = dir.path().join("out");
        let o = spincm(&["simulate", "--config", str_arg(&cfg), "--out", str_arg(&out)]);
        assert_eq!(code(&o), 2, "{key}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "{key}: {err}");
        assert!(!out.exists(), "{key}: output written");
    }
}

#[test]
fn usage_errors() {
    assert_eq!(code(&spincm(&["simulate"])), 2);
    assert_eq!(code(&spincm(&["frobnicate"])), 2);
    assert_eq!(code(&spincm(&["simulate", "--config", "/nonexistent/x.toml"])), 2);
    assert_eq!(code(&spincm(&["verify", "dk", "--format", "xml"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_spincm"))
        .args(["verify", "psi", "--trials", "1", "--out", "/tmp"])
        .env("SPINCM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = Command::new(env!("CARGO_BIN_EXE_spincm"))
            .args(["verify", "commute", "--trials", "4", "--out", str_arg(&out)])
            .env("SPINCM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        bytes.push(fs::read(out.join("report-commute.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}
