//! Run configuration: TOML sections `[chain]`, `[orbits.<site>]`,
//! `[hamiltonian]`, `[time]`, `[output]`, optional `[initial]` and `[verify]`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spincm_core::dynamics::{ChainKind, HamiltonianId, IntegratorConfig, RadialState, Scheme};
use spincm_core::orbits::{normalize_gauge, sample_constrained, sample_k_orbit, KOrbitPoint, RankOneOrbitPoint};
use spincm_core::sampling::{random_free_spins, random_p, random_q, SampleParams};
use spincm_core::verify::ChainSpec;
use spincm_core::{LieContext, OpenRadialState, PeriodicRadialState};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// A configuration problem, reported with the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub kind: ChainKind,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "n")]
    pub sites: usize,
}

/// One `[orbits.<key>]` table; `<key>` is a site number or `left`/`right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum OrbitEntry {
    #[serde(rename = "rank1")]
    RankOne {
        xi: f64,
        #[serde(default)]
        a: Option<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
    },
    #[serde(rename = "k-orbit")]
    KOrbit {
        #[serde(default)]
        spectrum: Option<Vec<f64>>,
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub site: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_degree() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Output spacing; every step is recorded when absent.
    #[serde(default)]
    pub sample: Option<f64>,
}

fn default_method() -> String {
    "dopri5".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    /// File stem for trajectory outputs.
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyChain {
    pub kind: ChainKind,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "n")]
    pub sites: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub chains: Option<Vec<VerifyChain>>,
}

/// The raw file contents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub chain: Option<ChainSection>,
    #[serde(default)]
    pub orbits: BTreeMap<String, OrbitEntry>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianSection>,
    #[serde(default)]
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
}

/// A config file together with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl LoadedConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end().to_string()))?;
        Ok(Self { config, hash: sha256_hex(text.as_bytes()) })
    }

    pub fn load(path: &Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|mut e| {
            e.message = format!("{}: {}", path.display(), e.message);
            e
        })
    }

    /// No file: empty configuration, hash of the empty text.
    pub fn empty() -> Self {
        Self { config: RunConfig::default(), hash: sha256_hex(b"") }
    }
}

/// Everything `simulate` and `compare` need, validated.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub ctx: LieContext,
    pub state: RadialState<f64>,
    pub hamiltonian: HamiltonianId,
    pub t_final: f64,
    pub integrator: IntegratorConfig,
}

fn finite_vec(key: &str, v: &[f64], len: usize) -> CResult<DVector<f64>> {
    if v.len() != len {
        return Err(ConfigError::new(key, format!("expected {len} entries, found {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::new(key, "entries must be finite"));
    }
    Ok(DVector::from_column_slice(v))
}

fn core_err(key: &str) -> impl Fn(spincm_core::Error) -> ConfigError + '_ {
    move |e| ConfigError::new(key, e.to_string())
}

impl RunConfig {
    pub fn chain(&self) -> CResult<&ChainSection> {
        let c = self.chain.as_ref().ok_or_else(|| ConfigError::new("chain", "missing [chain] section"))?;
        if c.dim < 2 {
            return Err(ConfigError::new("chain.N", format!("N must be at least 2, got {}", c.dim)));
        }
        if c.sites < 1 {
            return Err(ConfigError::new("chain.n", "n must be at least 1"));
        }
        Ok(c)
    }

    fn rank_one_sites(&self, chain: &ChainSection) -> CResult<Vec<(f64, Option<(DVector<f64>, DVector<f64>)>)>> {
        for key in self.orbits.keys() {
            let ok = match key.as_str() {
                "left" | "right" => chain.kind == ChainKind::Open,
                k => k.parse::<usize>().is_ok_and(|s| (1..=chain.sites).contains(&s)),
            };
            if !ok {
                return Err(ConfigError::new(format!("orbits.{key}"), format!("not a site of a {:?} chain with n = {}", chain.kind, chain.sites).to_lowercase()));
            }
        }
        (1..=chain.sites)
            .map(|k| {
                let key = format!("orbits.{k}");
                match self.orbits.get(&k.to_string()) {
                    None => Err(ConfigError::new(&key, "missing orbit specification")),
                    Some(OrbitEntry::KOrbit { .. }) => Err(ConfigError::new(&key, "chain sites carry rank-one orbits (kind = \"rank1\")")),
                    Some(OrbitEntry::RankOne { xi, a, b }) => {
                        if *xi == 0.0 || !xi.is_finite() {
                            return Err(ConfigError::new(format!("{key}.xi"), "xi must be finite and nonzero"));
                        }
                        let ab = match (a, b) {
                            (None, None) => None,
                            (Some(a), Some(b)) => {
                                Some((finite_vec(&format!("{key}.a"), a, chain.dim)?, finite_vec(&format!("{key}.b"), b, chain.dim)?))
                            }
                            _ => return Err(ConfigError::new(&key, "give both a and b, or neither")),
                        };
                        Ok((*xi, ab))
                    }
                }
            })
            .collect()
    }

    fn boundary(&self, side: &str, n: usize, rng: &mut ChaCha8Rng) -> CResult<KOrbitPoint<f64>> {
        let key = format!("orbits.{side}");
        match self.orbits.get(side) {
            None => Ok(KOrbitPoint::zero(n)),
            Some(OrbitEntry::RankOne { .. }) => Err(ConfigError::new(&key, "boundaries carry so(N) orbits (kind = \"k-orbit\")")),
            Some(OrbitEntry::KOrbit { spectrum, matrix }) => match (spectrum, matrix) {
                (_, Some(rows)) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(ConfigError::new(format!("{key}.matrix"), format!("expected a {n}x{n} matrix")));
                    }
                    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                    let pt = KOrbitPoint::from_matrix(m).map_err(core_err(&format!("{key}.matrix")))?;
                    if let Some(s) = spectrum {
                        let mut want = s.clone();
                        want.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
                        let close = want.len() == pt.spectrum.len()
                            && want.iter().zip(&pt.spectrum).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
                        if !close {
                            return Err(ConfigError::new(&key, format!("matrix has spectrum {:?}, not {want:?}", pt.spectrum)));
                        }
                    }
                    Ok(pt)
                }
                (Some(s), None) => sample_k_orbit(n, s, rng).map_err(core_err(&format!("{key}.spectrum"))),
                (None, None) => Err(ConfigError::new(&key, "give a spectrum or a matrix")),
            },
        }
    }

    fn p_q(&self, n: usize, rng: &mut ChaCha8Rng) -> CResult<(DVector<f64>, DVector<f64>)> {
        let params = SampleParams::default();
        let init = self.initial.clone().unwrap_or(InitialSection { p: None, q: None });
        let q = match &init.q {
            Some(v) => finite_vec("initial.q", v, n)?,
            None => random_q(n, params.gap, rng),
        };
        let p = match &init.p {
            Some(v) => finite_vec("initial.p", v, n)?,
            None => random_p(n, params.p_sigma, rng),
        };
        Ok((p, q))
    }

    /// The initial radial state: explicit data where given, seeded samples elsewhere.
    pub fn initial_state(&self, ctx: &LieContext, seed: u64) -> CResult<RadialState<f64>> {
        let chain = self.chain()?;
        let n = chain.dim;
        let sites = self.rank_one_sites(chain)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xis: Vec<f64> = sites.iter().map(|(xi, _)| *xi).collect();
        let explicit = sites.iter().filter(|(_, ab)| ab.is_some()).count();
        let checked = |k: usize, xi: f64, a: &DVector<f64>, b: &DVector<f64>| {
            RankOneOrbitPoint::new(xi, a.clone(), b.clone())
                .and_then(|p| normalize_gauge(&p))
                .map_err(core_err(&format!("orbits.{k}")))
        };
        match chain.kind {
            ChainKind::Periodic => {
                let spins = if explicit == 0 {
                    sample_constrained(n, &xis, &mut rng).map_err(core_err("orbits"))?
                } else if explicit == sites.len() {
                    sites
                        .iter()
                        .enumerate()
                        .map(|(i, (xi, ab))| {
                            let (a, b) = ab.as_ref().expect("all explicit");
                            checked(i + 1, *xi, a, b)
                        })
                        .collect::<CResult<_>>()?
                } else {
                    return Err(ConfigError::new("orbits", "periodic spins are coupled by the moment constraint: give a and b at every site or at none"));
                };
                let (p, q) = self.p_q(n, &mut rng)?;
                PeriodicRadialState::new(ctx, spins, p, q).map(RadialState::Periodic).map_err(core_err("initial"))
            }
            ChainKind::Open => {
                let mut spins = Vec::with_capacity(sites.len());
                for (i, (xi, ab)) in sites.iter().enumerate() {
                    spins.push(match ab {
                        Some((a, b)) => checked(i + 1, *xi, a, b)?,
                        None => random_free_spins(n, &[*xi], &mut rng).map_err(core_err(&format!("orbits.{}", i + 1)))?.remove(0),
                    });
                }
                let mu_left = self.boundary("left", n, &mut rng)?;
                let mu_right = self.boundary("right", n, &mut rng)?;
                let (p, q) = self.p_q(n, &mut rng)?;
                OpenRadialState::new(ctx, mu_left, spins, mu_right, p, q).map(RadialState::Open).map_err(core_err("initial"))
            }
        }
    }

    pub fn hamiltonian(&self, chain: &ChainSection) -> CResult<HamiltonianId> {
        let h = match &self.hamiltonian {
            Some(h) => HamiltonianId { site: h.site, degree: h.degree },
            None => HamiltonianId { site: chain.sites, degree: 2 },
        };
        let sites = match chain.kind {
            ChainKind::Periodic => 1..=chain.sites,
            ChainKind::Open => 0..=chain.sites,
        };
        if !sites.contains(&h.site) {
            return Err(ConfigError::new("hamiltonian.site", format!("site {} outside {sites:?}", h.site)));
        }
        if !(2..=chain.dim).contains(&h.degree) {
            return Err(ConfigError::new("hamiltonian.degree", format!("degree {} outside 2..={}", h.degree, chain.dim)));
        }
        Ok(h)
    }

    pub fn integrator(&self) -> CResult<(f64, IntegratorConfig)> {
        let t = self.time.as_ref().ok_or_else(|| ConfigError::new("time", "missing [time] section"))?;
        if !(t.t_final >= 0.0 && t.t_final.is_finite()) {
            return Err(ConfigError::new("time.T", "T must be finite and non-negative"));
        }
        let scheme: Scheme = t.method.parse().map_err(core_err("time.method"))?;
        let mut cfg = IntegratorConfig { scheme, sample_interval: t.sample, ..Default::default() };
        if scheme == Scheme::DormandPrince {
            cfg.step = 1e-2;
            cfg.tol = 1e-12;
        }
        if let Some(s) = t.step {
            cfg.step = s;
        }
        if let Some(tol) = t.tol {
            cfg.tol = tol;
        }
        cfg.validate().map_err(|e| {
            let key = match &e {
                spincm_core::Error::InvalidArgument(m) if m.starts_with("step") => "time.step",
                spincm_core::Error::InvalidArgument(m) if m.starts_with("tol") => "time.tol",
                spincm_core::Error::InvalidArgument(m) if m.starts_with("sample") => "time.sample",
                _ => "time",
            };
            ConfigError::new(key, e.to_string())
        })?;
        Ok((t.t_final, cfg))
    }

    /// Validate every section needed for a trajectory run and build the start state.
    pub fn simulation(&self, seed: u64) -> CResult<Simulation> {
        let chain = self.chain()?;
        let ctx = LieContext::new(chain.dim).map_err(core_err("chain.N"))?;
        let hamiltonian = self.hamiltonian(chain)?;
        let (t_final, integrator) = self.integrator()?;
        let state = self.initial_state(&ctx, seed)?;
        Ok(Simulation { ctx, state, hamiltonian, t_final, integrator })
    }

    pub fn format(&self) -> Option<Format> {
        self.output.as_ref().and_then(|o| o.format)
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.output.as_ref().and_then(|o| o.dir.clone())
    }

    pub fn output_name(&self) -> String {
        self.output.as_ref().and_then(|o| o.name.clone()).unwrap_or_else(|| "trajectory".into())
    }

    pub fn verify_chains(&self) -> CResult<Option<Vec<ChainSpec>>> {
        let Some(list) = self.verify.as_ref().and_then(|v| v.chains.as_ref()) else {
            return Ok(None);
        };
        list.iter()
            .enumerate()
            .map(|(i, c)| {
                let spec = ChainSpec::new(c.kind, c.dim, c.sites);
                spec.validate().map_err(core_err(&format!("verify.chains[{i}]")))?;
                Ok(spec)
            })
            .collect::<CResult<Vec<_>>>()
            .map(Some)
    }
}
