//! Experiment configuration files (TOML).
//!
//! ```toml
//! seeds = 20              # a count (indices 0..20) or an explicit list
//! master_seed = 0
//!
//! [problem]
//! kind = "least_squares"  # or sparse_recovery, sparse_coding, libsvm,
//! generator = "A3"        #    separable_classification
//! m = 20
//! n = 200
//!
//! [[optimizer]]
//! kind = "prunadag"
//! variant = "V3"          # relevant = ceil(n/10), varsigma = 0.01 by default
//!
//! [[optimizer]]
//! kind = "frank_wolfe"
//! tau = 50
//! rate = "linear"         # or "rescaled" with beta = ...
//!
//! [stop]                  # grad_tol = 1e-9, max_iters = 10000 by default
//! [pruning]               # sigma = [...], delta = [...], delta_trace = 1e-3
//! [output]                # dir = "out", jobs = 0 (all cores)
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{FwConfig, FwRate};
use crate::driver::StopCriteria;
use crate::error::{Error, Result};
use crate::problems::{matrix_io, parse_libsvm, LsKind};
use crate::prunadag::{default_relevant, PrunAdagConfig, Variant};

const DEFAULT_VARSIGMA: f64 = 0.01;
const DEFAULT_SIGMAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn values(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(c) => (0..*c).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeastSquaresSpec {
    pub generator: String,
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseRecoverySpec {
    pub m: usize,
    pub n: usize,
    pub nonzeros: usize,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseCodingSpec {
    pub dictionary: PathBuf,
    pub data: PathBuf,
    /// Data columns to code; seed index `i` uses entry `i mod len`.
    /// Defaults to column `i mod ncols`.
    #[serde(default)]
    pub columns: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibsvmSpec {
    pub path: PathBuf,
    #[serde(default = "yes")]
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableSpec {
    pub features: usize,
    pub informative: usize,
    pub samples: usize,
    #[serde(default)]
    pub margin: f64,
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    LeastSquares(LeastSquaresSpec),
    SparseRecovery(SparseRecoverySpec),
    SparseCoding(SparseCodingSpec),
    Libsvm(LibsvmSpec),
    SeparableClassification(SeparableSpec),
}

impl ProblemSpec {
    pub fn is_classification(&self) -> bool {
        matches!(
            self,
            ProblemSpec::Libsvm(_) | ProblemSpec::SeparableClassification(_)
        )
    }

    /// Problem dimension; reads referenced files when necessary.
    pub fn dim(&self) -> Result<usize> {
        Ok(match self {
            ProblemSpec::LeastSquares(s) => s.n,
            ProblemSpec::SparseRecovery(s) => s.n,
            ProblemSpec::SparseCoding(s) => matrix_io::read_matrix(&s.dictionary)?.ncols(),
            ProblemSpec::Libsvm(s) => {
                let f = fs::File::open(&s.path)?;
                parse_libsvm(std::io::BufReader::new(f), &s.path.display().to_string())?.dim()
            }
            ProblemSpec::SeparableClassification(s) => s.features,
        })
    }

    fn validate(&self) -> Result<()> {
        let exists = |key: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::config(
                    key,
                    format!("file {} does not exist", p.display()),
                ))
            }
        };
        match self {
            ProblemSpec::LeastSquares(s) => {
                s.generator
                    .parse::<LsKind>()
                    .map_err(|e| Error::config("problem.generator", e.to_string()))?;
                if s.m == 0 || s.m >= s.n {
                    return Err(Error::config("problem.m", "need 0 < m < n"));
                }
            }
            ProblemSpec::SparseRecovery(s) => {
                if s.m == 0 || s.m >= s.n {
                    return Err(Error::config("problem.m", "need 0 < m < n"));
                }
                if s.nonzeros == 0 || s.nonzeros > s.n {
                    return Err(Error::config("problem.nonzeros", "need 1 <= nonzeros <= n"));
                }
                if !(s.noise >= 0.0) {
                    return Err(Error::config("problem.noise", "must be nonnegative"));
                }
            }
            ProblemSpec::SparseCoding(s) => {
                exists("problem.dictionary", &s.dictionary)?;
                exists("problem.data", &s.data)?;
            }
            ProblemSpec::Libsvm(s) => exists("problem.path", &s.path)?,
            ProblemSpec::SeparableClassification(s) => {
                if s.informative == 0 || s.informative > s.features {
                    return Err(Error::config(
                        "problem.informative",
                        "need 1 <= informative <= features",
                    ));
                }
                if s.samples < 2 {
                    return Err(Error::config("problem.samples", "need at least 2 samples"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrunAdagSpec {
    pub variant: String,
    pub relevant: Option<usize>,
    pub varsigma: Option<f64>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdagradSpec {
    pub varsigma: Option<f64>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrankWolfeSpec {
    pub tau: f64,
    /// `linear` or `rescaled`.
    #[serde(default = "linear")]
    pub rate: String,
    pub beta: Option<f64>,
    pub relevant: Option<usize>,
    pub label: Option<String>,
}

fn linear() -> String {
    "linear".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerSpec {
    #[serde(rename = "prunadag")]
    PrunAdag(PrunAdagSpec),
    Adagrad(AdagradSpec),
    FrankWolfe(FrankWolfeSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StopSpec {
    grad_tol: Option<f64>,
    max_iters: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PruningSpec {
    sigma: Option<Vec<f64>>,
    #[serde(default)]
    delta: Vec<f64>,
    delta_trace: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSpec {
    dir: Option<PathBuf>,
    jobs: Option<usize>,
    write_runs: Option<bool>,
    write_solutions: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seeds: Option<SeedSpec>,
    master_seed: Option<u64>,
    /// Nonzeros in the random starting point; defaults to `ceil(n/10)`.
    start_nonzeros: Option<usize>,
    /// Objective lower bound used by the complexity check.
    f_low: Option<f64>,
    problem: ProblemSpec,
    #[serde(default, rename = "optimizer")]
    optimizers: Vec<OptimizerSpec>,
    #[serde(default)]
    stop: StopSpec,
    #[serde(default)]
    pruning: PruningSpec,
    #[serde(default)]
    output: OutputSpec,
}

/// A fully resolved optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    #[serde(rename = "prunadag")]
    PrunAdag(PrunAdagConfig),
    Adagrad {
        varsigma: f64,
    },
    FrankWolfe(FwConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerEntry {
    pub label: String,
    pub kind: OptimizerKind,
}

impl OptimizerEntry {
    pub fn prunadag(cfg: PrunAdagConfig) -> Self {
        OptimizerEntry {
            label: format!("prunAdag-{}", cfg.variant),
            kind: OptimizerKind::PrunAdag(cfg),
        }
    }

    pub fn adagrad(varsigma: f64) -> Self {
        OptimizerEntry {
            label: "Adagrad".into(),
            kind: OptimizerKind::Adagrad { varsigma },
        }
    }

    pub fn frank_wolfe(cfg: FwConfig) -> Self {
        let label = match cfg.rate {
            FwRate::Linear => "FW1",
            FwRate::Rescaled { .. } => "FW2",
        };
        OptimizerEntry {
            label: label.into(),
            kind: OptimizerKind::FrankWolfe(cfg),
        }
    }

    /// `(T, varsigma)` when the complexity bound applies to this method.
    pub fn bound_parameters(&self, n: usize) -> Option<(usize, f64)> {
        match self.kind {
            OptimizerKind::PrunAdag(c) => Some((c.relevant, c.varsigma)),
            OptimizerKind::Adagrad { varsigma } => Some((n, varsigma)),
            OptimizerKind::FrankWolfe(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub dim: usize,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub start_nonzeros: usize,
    pub f_low: f64,
    pub optimizers: Vec<OptimizerEntry>,
    pub stop: StopCriteria,
    pub sigmas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub delta_trace: f64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub write_runs: bool,
    pub write_solutions: bool,
}

/// Reads, default-fills and validates a configuration file. Relative file
/// paths inside the problem section resolve against the config's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(base) = path.parent() {
        rebase_paths(&mut cfg.problem, base);
    }
    resolve(cfg)
}

/// Parses configuration text; relative paths are left as written.
pub fn load_config_str(text: &str) -> Result<ExperimentConfig> {
    resolve(parse_config(text)?)
}

fn parse_config(text: &str) -> Result<RawConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<root>", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        Error::config(
            if key == "." { "<root>".into() } else { key },
            e.into_inner().to_string(),
        )
    })
}

fn rebase_paths(problem: &mut ProblemSpec, base: &Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    match problem {
        ProblemSpec::SparseCoding(s) => {
            fix(&mut s.dictionary);
            fix(&mut s.data);
        }
        ProblemSpec::Libsvm(s) => fix(&mut s.path),
        _ => {}
    }
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    raw.problem.validate()?;
    let n = raw.problem.dim()?;
    if n < 2 {
        return Err(Error::config("problem", "dimension must be at least 2"));
    }

    let seeds = raw.seeds.unwrap_or(SeedSpec::Count(20)).values();
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
        return Err(Error::config("seeds", "seeds must be distinct"));
    }

    if raw.optimizers.is_empty() {
        return Err(Error::config("optimizer", "the optimizer list is empty"));
    }
    let optimizers = raw
        .optimizers
        .iter()
        .enumerate()
        .map(|(i, spec)| resolve_optimizer(spec, n, &format!("optimizer[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let mut labels = HashSet::new();
    for (i, o) in optimizers.iter().enumerate() {
        if !labels.insert(o.label.as_str()) {
            return Err(Error::config(
                format!("optimizer[{i}].label"),
                format!("duplicate optimizer label `{}`", o.label),
            ));
        }
    }

    let stop = StopCriteria {
        grad_tol: raw.stop.grad_tol.unwrap_or(1e-9),
        max_iters: raw.stop.max_iters.unwrap_or(10_000),
    };
    stop.validate()
        .map_err(|e| Error::config("stop", e.to_string()))?;

    let sigmas = raw.pruning.sigma.unwrap_or_else(|| DEFAULT_SIGMAS.to_vec());
    if let Some(s) = sigmas.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::config(
            "pruning.sigma",
            format!("{s} is outside [0, 1]"),
        ));
    }
    if let Some(d) = raw.pruning.delta.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::config("pruning.delta", format!("{d} is negative")));
    }
    let delta_trace = raw.pruning.delta_trace.unwrap_or(1e-3);
    if !(delta_trace >= 0.0) {
        return Err(Error::config("pruning.delta_trace", "must be nonnegative"));
    }

    let start_nonzeros = raw.start_nonzeros.unwrap_or_else(|| default_relevant(n));
    if start_nonzeros == 0 || start_nonzeros > n {
        return Err(Error::config("start_nonzeros", "must lie in [1, n]"));
    }

    Ok(ExperimentConfig {
        problem: raw.problem,
        dim: n,
        seeds,
        master_seed: raw.master_seed.unwrap_or(0),
        start_nonzeros,
        f_low: raw.f_low.unwrap_or(0.0),
        optimizers,
        stop,
        sigmas,
        deltas: raw.pruning.delta,
        delta_trace,
        out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        jobs: raw.output.jobs.unwrap_or(0),
        write_runs: raw.output.write_runs.unwrap_or(true),
        write_solutions: raw.output.write_solutions.unwrap_or(true),
    })
}

fn resolve_optimizer(spec: &OptimizerSpec, n: usize, key: &str) -> Result<OptimizerEntry> {
    let varsigma_ok = |v: f64| {
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(Error::config(
                format!("{key}.varsigma"),
                "must lie in (0, 1)",
            ))
        }
    };
    let relevant_ok = |t: Option<usize>| {
        let t = t.unwrap_or_else(|| default_relevant(n));
        if (1..=n).contains(&t) {
            Ok(t)
        } else {
            Err(Error::config(
                format!("{key}.relevant"),
                format!("must lie in [1, {n}]"),
            ))
        }
    };
    let mut entry = match spec {
        OptimizerSpec::PrunAdag(s) => {
            let variant: Variant = s
                .variant
                .parse()
                .map_err(|e: Error| Error::config(format!("{key}.variant"), e.to_string()))?;
            OptimizerEntry::prunadag(PrunAdagConfig {
                relevant: relevant_ok(s.relevant)?,
                varsigma: varsigma_ok(s.varsigma.unwrap_or(DEFAULT_VARSIGMA))?,
                variant,
            })
        }
        OptimizerSpec::Adagrad(s) => {
            OptimizerEntry::adagrad(varsigma_ok(s.varsigma.unwrap_or(DEFAULT_VARSIGMA))?)
        }
        OptimizerSpec::FrankWolfe(s) => {
            let rate = match s.rate.to_ascii_lowercase().as_str() {
                "linear" => {
                    if s.beta.is_some() {
                        return Err(Error::config(
                            format!("{key}.beta"),
                            "beta only applies to the rescaled rate",
                        ));
                    }
                    FwRate::Linear
                }
                "rescaled" => FwRate::Rescaled {
                    beta: s.beta.ok_or_else(|| {
                        Error::config(format!("{key}.beta"), "the rescaled rate needs beta")
                    })?,
                },
                other => {
                    return Err(Error::config(
                        format!("{key}.rate"),
                        format!("unknown rate `{other}`; use linear or rescaled"),
                    ))
                }
            };
            let cfg = FwConfig {
                relevant: relevant_ok(s.relevant)?,
                tau: s.tau,
                rate,
            };
            cfg.validate(n)
                .map_err(|e| Error::config(key, e.to_string()))?;
            OptimizerEntry::frank_wolfe(cfg)
        }
    };
    let label = match spec {
        OptimizerSpec::PrunAdag(s) => s.label.clone(),
        OptimizerSpec::Adagrad(s) => s.label.clone(),
        OptimizerSpec::FrankWolfe(s) => s.label.clone(),
    };
    if let Some(l) = label {
        if l.trim().is_empty() {
            return Err(Error::config(
                format!("{key}.label"),
                "label must not be empty",
            ));
        }
        entry.label = l;
    }
    Ok(entry)
}
