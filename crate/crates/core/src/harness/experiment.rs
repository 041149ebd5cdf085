//! Multi-seed execution of a configured experiment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OptimizerEntry, OptimizerKind, ProblemSpec};
use crate::baselines::{Adagrad, FrankWolfe};
use crate::driver::{run, Optimizer, RunOptions};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::problems::logistic::prepare;
use crate::problems::rng::{derive_seed, SeededRng};
use crate::problems::{
    classify_accuracy, gen_least_squares, gen_separable_classification, gen_sparse_recovery,
    load_libsvm, matrix_io, Dataset, LogisticProblem, LsKind, SparseCodingProblem,
};
use crate::prunadag::{PrunAdag, PrunAdagConfig, Variant};
use crate::pruning::{prune_report, PruneRow, PruneTarget};
use crate::record::RunRecord;
use crate::theory::TraceSetup;

const PROBLEM_STREAM: u64 = 0x5052_4f42;
const START_STREAM: u64 = 0x5853_5452;

/// One problem instance, shared read-only by every optimizer for a seed.
pub struct Instance {
    pub problem: Box<dyn Problem>,
    /// Held-out samples for classification problems.
    pub test: Option<Dataset>,
}

/// Builds the instance for seed value `seed` (the `index`-th seed).
pub fn build_instance(
    spec: &ProblemSpec,
    master_seed: u64,
    seed: u64,
    index: usize,
) -> Result<Instance> {
    let pseed = derive_seed(&[master_seed, PROBLEM_STREAM, seed]);
    Ok(match spec {
        ProblemSpec::LeastSquares(s) => {
            let kind: LsKind = s.generator.parse()?;
            Instance {
                problem: Box::new(gen_least_squares(kind, s.m, s.n, pseed)?),
                test: None,
            }
        }
        ProblemSpec::SparseRecovery(s) => Instance {
            problem: Box::new(gen_sparse_recovery(s.m, s.n, s.nonzeros, s.noise, pseed)?),
            test: None,
        },
        ProblemSpec::SparseCoding(s) => {
            let dict = matrix_io::read_matrix(&s.dictionary)?;
            let data = matrix_io::read_matrix(&s.data)?;
            if data.ncols() == 0 {
                return Err(Error::config("problem.data", "data matrix has no columns"));
            }
            let col = if s.columns.is_empty() {
                index % data.ncols()
            } else {
                s.columns[index % s.columns.len()]
            };
            Instance {
                problem: Box::new(SparseCodingProblem::from_column(dict, &data, col)?),
                test: None,
            }
        }
        ProblemSpec::Libsvm(s) => {
            let (train, test) = load_libsvm(&s.path, s.normalize, Some(pseed))?;
            Instance {
                problem: Box::new(LogisticProblem::new(train)?),
                test: Some(test),
            }
        }
        ProblemSpec::SeparableClassification(s) => {
            let (data, _) = gen_separable_classification(
                s.features,
                s.informative,
                s.samples,
                s.margin,
                pseed,
            )?;
            let (train, test) = prepare(&data, s.normalize, Some(pseed));
            Instance {
                problem: Box::new(LogisticProblem::new(train)?),
                test: Some(test),
            }
        }
    })
}

/// A unit-norm random point whose nonzeros sit at the first `nonzeros`
/// positions of a seeded shuffle of `0..n`.
pub fn starting_point(n: usize, nonzeros: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    let perm = rng.permutation(n);
    let mut x = vec![0.0; n];
    loop {
        for &i in &perm[..nonzeros.min(n)] {
            x[i] = rng.normal();
        }
        let nrm = crate::vector::norm(&x);
        if nrm > 0.0 && x.iter().filter(|v| **v != 0.0).count() == nonzeros.min(n) {
            for v in &mut x {
                *v /= nrm;
            }
            return x;
        }
    }
}

pub fn start_seed(master_seed: u64, seed: u64) -> u64 {
    derive_seed(&[master_seed, START_STREAM, seed])
}

/// `mix(master, optimizer index, seed index)`; see [`derive_seed`].
pub fn run_seed(master_seed: u64, optimizer: usize, seed_index: usize) -> u64 {
    derive_seed(&[master_seed, optimizer as u64, seed_index as u64])
}

pub fn make_optimizer(kind: &OptimizerKind, x0: Vec<f64>) -> Result<Box<dyn Optimizer + Send>> {
    Ok(match *kind {
        OptimizerKind::PrunAdag(cfg) => Box::new(PrunAdag::new(x0, cfg)?),
        OptimizerKind::Adagrad { varsigma } => Box::new(Adagrad::new(x0, varsigma)?),
        OptimizerKind::FrankWolfe(cfg) => Box::new(FrankWolfe::new(x0, cfg)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneEntry {
    #[serde(flatten)]
    pub row: PruneRow,
    pub accuracy: Option<f64>,
}

/// Everything produced by one (optimizer, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub optimizer: String,
    pub optimizer_index: usize,
    pub kind: OptimizerKind,
    pub seed: u64,
    pub seed_index: usize,
    pub run_seed: u64,
    /// Constants for the complexity check, when it applies.
    pub bound_setup: Option<TraceSetup>,
    pub lipschitz: Option<f64>,
    pub record: RunRecord,
    /// Divergence reason; such runs are excluded from means.
    pub diverged: Option<String>,
    /// Test accuracy of the unpruned solution (classification only).
    pub accuracy: Option<f64>,
    pub prune: Vec<PruneEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Ordered by optimizer, then seed.
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn runs_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.runs.iter().filter(move |r| r.optimizer == label)
    }
}

fn targets(cfg: &ExperimentConfig) -> Vec<PruneTarget> {
    cfg.sigmas
        .iter()
        .map(|&s| PruneTarget::Sparsity(s))
        .chain(cfg.deltas.iter().map(|&d| PruneTarget::Threshold(d)))
        .collect()
}

fn run_one(
    cfg: &ExperimentConfig,
    entry: &OptimizerEntry,
    opt_index: usize,
    seed_index: usize,
    instance: &Instance,
) -> Result<RunResult> {
    let seed = cfg.seeds[seed_index];
    let n = instance.problem.dim();
    let x0 = starting_point(n, cfg.start_nonzeros, start_seed(cfg.master_seed, seed));
    let mut opt = make_optimizer(&entry.kind, x0)?;
    let opts = RunOptions {
        record_objective: true,
        delta_trace: cfg.delta_trace,
    };
    let lipschitz = instance.problem.lipschitz();
    let bound_setup = match (entry.bound_parameters(n), lipschitz) {
        (Some((relevant, varsigma)), Some(l)) => Some(TraceSetup {
            n,
            relevant,
            varsigma,
            lipschitz: l,
            f_low: cfg.f_low,
        }),
        _ => None,
    };
    let mut result = RunResult {
        optimizer: entry.label.clone(),
        optimizer_index: opt_index,
        kind: entry.kind.clone(),
        seed,
        seed_index,
        run_seed: run_seed(cfg.master_seed, opt_index, seed_index),
        bound_setup,
        lipschitz,
        record: RunRecord::default(),
        diverged: None,
        accuracy: None,
        prune: vec![],
    };
    match run(opt.as_mut(), &instance.problem, cfg.stop, &opts) {
        Ok(rec) => result.record = rec,
        Err(Error::Diverged {
            iteration,
            reason,
            partial,
        }) => {
            log::warn!(
                "{} seed {seed}: diverged at iteration {iteration}: {reason}",
                entry.label
            );
            result.record = partial.map(|p| *p).unwrap_or_default();
            result.diverged = Some(format!("iteration {iteration}: {reason}"));
            return Ok(result);
        }
        Err(e) => return Err(e),
    }

    let x = &result.record.final_x;
    let report = prune_report(x, &targets(cfg), &instance.problem)?;
    if let Some(test) = &instance.test {
        result.accuracy = Some(classify_accuracy(x, test)?);
    }
    result.prune = report
        .rows
        .into_iter()
        .map(|row| {
            let accuracy = match &instance.test {
                Some(test) => Some(classify_accuracy(&row.target.apply(x)?, test)?),
                None => None,
            };
            Ok(PruneEntry { row, accuracy })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(result)
}

/// Runs every (optimizer, seed) pair on a pool of `cfg.jobs` workers.
/// Results come back in (optimizer, seed) order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::config("output.jobs", e.to_string()))?;
    pool.install(|| {
        let instances = cfg
            .seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| build_instance(&cfg.problem, cfg.master_seed, s, i))
            .collect::<Result<Vec<_>>>()?;
        let jobs: Vec<(usize, usize)> = (0..cfg.optimizers.len())
            .flat_map(|o| (0..cfg.seeds.len()).map(move |s| (o, s)))
            .collect();
        let runs = jobs
            .par_iter()
            .map(|&(o, s)| run_one(cfg, &cfg.optimizers[o], o, s, &instances[s]))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentResult {
            config: cfg.clone(),
            runs,
        })
    })
}

/// Appends whichever of prunAdag V1-V4 are missing, then the
/// relevant-only ablation. `T` and `varsigma` are taken from the first
/// configured prunAdag entry, or the defaults.
pub fn with_relevant_only(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut out = cfg.clone();
    let template = cfg
        .optimizers
        .iter()
        .find_map(|o| match o.kind {
            OptimizerKind::PrunAdag(c) => Some(c),
            _ => None,
        })
        .unwrap_or_else(|| PrunAdagConfig::with_defaults(cfg.dim, Variant::V1));
    let present = |v: Variant| {
        out.optimizers
            .iter()
            .any(|o| matches!(o.kind, OptimizerKind::PrunAdag(c) if c.variant == v))
    };
    let mut extra = Vec::new();
    for v in Variant::VERSIONS.into_iter().chain([Variant::RelevantOnly]) {
        if !present(v) {
            extra.push(OptimizerEntry::prunadag(PrunAdagConfig {
                variant: v,
                ..template
            }));
        }
    }
    for e in extra {
        let mut e = e;
        if out.optimizers.iter().any(|o| o.label == e.label) {
            e.label = format!("{}-ablation", e.label);
        }
        out.optimizers.push(e);
    }
    out
}

pub fn ablation_relevant_only(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment(&with_relevant_only(cfg))
}
