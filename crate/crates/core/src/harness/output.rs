//! CSV, JSON and solution-file emission for experiment results.
//!
//! Layout of an output directory:
//!
//! ```text
//! trace.csv        one row per (optimizer, seed, k)
//! prune.csv        one row per (optimizer, seed, target)
//! aggregate.csv    means over non-diverged seeds per (optimizer, target)
//! plots/grad_norm.csv, plots/below_delta.csv,
//! plots/rho_vs_sigma.csv, plots/omega_vs_sigma.csv
//! runs/<optimizer>_seed<i>.json       full run records, read by `verify`
//! solutions/<optimizer>_seed<i>.padm  final iterates
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{ExperimentResult, RunResult};
use crate::error::Result;
use crate::problems::write_vector;

#[derive(Serialize)]
struct TraceRow<'a> {
    optimizer: &'a str,
    seed: u64,
    k: usize,
    grad_norm: f64,
    #[serde(rename = "grad_norm_O")]
    grad_norm_opt: f64,
    f: Option<f64>,
    below_delta_count: usize,
    #[serde(rename = "card_R")]
    card_relevant: usize,
    #[serde(rename = "card_A")]
    card_acceptable: usize,
    #[serde(rename = "card_D")]
    card_decreasable: usize,
}

#[derive(Serialize)]
struct PruneCsvRow<'a> {
    optimizer: &'a str,
    seed: u64,
    target_kind: &'a str,
    target_value: f64,
    achieved_sparsity: f64,
    rho: f64,
    omega: f64,
    accuracy_if_classification: Option<f64>,
}

#[derive(Serialize)]
struct AggregateRow<'a> {
    optimizer: &'a str,
    target_kind: &'a str,
    target_value: Option<f64>,
    runs: usize,
    diverged: usize,
    converged: usize,
    mean_iterations: Option<f64>,
    mean_final_grad_norm: Option<f64>,
    mean_accuracy_unpruned: Option<f64>,
    mean_achieved_sparsity: Option<f64>,
    mean_rho: Option<f64>,
    mean_omega: Option<f64>,
    mean_accuracy: Option<f64>,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    optimizer: &'a str,
    k: usize,
    value: f64,
    runs: usize,
}

#[derive(Serialize)]
struct SigmaRow<'a> {
    optimizer: &'a str,
    sigma: f64,
    value: f64,
    runs: usize,
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, c) = v
        .into_iter()
        .fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

/// Optimizer labels in configuration order.
fn labels(res: &ExperimentResult) -> Vec<&str> {
    res.config
        .optimizers
        .iter()
        .map(|o| o.label.as_str())
        .collect()
}

fn ok_runs<'a>(res: &'a ExperimentResult, label: &'a str) -> Vec<&'a RunResult> {
    res.runs_for(label)
        .filter(|r| r.diverged.is_none())
        .collect()
}

pub fn file_stem(label: &str, seed_index: usize) -> String {
    let clean: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{clean}_seed{seed_index}")
}

fn write_trace(res: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &res.runs {
        let rec = &r.record;
        for k in 0..rec.iterations() {
            w.serialize(TraceRow {
                optimizer: &r.optimizer,
                seed: r.seed,
                k,
                grad_norm: rec.grad_norm[k],
                grad_norm_opt: rec.grad_norm_opt[k],
                f: rec.objective.as_ref().map(|f| f[k]),
                below_delta_count: rec.below_delta[k],
                card_relevant: rec.card_relevant[k],
                card_acceptable: rec.card_acceptable[k],
                card_decreasable: rec.card_decreasable[k],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_prune(res: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &res.runs {
        for p in &r.prune {
            w.serialize(PruneCsvRow {
                optimizer: &r.optimizer,
                seed: r.seed,
                target_kind: p.row.target.kind(),
                target_value: p.row.target.value(),
                achieved_sparsity: p.row.achieved_sparsity,
                rho: p.row.rho,
                omega: p.row.omega,
                accuracy_if_classification: p.accuracy,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_aggregate(res: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for label in labels(res) {
        let all: Vec<&RunResult> = res.runs_for(label).collect();
        let ok = ok_runs(res, label);
        let diverged = all.len() - ok.len();
        let converged = ok
            .iter()
            .filter(|r| r.record.termination == Some(crate::record::Termination::GradTol))
            .count();
        let iters = mean(ok.iter().map(|r| r.record.iterations() as f64));
        let gnorm = mean(ok.iter().map(|r| r.record.final_grad_norm));
        let acc = mean(ok.iter().filter_map(|r| r.accuracy));
        let n_targets = ok.first().map_or(0, |r| r.prune.len());
        let base = |target_kind, target_value| AggregateRow {
            optimizer: label,
            target_kind,
            target_value,
            runs: all.len(),
            diverged,
            converged,
            mean_iterations: iters,
            mean_final_grad_norm: gnorm,
            mean_accuracy_unpruned: acc,
            mean_achieved_sparsity: None,
            mean_rho: None,
            mean_omega: None,
            mean_accuracy: None,
        };
        if n_targets == 0 {
            w.serialize(base("none", None))?;
        }
        for t in 0..n_targets {
            let target = ok[0].prune[t].row.target;
            let col = |f: fn(&super::experiment::PruneEntry) -> Option<f64>| {
                mean(ok.iter().filter_map(|r| f(&r.prune[t])))
            };
            w.serialize(AggregateRow {
                mean_achieved_sparsity: col(|p| Some(p.row.achieved_sparsity)),
                mean_rho: col(|p| Some(p.row.rho)),
                mean_omega: col(|p| Some(p.row.omega)),
                mean_accuracy: col(|p| p.accuracy),
                ..base(target.kind(), Some(target.value()))
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration mean over non-diverged runs. Runs that stopped early
/// contribute their final value to later iterations.
fn write_curve(
    res: &ExperimentResult,
    path: &Path,
    value: impl Fn(&RunResult, usize) -> f64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for label in labels(res) {
        let ok = ok_runs(res, label);
        let len = ok
            .iter()
            .map(|r| r.record.iterations() + 1)
            .max()
            .unwrap_or(0);
        for k in 0..len {
            let v = mean(ok.iter().map(|r| value(r, k))).unwrap_or(f64::NAN);
            w.serialize(CurveRow {
                optimizer: label,
                k,
                value: v,
                runs: ok.len(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn grad_norm_at(r: &RunResult, k: usize) -> f64 {
    let rec = &r.record;
    rec.grad_norm.get(k).copied().unwrap_or(rec.final_grad_norm)
}

fn below_delta_percent_at(r: &RunResult, k: usize) -> f64 {
    let rec = &r.record;
    let n = rec.final_x.len().max(1) as f64;
    let count = rec
        .below_delta
        .get(k)
        .copied()
        .unwrap_or_else(|| crate::vector::count_below(&rec.final_x, rec.delta_trace));
    100.0 * count as f64 / n
}

fn write_sigma_curve(res: &ExperimentResult, path: &Path, rho: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for label in labels(res) {
        let ok = ok_runs(res, label);
        let mut by_sigma: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for r in &ok {
            for p in &r.prune {
                if let crate::pruning::PruneTarget::Sparsity(s) = p.row.target {
                    let v = if rho { p.row.rho } else { p.row.omega };
                    by_sigma.entry(s.to_bits()).or_insert((s, vec![])).1.push(v);
                }
            }
        }
        let mut rows: Vec<(f64, Vec<f64>)> = by_sigma.into_values().collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (sigma, vals) in rows {
            w.serialize(SigmaRow {
                optimizer: label,
                sigma,
                value: mean(vals.iter().copied()).unwrap_or(f64::NAN),
                runs: vals.len(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the full result bundle into `dir` and returns the paths written.
pub fn write_results(res: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    let mut written = vec![];
    let mut emit = |p: PathBuf, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        f(&p)?;
        written.push(p);
        Ok(())
    };
    emit(dir.join("trace.csv"), &|p| write_trace(res, p))?;
    emit(dir.join("prune.csv"), &|p| write_prune(res, p))?;
    emit(dir.join("aggregate.csv"), &|p| write_aggregate(res, p))?;
    emit(plots.join("grad_norm.csv"), &|p| {
        write_curve(res, p, grad_norm_at)
    })?;
    emit(plots.join("below_delta.csv"), &|p| {
        write_curve(res, p, below_delta_percent_at)
    })?;
    emit(plots.join("rho_vs_sigma.csv"), &|p| {
        write_sigma_curve(res, p, true)
    })?;
    emit(plots.join("omega_vs_sigma.csv"), &|p| {
        write_sigma_curve(res, p, false)
    })?;

    if res.config.write_runs {
        let runs = dir.join("runs");
        fs::create_dir_all(&runs)?;
        for r in &res.runs {
            let p = runs.join(format!("{}.json", file_stem(&r.optimizer, r.seed_index)));
            fs::write(&p, serde_json::to_vec(r)?)?;
            written.push(p);
        }
    }
    if res.config.write_solutions {
        let sols = dir.join("solutions");
        fs::create_dir_all(&sols)?;
        for r in res.runs.iter().filter(|r| r.diverged.is_none()) {
            let p = sols.join(format!("{}.padm", file_stem(&r.optimizer, r.seed_index)));
            write_vector(&p, &r.record.final_x)?;
            written.push(p);
        }
    }
    Ok(written)
}
