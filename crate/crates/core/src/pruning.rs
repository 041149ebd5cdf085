//! A posteriori magnitude pruning and the robustness measures
//! `rho = |g(x̄)|` and `omega = sqrt(|f(x̄) - f(x)|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::vector::norm;

/// Zeroes every component with `|x_i| < delta`; components equal to
/// `delta` survive.
pub fn prune_threshold(x: &[f64], delta: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| if v.abs() < delta { 0.0 } else { v })
        .collect()
}

/// Zeroes exactly `floor(sigma n)` smallest-magnitude components (ties go
/// to the lowest index) and returns the largest zeroed magnitude as the
/// implied threshold, or 0 when nothing is zeroed.
pub fn prune_to_sparsity(x: &[f64], sigma: f64) -> Result<(Vec<f64>, f64)> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::contract(format!("sparsity {sigma} outside [0, 1]")));
    }
    let n = x.len();
    let count = ((sigma * n as f64).floor() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        x[i].abs()
            .partial_cmp(&x[j].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut out = x.to_vec();
    let mut implied = 0.0_f64;
    for &i in &order[..count] {
        implied = implied.max(x[i].abs());
        out[i] = 0.0;
    }
    Ok((out, implied))
}

pub fn achieved_sparsity(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().filter(|v| **v == 0.0).count() as f64 / x.len() as f64
}

/// `(rho, omega)` for a pruned point `x̄` of `x`.
pub fn robustness<P: Problem + ?Sized>(
    x: &[f64],
    pruned: &[f64],
    problem: &P,
) -> Result<(f64, f64)> {
    if x.len() != problem.dim() || pruned.len() != problem.dim() {
        return Err(Error::contract(
            "vector length does not match problem dimension",
        ));
    }
    let g = problem.gradient(pruned);
    let f_pruned = problem.objective(pruned);
    let f = problem.objective(x);
    let rho = norm(&g);
    let omega = (f_pruned - f).abs().sqrt();
    if !rho.is_finite() || !omega.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            reason: "oracle returned a non-finite value at the pruned point".into(),
            partial: None,
        });
    }
    Ok((rho, omega))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PruneTarget {
    Threshold(f64),
    Sparsity(f64),
}

impl PruneTarget {
    pub fn kind(&self) -> &'static str {
        match self {
            PruneTarget::Threshold(_) => "delta",
            PruneTarget::Sparsity(_) => "sigma",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            PruneTarget::Threshold(v) | PruneTarget::Sparsity(v) => v,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            PruneTarget::Threshold(d) => {
                if !(d >= 0.0) {
                    return Err(Error::contract("threshold must be nonnegative"));
                }
                Ok(prune_threshold(x, d))
            }
            PruneTarget::Sparsity(s) => prune_to_sparsity(x, s).map(|(v, _)| v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneRow {
    pub target: PruneTarget,
    pub achieved_sparsity: f64,
    pub rho: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub rows: Vec<PruneRow>,
}

/// Prunes `x` once per target and measures each result.
pub fn prune_report<P: Problem + ?Sized>(
    x: &[f64],
    targets: &[PruneTarget],
    problem: &P,
) -> Result<PruneReport> {
    let rows = targets
        .iter()
        .map(|t| {
            let pruned = t.apply(x)?;
            let (rho, omega) = robustness(x, &pruned, problem)?;
            Ok(PruneRow {
                target: *t,
                achieved_sparsity: achieved_sparsity(&pruned),
                rho,
                omega,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PruneReport { rows })
}
