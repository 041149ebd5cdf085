//! Per-iteration traces produced by the optimizer driver.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    MaxIters,
    Diverged,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::MaxIters => "max_iters",
            Termination::Diverged => "diverged",
        }
    }
}

/// The three sums on the right-hand side of the per-iteration descent
/// inequality: `Σ (g^O)²/w^O`, `Σ (g^O)²/(w^O)²` and `Σ (x^D)²/(w^D)²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DescentTerms {
    pub opt_gain: f64,
    pub opt_curvature: f64,
    pub dec_curvature: f64,
}

/// Column-oriented trace. Every per-iteration vector has one entry per
/// iteration performed; entry `k` describes the state *before* step `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub grad_norm: Vec<f64>,
    /// Norm of the gradient restricted to the optimisable set.
    pub grad_norm_opt: Vec<f64>,
    /// Objective values, present when the run was asked to record them.
    pub objective: Option<Vec<f64>>,
    /// Count of components with `|x_i| < delta_trace`.
    pub below_delta: Vec<usize>,
    pub card_relevant: Vec<usize>,
    pub card_acceptable: Vec<usize>,
    pub card_decreasable: Vec<usize>,
    /// Running `max_{j<=k} |x_j|_inf`.
    pub max_abs_x: Vec<f64>,
    /// Descent-inequality sums (prunAdag and Adagrad only).
    pub descent: Option<Vec<DescentTerms>>,
    pub delta_trace: f64,
    pub final_x: Vec<f64>,
    /// Gradient norm at `final_x`.
    pub final_grad_norm: f64,
    pub final_objective: Option<f64>,
    pub termination: Option<Termination>,
}

impl RunRecord {
    pub fn iterations(&self) -> usize {
        self.grad_norm.len()
    }

    /// Checks that all per-iteration arrays share one length and that the
    /// recorded set sizes partition `n` every iteration.
    pub fn is_consistent(&self, n: usize) -> bool {
        let k = self.iterations();
        let lens_ok = self.grad_norm_opt.len() == k
            && self.below_delta.len() == k
            && self.card_relevant.len() == k
            && self.card_acceptable.len() == k
            && self.card_decreasable.len() == k
            && self.max_abs_x.len() == k
            && self.objective.as_ref().is_none_or(|f| f.len() == k)
            && self.descent.as_ref().is_none_or(|d| d.len() == k);
        let partition_ok = (0..k).all(|j| {
            self.card_relevant[j] + self.card_acceptable[j] + self.card_decreasable[j] == n
        });
        lens_ok && partition_ok
    }
}
