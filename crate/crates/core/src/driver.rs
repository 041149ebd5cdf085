//! The generic iterate-until-stop loop shared by all optimizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::record::{DescentTerms, RunRecord, Termination};
use crate::vector::{count_below, max_abs, norm};

/// What one optimizer step reports back to the driver.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub card_relevant: usize,
    pub card_acceptable: usize,
    pub card_decreasable: usize,
    pub grad_norm_opt: f64,
    pub descent: Option<DescentTerms>,
}

/// A first-order method that owns its iterate and consumes one gradient
/// per step.
pub trait Optimizer {
    fn x(&self) -> &[f64];

    /// Advances the iterate given `g = g(x)` at the current iterate.
    fn step(&mut self, g: &[f64]) -> StepReport;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            grad_tol: 1e-9,
            max_iters: 10_000,
        }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::contract("grad_tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::contract("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub record_objective: bool,
    /// Threshold for the per-iteration "components below delta" count.
    pub delta_trace: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_objective: true,
            delta_trace: 1e-3,
        }
    }
}

/// Runs `opt` on `problem` until `|g_k| <= grad_tol` or `max_iters` steps
/// have been taken.
pub fn run<O, P>(
    opt: &mut O,
    problem: &P,
    stop: StopCriteria,
    opts: &RunOptions,
) -> Result<RunRecord>
where
    O: Optimizer + ?Sized,
    P: Problem + ?Sized,
{
    stop.validate()?;
    let n = problem.dim();
    if opt.x().len() != n {
        return Err(Error::contract(format!(
            "iterate has length {} but problem dimension is {n}",
            opt.x().len()
        )));
    }

    let mut rec = RunRecord {
        objective: opts.record_objective.then(Vec::new),
        delta_trace: opts.delta_trace,
        ..RunRecord::default()
    };
    let mut g = vec![0.0; n];
    let mut running_max = 0.0_f64;
    let mut descent: Vec<DescentTerms> = Vec::new();
    let mut have_descent = true;

    let mut k = 0usize;
    loop {
        let x = opt.x();
        problem.gradient_into(x, &mut g);
        let f = opts.record_objective.then(|| problem.objective(x));
        if let Some(reason) = non_finite(x, &g, f) {
            rec.final_x = x.to_vec();
            rec.termination = Some(Termination::Diverged);
            if have_descent && !descent.is_empty() {
                rec.descent = Some(descent);
            }
            return Err(Error::Diverged {
                iteration: k,
                reason,
                partial: Some(Box::new(rec)),
            });
        }
        let gn = norm(&g);
        let done = if gn <= stop.grad_tol {
            Some(Termination::GradTol)
        } else if k >= stop.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        };
        if let Some(reason) = done {
            rec.final_x = x.to_vec();
            rec.final_grad_norm = gn;
            rec.final_objective = f;
            rec.termination = Some(reason);
            break;
        }

        running_max = running_max.max(max_abs(x));
        rec.grad_norm.push(gn);
        rec.below_delta.push(count_below(x, opts.delta_trace));
        rec.max_abs_x.push(running_max);
        if let (Some(fs), Some(f)) = (rec.objective.as_mut(), f) {
            fs.push(f);
        }

        let report = opt.step(&g);
        rec.grad_norm_opt.push(report.grad_norm_opt);
        rec.card_relevant.push(report.card_relevant);
        rec.card_acceptable.push(report.card_acceptable);
        rec.card_decreasable.push(report.card_decreasable);
        match report.descent {
            Some(d) if have_descent => descent.push(d),
            _ => have_descent = false,
        }
        k += 1;
    }
    if have_descent {
        rec.descent = Some(descent);
    }
    Ok(rec)
}

fn non_finite(x: &[f64], g: &[f64], f: Option<f64>) -> Option<String> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Some(format!("iterate component {i} is not finite"));
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Some(format!("gradient component {i} is not finite"));
    }
    if let Some(f) = f {
        if !f.is_finite() {
            return Some("objective is not finite".into());
        }
    }
    None
}
