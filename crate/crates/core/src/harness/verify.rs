//! Runs the theory checks over stored run records.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::experiment::RunResult;
use crate::error::Result;
use crate::theory::{check_descent_lemma, check_gradient_bound, GradientBoundOutcome};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub file: String,
    pub optimizer: String,
    pub seed: u64,
    pub iterations: usize,
    /// `None` when the descent check does not apply to the method.
    pub descent_violations: Option<usize>,
    /// `None` when the complexity bound does not apply or was skipped.
    pub bound_violations: Option<usize>,
    pub note: String,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        self.descent_violations.unwrap_or(0) == 0 && self.bound_violations.unwrap_or(0) == 0
    }
}

pub fn verify_run(file: &str, run: &RunResult) -> Result<VerifyRow> {
    let mut row = VerifyRow {
        file: file.to_string(),
        optimizer: run.optimizer.clone(),
        seed: run.seed,
        iterations: run.record.iterations(),
        descent_violations: None,
        bound_violations: None,
        note: String::new(),
    };
    if let Some(reason) = &run.diverged {
        row.note = format!("diverged ({reason}); checks cover the partial trace");
    }
    let rec = &run.record;
    if let (Some(l), Some(_), Some(_)) =
        (run.lipschitz, rec.descent.as_ref(), rec.objective.as_ref())
    {
        row.descent_violations = Some(check_descent_lemma(rec, l)?.violations.len());
    }
    if let (Some(setup), Some(_)) = (run.bound_setup.as_ref(), rec.objective.as_ref()) {
        match check_gradient_bound(rec, setup)? {
            GradientBoundOutcome::Checked(c) => row.bound_violations = Some(c.violations.len()),
            GradientBoundOutcome::Skipped(why) => {
                if !row.note.is_empty() {
                    row.note.push_str("; ");
                }
                row.note.push_str(&format!("bound skipped: {why}"));
            }
        }
    }
    Ok(row)
}

/// Verifies every `*.json` run record in `dir` (or in `dir/runs`), in file
/// name order.
pub fn verify_dir(dir: &Path) -> Result<Vec<VerifyRow>> {
    let runs = dir.join("runs");
    let dir = if runs.is_dir() {
        runs
    } else {
        dir.to_path_buf()
    };
    let mut files: Vec<_> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let run: RunResult = serde_json::from_slice(&fs::read(p)?)?;
            let name = p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            verify_run(&name, &run)
        })
        .collect()
}
