//! Batch experiments: configuration, multi-seed execution, result files
//! and verification of stored traces.

pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;

pub use config::{
    load_config, load_config_str, ExperimentConfig, OptimizerEntry, OptimizerKind, ProblemSpec,
};
pub use experiment::{
    ablation_relevant_only, build_instance, run_experiment, starting_point, with_relevant_only,
    ExperimentResult, Instance, RunResult,
};
pub use output::write_results;
pub use verify::{verify_dir, verify_run, VerifyRow};
