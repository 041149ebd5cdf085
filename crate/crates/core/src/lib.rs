//! Pruning-aware adaptive gradient optimization.
//!
//! [`PrunAdag`] is an objective-function-free first-order method that splits
//! the parameters at every iteration into an *optimisable* set, updated with
//! an Adagrad step, and a *decreasable* set whose magnitudes are shrunk
//! toward zero inside an adaptive trust region. Solutions therefore keep
//! their accuracy when small components are pruned afterwards.
//!
//! The crate also provides Adagrad and two Frank-Wolfe baselines, a suite
//! of test problems, magnitude pruning with robustness measures, runtime
//! checks of the convergence guarantees, and a batch experiment harness.
//!
//! ```
//! use prunadag::{run, gen_least_squares, LsKind, PrunAdag, PrunAdagConfig, RunOptions, StopCriteria, Variant};
//!
//! let problem = gen_least_squares(LsKind::A1, 5, 40, 1).unwrap();
//! let mut x0 = vec![0.0; 40];
//! x0[..4].copy_from_slice(&[0.5, -0.5, 0.5, -0.5]);
//! let mut opt = PrunAdag::new(x0, PrunAdagConfig::with_defaults(40, Variant::V3)).unwrap();
//! let stop = StopCriteria { grad_tol: 1e-6, max_iters: 200 };
//! let rec = run(&mut opt, &problem, stop, &RunOptions::default()).unwrap();
//! assert_eq!(rec.final_x.len(), 40);
//! ```

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod driver;
pub mod error;
pub mod harness;
pub mod problem;
pub mod problems;
pub mod prunadag;
pub mod pruning;
pub mod record;
pub mod theory;
pub mod vector;

pub use baselines::{adagrad_step, fw_lmo, fw_step, Adagrad, FrankWolfe, FwConfig, FwRate};
pub use driver::{run, Optimizer, RunOptions, StepReport, StopCriteria};
pub use error::{Error, Result};
pub use problem::{finite_difference_error, Problem};
pub use problems::{
    gen_least_squares, LeastSquaresProblem, LogisticProblem, LsKind, SparseCodingProblem,
};
pub use prunadag::{PrunAdag, PrunAdagConfig, Variant};
pub use pruning::{prune_threshold, prune_to_sparsity, robustness, PruneReport, PruneTarget};
pub use record::{DescentTerms, RunRecord, Termination};
pub use vector::{masked_norm, IndexSet};
