//! Test problems: random least squares, sparse recovery, sparse coding and
//! logistic-loss classification, plus their file loaders.

pub mod least_squares;
pub mod libsvm;
pub mod logistic;
pub mod matrix_io;
pub mod rng;
pub mod sparse_coding;

pub use least_squares::{gen_least_squares, gen_sparse_recovery, LeastSquaresProblem, LsKind};
pub use libsvm::{load_libsvm, parse_libsvm};
pub use logistic::{classify_accuracy, gen_separable_classification, Dataset, LogisticProblem};
pub use matrix_io::{read_matrix, read_vector, write_matrix, write_vector};
pub use rng::SeededRng;
pub use sparse_coding::SparseCodingProblem;
