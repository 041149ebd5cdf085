mod common;

use common::{tiny_libsvm, tiny_sparse_coding, worst_fd_error};
use prunadag::problems::rng::SeededRng;
use prunadag::problems::{
    gen_least_squares, gen_separable_classification, gen_sparse_recovery, LogisticProblem, LsKind,
};
use prunadag::vector::norm;
use prunadag::Problem;

fn fd_ok<P: Problem>(p: &P, seed: u64, spread: f64) {
    let err = worst_fd_error(p, seed, spread);
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn least_squares_generators() {
    for kind in LsKind::ALL {
        fd_ok(&gen_least_squares(kind, 12, 40, 3).unwrap(), 1, 1.0);
    }
    fd_ok(&gen_sparse_recovery(12, 40, 5, 0.01, 3).unwrap(), 2, 1.0);
}

#[test]
fn logistic_problems() {
    let (data, _) = gen_separable_classification(30, 10, 120, 0.0, 5).unwrap();
    fd_ok(&LogisticProblem::new(data).unwrap(), 3, 1.0);

    let dir = tempfile::tempdir().unwrap();
    let (train, test) = tiny_libsvm(dir.path(), 9);
    assert_eq!((train.samples(), test.samples()), (28, 12));
    fd_ok(&LogisticProblem::new(train).unwrap(), 4, 2.0);
}

#[test]
fn sparse_coding_from_files() {
    let dir = tempfile::tempdir().unwrap();
    fd_ok(&tiny_sparse_coding(dir.path(), 6, 2), 5, 1.0);
}

#[test]
fn least_squares_lipschitz_constant() {
    let mut rng = SeededRng::new(10);
    for kind in LsKind::ALL {
        let p = gen_least_squares(kind, 10, 30, 8).unwrap();
        let l = p.lipschitz().unwrap();
        for _ in 0..100 {
            let x = rng.normal_vec(30);
            let y = rng.normal_vec(30);
            let dg: Vec<f64> = p
                .gradient(&x)
                .iter()
                .zip(p.gradient(&y))
                .map(|(a, b)| a - b)
                .collect();
            let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            assert!(norm(&dg) <= l * norm(&dx) * (1.0 + 1e-10), "{kind}");
        }
    }
}

#[test]
fn generators_are_reproducible() {
    for kind in LsKind::ALL {
        let a = gen_least_squares(kind, 6, 20, 42).unwrap();
        let b = gen_least_squares(kind, 6, 20, 42).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.rhs(), b.rhs());
    }
}
