#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use prunadag::problems::libsvm::load_libsvm;
use prunadag::problems::rng::SeededRng;
use prunadag::problems::{matrix_io, Dataset, SparseCodingProblem};
use prunadag::prunadag::IterationDetail;
use prunadag::{Problem, PrunAdag, PrunAdagConfig, Variant};

/// `f(x) = ½ Σ c_i x_i²`, so `g = c ⊙ x`.
pub struct Diagonal(pub Vec<f64>);

impl Problem for Diagonal {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.0).map(|(x, c)| c * x * x).sum::<f64>()
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, x), c) in out.iter_mut().zip(x).zip(&self.0) {
            *o = c * x;
        }
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.0.iter().fold(0.0, |m, c| m.max(c.abs())))
    }
}

fn sgn(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Independent re-derivation of the weight closed forms: running sums of
/// `g_i²` over iterations where `i` was optimisable and of `x_i²` where it
/// was decreasable.
pub struct WeightReplay {
    varsigma: f64,
    sum_opt: Vec<f64>,
    sum_dec: Vec<f64>,
}

impl WeightReplay {
    pub fn new(n: usize, varsigma: f64) -> Self {
        WeightReplay {
            varsigma,
            sum_opt: vec![0.0; n],
            sum_dec: vec![0.0; n],
        }
    }

    pub fn record(&mut self, d: &IterationDetail) {
        for i in d.classification.optimisable.iter() {
            self.sum_opt[i] += d.g[i] * d.g[i];
        }
        for i in d.classification.decreasable.iter() {
            self.sum_dec[i] += d.x[i] * d.x[i];
        }
    }

    /// Checks `w² = ς + Σ(·)²` to a relative tolerance.
    pub fn check(&self, opt: &PrunAdag) -> Result<(), String> {
        let close = |w: f64, s: f64| {
            let want = self.varsigma + s;
            (w * w - want).abs() <= 1e-10 * want
        };
        for i in 0..self.sum_opt.len() {
            if !close(opt.w_opt()[i], self.sum_opt[i]) {
                return Err(format!(
                    "w_opt[{i}] = {} breaks the closed form",
                    opt.w_opt()[i]
                ));
            }
            if !close(opt.w_dec()[i], self.sum_dec[i]) {
                return Err(format!(
                    "w_dec[{i}] = {} breaks the closed form",
                    opt.w_dec()[i]
                ));
            }
        }
        Ok(())
    }
}

/// Checks every per-iteration property of one recorded iteration.
pub fn check_iteration(
    d: &IterationDetail,
    variant: Variant,
    relevant: usize,
) -> Result<(), String> {
    let n = d.x.len();
    let c = &d.classification;

    if c.relevant.len() != relevant.min(n) {
        return Err(format!(
            "|R| = {} instead of {}",
            c.relevant.len(),
            relevant.min(n)
        ));
    }
    if !c.relevant.is_disjoint(&c.acceptable) {
        return Err("R and A intersect".into());
    }
    if c.optimisable != c.relevant.union(&c.acceptable) {
        return Err("O != R ∪ A".into());
    }
    if !c.optimisable.is_disjoint(&c.decreasable) || c.optimisable.len() + c.decreasable.len() != n
    {
        return Err("O and D do not partition the indices".into());
    }
    if !c.sign_matched.is_subset(&c.decreasable) {
        return Err("S is not a subset of D".into());
    }
    if variant == Variant::RelevantOnly && !c.acceptable.is_empty() {
        return Err("relevant-only run has acceptable indices".into());
    }

    let mut dec_inner = 0.0;
    for i in c.decreasable.iter() {
        let s = d.step[i];
        if s.abs() > d.limit[i].abs() {
            return Err(format!(
                "|s_{i}| = {} exceeds |s^L_{i}| = {}",
                s.abs(),
                d.limit[i].abs()
            ));
        }
        dec_inner += d.g[i] * s;
        if c.sign_matched.contains(i) {
            if s.abs() > d.bounds.lower[i] {
                return Err(format!("|s_{i}| exceeds a_{i}"));
            }
            if sgn(s) == sgn(d.x[i]) && s != 0.0 {
                return Err(format!("decreasable step at {i} grows |x|"));
            }
            let shrinks_literally = matches!(variant, Variant::V2 | Variant::V4);
            if shrinks_literally && (d.x[i] + s).abs() > d.x[i].abs() {
                return Err(format!("|x_{i}| increased"));
            }
        } else if s != 0.0 {
            return Err(format!("non-sign-matched decreasable index {i} moved"));
        }
    }
    if dec_inner > 0.0 {
        return Err(format!("Σ_D g s = {dec_inner} > 0"));
    }
    let inner: f64 = d.g.iter().zip(&d.step).map(|(g, s)| g * s).sum();
    if inner > 0.0 {
        return Err(format!("Σ g s = {inner} > 0"));
    }
    if variant.caps_at_magnitude() {
        for i in c.acceptable.iter() {
            let next = d.x[i] + d.step[i];
            if d.step[i].abs() > d.x[i].abs() || (next != 0.0 && sgn(next) != sgn(d.x[i])) {
                return Err(format!("acceptable index {i} changed sign"));
            }
        }
    }
    Ok(())
}

/// A gradient-like vector with occasional exact zeros and ties.
pub fn fuzz_vector(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u = rng.uniform();
            if u < 0.1 {
                0.0
            } else if u < 0.15 {
                scale
            } else {
                scale * rng.normal() * (4.0 * rng.uniform() - 2.0).exp()
            }
        })
        .collect()
}

pub const ALL_VARIANTS: [Variant; 5] = [
    Variant::V1,
    Variant::V2,
    Variant::V3,
    Variant::V4,
    Variant::RelevantOnly,
];

/// Feeds `iters` fuzzed gradients to a fresh optimizer and checks every
/// iteration plus the weight closed forms. Returns the iteration count.
pub fn fuzz_run(seed: u64, iters: usize) -> Result<usize, String> {
    let mut rng = SeededRng::new(seed);
    let n = 2 + (rng.uniform() * 40.0) as usize;
    let variant = ALL_VARIANTS[(rng.uniform() * 5.0) as usize % 5];
    let relevant = 1 + (rng.uniform() * n as f64) as usize % n;
    let varsigma = 10f64.powf(-4.0 + 3.9 * rng.uniform());
    let cfg = PrunAdagConfig {
        relevant,
        varsigma,
        variant,
    };
    let x0 = fuzz_vector(&mut rng, n, 1.0);
    let mut opt = PrunAdag::new(x0, cfg).map_err(|e| e.to_string())?;
    let mut replay = WeightReplay::new(n, varsigma);
    let use_problem = rng.bernoulli(0.5);
    let diag: Vec<f64> = (0..n).map(|_| 0.1 + 3.0 * rng.uniform()).collect();
    let problem = Diagonal(diag);
    for _ in 0..iters {
        let g = if use_problem {
            problem.gradient(prunadag::Optimizer::x(&opt))
        } else {
            let scale = 10f64.powf(-3.0 + 4.0 * rng.uniform());
            fuzz_vector(&mut rng, n, scale)
        };
        let d = opt.step_detailed(&g);
        check_iteration(&d, variant, relevant)
            .map_err(|e| format!("seed {seed}, k {}: {e}", d.k))?;
        replay.record(&d);
    }
    replay
        .check(&opt)
        .map_err(|e| format!("seed {seed}: {e}"))?;
    Ok(iters)
}

/// Writes a small random LIBSVM file into `dir` and loads it with a 70:30 split.
pub fn tiny_libsvm(dir: &Path, seed: u64) -> (Dataset, Dataset) {
    let path = dir.join("tiny.svm");
    let mut f = std::fs::File::create(&path).unwrap();
    let mut rng = SeededRng::new(seed);
    for i in 0..40 {
        write!(f, "{}", i % 2).unwrap();
        for j in 1..=8 {
            if rng.bernoulli(0.6) {
                write!(f, " {j}:{}", rng.normal()).unwrap();
            }
        }
        writeln!(f).unwrap();
    }
    drop(f);
    load_libsvm(&path, true, Some(1)).unwrap()
}

/// Writes a random dictionary and data matrix into `dir` and loads column `col`.
pub fn tiny_sparse_coding(dir: &Path, seed: u64, col: usize) -> SparseCodingProblem {
    let mut rng = SeededRng::new(seed);
    let dict = DMatrix::from_fn(15, 30, |_, _| rng.normal());
    let data = DMatrix::from_fn(15, 4, |_, _| rng.normal());
    let (dp, yp) = (dir.join("D.padm"), dir.join("Y.padm"));
    matrix_io::write_matrix(&dp, &dict).unwrap();
    matrix_io::write_matrix(&yp, &data).unwrap();
    SparseCodingProblem::load(&dp, &yp, col).unwrap()
}

/// Largest relative finite-difference gradient error over 10 random points.
pub fn worst_fd_error<P: Problem + ?Sized>(p: &P, seed: u64, spread: f64) -> f64 {
    let mut rng = SeededRng::new(seed);
    (0..10)
        .map(|_| {
            let x: Vec<f64> = rng
                .normal_vec(p.dim())
                .into_iter()
                .map(|v| v * spread)
                .collect();
            prunadag::finite_difference_error(p, &x, 1e-6)
        })
        .fold(0.0, f64::max)
}
