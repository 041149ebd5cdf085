//! Binary classification with the averaged logistic loss.

use nalgebra::{DMatrix, DVectorView};

use super::rng::{derive_seed, SeededRng};
use crate::error::{Error, Result};
use crate::problem::Problem;

/// A labelled sample matrix (one row per sample) with labels in {-1, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

/// Per-feature minimum and maximum of a training set.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    /// Maps each feature to `(v - min)/(max - min)` clipped to `[0, 1]`.
    /// Constant training features map to `clip(v - min)`.
    pub fn apply(&self, features: &mut DMatrix<f64>) {
        for j in 0..features.ncols() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let range = hi - lo;
            for v in features.column_mut(j).iter_mut() {
                let t = if range > 0.0 {
                    (*v - lo) / range
                } else {
                    *v - lo
                };
                *v = t.clamp(0.0, 1.0);
            }
        }
    }
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::contract("one label per sample required"));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::contract("labels must be -1 or +1"));
        }
        Ok(Dataset { features, labels })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn min_max(&self) -> MinMax {
        let n = self.dim();
        let mut min = vec![0.0; n];
        let mut max = vec![0.0; n];
        if self.samples() > 0 {
            for j in 0..n {
                let col = self.features.column(j);
                min[j] = col.min();
                max[j] = col.max();
            }
        }
        MinMax { min, max }
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Random split with `round(0.7 N)` training samples.
    pub fn split_70_30(&self, seed: u64) -> (Dataset, Dataset) {
        let n = self.samples();
        let n_train = (7 * n + 5) / 10;
        let mut rng = SeededRng::new(derive_seed(&[seed, 0x7030]));
        let perm = rng.permutation(n);
        let (train, test) = perm.split_at(n_train);
        (self.select(train), self.select(test))
    }
}

/// Splits (when `split_seed` is given) and optionally min-max normalizes
/// with training statistics. Without a split every sample is training data
/// and the test set is empty.
pub fn prepare(data: &Dataset, normalize: bool, split_seed: Option<u64>) -> (Dataset, Dataset) {
    let (mut train, mut test) = match split_seed {
        Some(seed) => data.split_70_30(seed),
        None => (data.clone(), data.select(&[])),
    };
    if normalize {
        let stats = train.min_max();
        stats.apply(&mut train.features);
        stats.apply(&mut test.features);
    }
    (train, test)
}

/// `f(x) = (1/N) Σ log(1 + exp(-y_i a_iᵀx))`.
#[derive(Clone, Debug)]
pub struct LogisticProblem {
    data: Dataset,
    lipschitz: f64,
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-z})` without overflow.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem {
    pub fn new(data: Dataset) -> Result<Self> {
        if data.samples() == 0 {
            return Err(Error::contract(
                "logistic problem needs at least one sample",
            ));
        }
        // Hessian is (1/N) Aᵀ diag(σ(1-σ)) A with σ(1-σ) <= 1/4.
        let lipschitz = data
            .features
            .row_iter()
            .map(|r| r.norm_squared())
            .sum::<f64>()
            / (4.0 * data.samples() as f64);
        Ok(LogisticProblem { data, lipschitz })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn margins(&self, x: &[f64]) -> Vec<f64> {
        let xv = DVectorView::from_slice(x, self.data.dim());
        let z = &self.data.features * xv;
        z.iter()
            .zip(&self.data.labels)
            .map(|(z, y)| y * z)
            .collect()
    }
}

impl Problem for LogisticProblem {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let m = self.margins(x);
        m.iter().map(|&t| softplus(-t)).sum::<f64>() / m.len() as f64
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.margins(x);
        let nf = m.len() as f64;
        // d/dx log(1 + e^{-y aᵀx}) = -y σ(-y aᵀx) a
        let coef: Vec<f64> = m
            .iter()
            .zip(&self.data.labels)
            .map(|(&t, y)| -y * sigmoid(-t) / nf)
            .collect();
        let c = nalgebra::DVector::from_vec(coef);
        let g = self.data.features.tr_mul(&c);
        out.copy_from_slice(g.as_slice());
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// Fraction of samples with `sign(a_iᵀx) = y_i`; a zero score predicts +1.
pub fn classify_accuracy(x: &[f64], data: &Dataset) -> Result<f64> {
    if x.len() != data.dim() {
        return Err(Error::contract(format!(
            "weights have length {} but data has {} features",
            x.len(),
            data.dim()
        )));
    }
    if data.samples() == 0 {
        return Ok(0.0);
    }
    let xv = DVectorView::from_slice(x, data.dim());
    let scores = &data.features * xv;
    let hits = scores
        .iter()
        .zip(&data.labels)
        .filter(|(s, y)| {
            let pred = if **s >= 0.0 { 1.0 } else { -1.0 };
            pred == **y
        })
        .count();
    Ok(hits as f64 / data.samples() as f64)
}

/// Synthetic linearly separable data: standard normal features, a hidden
/// weight vector supported on the first `informative` features, and
/// `y = sign(aᵀw)`. Samples with `|aᵀw| < margin · |w|` are redrawn.
///
/// The hidden weights are normal draws shifted to sum to zero. Min-max
/// normalization adds the offset `Σ min_j w_j` to every score, and with
/// identically distributed features that offset vanishes only when
/// `Σ w_j = 0`; the data then stays separable by a classifier without an
/// intercept after normalization.
pub fn gen_separable_classification(
    features: usize,
    informative: usize,
    samples: usize,
    margin: f64,
    seed: u64,
) -> Result<(Dataset, Vec<f64>)> {
    if informative == 0 || informative > features {
        return Err(Error::contract(
            "informative features must lie in [1, features]",
        ));
    }
    let mut rng = SeededRng::new(derive_seed(&[seed, 0xC1A5]));
    let mut w = vec![0.0; features];
    for wi in w.iter_mut().take(informative) {
        *wi = rng.normal();
    }
    if informative > 1 {
        let mean = w[..informative].iter().sum::<f64>() / informative as f64;
        for wi in w.iter_mut().take(informative) {
            *wi -= mean;
        }
    }
    let wn = crate::vector::norm(&w);
    let mut data = Vec::with_capacity(samples * features);
    let mut labels = Vec::with_capacity(samples);
    while labels.len() < samples {
        let row: Vec<f64> = rng.normal_vec(features);
        let score = crate::vector::dot(&row, &w);
        if score.abs() < margin * wn {
            continue;
        }
        labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
        data.extend(row);
    }
    let ds = Dataset::new(DMatrix::from_row_slice(samples, features, &data), labels)?;
    Ok((ds, w))
}
