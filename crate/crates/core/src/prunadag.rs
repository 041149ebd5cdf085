//! The prunAdag optimizer.
//!
//! Each iteration splits the coordinates into an *optimisable* set, which
//! takes an Adagrad step `-g_i / w^O_i`, and a *decreasable* set, whose
//! magnitudes are shrunk by a step bounded by `|x_i| / w^D_i`. The
//! optimisable set is the `T` largest gradient components (the relevant set
//! `R`) plus the irrelevant components whose Adagrad step already moves
//! them toward zero by an amount within `[a_i, b_i]` (the acceptable set
//! `A`). The variants differ only in how `a_i` and `b_i` are chosen:
//!
//! | variant | `a_i`                                   | `b_i`   |
//! |---------|-----------------------------------------|---------|
//! | V1      | `|x_i|/(k+1) · |g|_R / |x|_S`           | `+inf`  |
//! | V2      | `|x_i|/(k+1)`                           | `+inf`  |
//! | V3      | `|x_i|/(k+1) · |g|_R / |x|_S`           | `|x_i|` |
//! | V4      | `|x_i|/(k+1)`                           | `|x_i|` |
//!
//! `RelevantOnly` keeps `A` empty and uses the V3 lower bounds for the
//! decreasable step.
//!
//! Weights start at `sqrt(varsigma)` so that after iteration `k`
//! `(w^O_i)² = varsigma + Σ_{j<=k, i∈O_j} g_{i,j}²` and
//! `(w^D_i)² = varsigma + Σ_{j<=k, i∈D_j} x_{i,j}²` hold exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::driver::{Optimizer, StepReport};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::record::DescentTerms;
use crate::vector::{masked_norm, same_nonzero_sign, sign, IndexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    V1,
    V2,
    V3,
    V4,
    RelevantOnly,
}

impl Variant {
    pub const VERSIONS: [Variant; 4] = [Variant::V1, Variant::V2, Variant::V3, Variant::V4];

    /// V1 and V3 rescale the lower bound by `|g|_R / |x|_S`.
    pub fn rescales_lower_bound(self) -> bool {
        matches!(self, Variant::V1 | Variant::V3 | Variant::RelevantOnly)
    }

    /// V3 and V4 cap the acceptable Adagrad step at `|x_i|`.
    pub fn caps_at_magnitude(self) -> bool {
        matches!(self, Variant::V3 | Variant::V4 | Variant::RelevantOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::V1 => "V1",
            Variant::V2 => "V2",
            Variant::V3 => "V3",
            Variant::V4 => "V4",
            Variant::RelevantOnly => "RelevantOnly",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "v1" | "1" => Ok(Variant::V1),
            "v2" | "2" => Ok(Variant::V2),
            "v3" | "3" => Ok(Variant::V3),
            "v4" | "4" => Ok(Variant::V4),
            "relevantonly" | "relevant" => Ok(Variant::RelevantOnly),
            _ => Err(Error::contract(format!("unknown prunAdag variant `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunAdagConfig {
    /// Target size of the relevant set.
    pub relevant: usize,
    pub varsigma: f64,
    pub variant: Variant,
}

impl PrunAdagConfig {
    /// `T = ceil(n/10)` (at least 2, at most `n`) and `varsigma = 0.01`.
    pub fn with_defaults(n: usize, variant: Variant) -> Self {
        PrunAdagConfig {
            relevant: default_relevant(n),
            varsigma: 0.01,
            variant,
        }
    }
}

pub fn default_relevant(n: usize) -> usize {
    n.div_ceil(10).max(2).min(n)
}

/// Indices of the `t` largest `|g_i|`, ties broken toward the lowest index.
pub fn select_relevant(g: &[f64], t: usize) -> Result<IndexSet> {
    let n = g.len();
    if t < 1 || t > n {
        return Err(Error::contract(format!(
            "relevant-set size {t} outside [1, {n}]"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if t < n {
        let by_magnitude = |&i: &usize, &j: &usize| -> Ordering {
            g[j].abs()
                .partial_cmp(&g[i].abs())
                .unwrap_or(Ordering::Equal)
                .then(i.cmp(&j))
        };
        idx.select_nth_unstable_by(t - 1, by_magnitude);
        idx.truncate(t);
    }
    Ok(IndexSet::from_unsorted(idx))
}

/// `sqrt((w^O_i)² + g_i²)` for every coordinate.
pub fn tentative_opt_weights(w_opt_prev: &[f64], g: &[f64]) -> Vec<f64> {
    w_opt_prev
        .iter()
        .zip(g)
        .map(|(w, gi)| (w * w + gi * gi).sqrt())
        .collect()
}

/// Irrelevant indices whose iterate and gradient share a nonzero sign.
///
/// This is computed before classification and stands in for the
/// sign-matched decreasable set in the V1/V3 rescaling factor.
pub fn sign_matched_irrelevant(x: &[f64], g: &[f64], relevant: &IndexSet) -> IndexSet {
    let in_r = relevant.to_mask(x.len());
    (0..x.len())
        .filter(|&i| !in_r[i] && same_nonzero_sign(x[i], g[i]))
        .collect()
}

/// Lower and upper bounding sequences. Entries for relevant indices are
/// unused and hold `0` / `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn bounding_sequences(
    variant: Variant,
    k: usize,
    x: &[f64],
    g: &[f64],
    relevant: &IndexSet,
    sign_matched: &IndexSet,
) -> Bounds {
    let n = x.len();
    let scale = if variant.rescales_lower_bound() {
        let xs = masked_norm(x, sign_matched).expect("sign-matched set within range");
        if xs > 0.0 {
            masked_norm(g, relevant).expect("relevant set within range") / xs
        } else {
            1.0
        }
    } else {
        1.0
    };
    let denom = (k + 1) as f64;
    let in_r = relevant.to_mask(n);
    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    for i in (0..n).filter(|&i| !in_r[i]) {
        lower[i] = x[i].abs() / denom * scale;
        if variant.caps_at_magnitude() {
            upper[i] = x[i].abs();
        }
    }
    Bounds { lower, upper }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub relevant: IndexSet,
    pub acceptable: IndexSet,
    pub optimisable: IndexSet,
    pub decreasable: IndexSet,
    /// Decreasable indices with `sign(x_i) = sign(g_i) != 0`.
    pub sign_matched: IndexSet,
}

pub fn classify(
    variant: Variant,
    x: &[f64],
    g: &[f64],
    tentative: &[f64],
    relevant: IndexSet,
    bounds: &Bounds,
) -> Classification {
    let n = x.len();
    let in_r = relevant.to_mask(n);
    let acceptable: IndexSet = if variant == Variant::RelevantOnly {
        IndexSet::empty()
    } else {
        (0..n)
            .filter(|&i| {
                if in_r[i] || !same_nonzero_sign(x[i], g[i]) {
                    return false;
                }
                let r = (g[i] / tentative[i]).abs();
                bounds.lower[i] <= r && r <= bounds.upper[i]
            })
            .collect()
    };
    let optimisable = relevant.union(&acceptable);
    let decreasable = optimisable.complement(n);
    let sign_matched = decreasable
        .iter()
        .filter(|&i| same_nonzero_sign(x[i], g[i]))
        .collect();
    Classification {
        relevant,
        acceptable,
        optimisable,
        decreasable,
        sign_matched,
    }
}

/// `-g_i / w_i` on the optimisable set, zero elsewhere.
pub fn optimisable_step(g: &[f64], w_opt: &[f64], optimisable: &IndexSet) -> Vec<f64> {
    let mut s = vec![0.0; g.len()];
    for i in optimisable.iter() {
        s[i] = -g[i] / w_opt[i];
    }
    s
}

/// The decreasable step and its trust-region radii `s^L`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreasableStep {
    /// Nonzero only on the sign-matched decreasable indices.
    pub step: Vec<f64>,
    /// `-x_i / w^D_i` on the decreasable set, zero elsewhere.
    pub limit: Vec<f64>,
}

/// Shrinks each sign-matched decreasable component by
/// `min(a_i, |x_i| / w^D_i)`; other decreasable components do not move.
///
/// `w_dec` must already include the current iteration's `x_i²`.
///
/// # Panics
///
/// If the result violates `|s_i| <= |s^L_i|` or `Σ_D g_i s_i <= 0`; both
/// hold by construction, so a failure indicates a bug.
pub fn decreasable_step(
    x: &[f64],
    g: &[f64],
    w_dec: &[f64],
    cls: &Classification,
    lower: &[f64],
) -> DecreasableStep {
    let n = x.len();
    let mut step = vec![0.0; n];
    let mut limit = vec![0.0; n];
    for i in cls.decreasable.iter() {
        limit[i] = -x[i] / w_dec[i];
    }
    for i in cls.sign_matched.iter() {
        step[i] = -f64::from(sign(x[i])) * lower[i].min(limit[i].abs());
    }
    let mut inner = 0.0;
    for i in cls.decreasable.iter() {
        assert!(
            step[i].abs() <= limit[i].abs(),
            "decreasable step exceeds its radius at index {i}"
        );
        inner += g[i] * step[i];
    }
    assert!(inner <= 0.0, "decreasable step is not a descent direction");
    DecreasableStep { step, limit }
}

/// Everything computed during one iteration, for tests and verification.
#[derive(Clone, Debug)]
pub struct IterationDetail {
    pub k: usize,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub tentative: Vec<f64>,
    pub bounds: Bounds,
    pub classification: Classification,
    pub step: Vec<f64>,
    pub limit: Vec<f64>,
    pub descent: DescentTerms,
}

#[derive(Clone, Debug)]
pub struct PrunAdag {
    x: Vec<f64>,
    w_opt: Vec<f64>,
    w_dec: Vec<f64>,
    k: usize,
    cfg: PrunAdagConfig,
}

impl PrunAdag {
    pub fn new(x0: Vec<f64>, cfg: PrunAdagConfig) -> Result<Self> {
        let n = x0.len();
        if n == 0 {
            return Err(Error::contract("empty starting point"));
        }
        if cfg.relevant < 1 || cfg.relevant > n {
            return Err(Error::contract(format!(
                "relevant-set size {} outside [1, {n}]",
                cfg.relevant
            )));
        }
        if !(cfg.varsigma > 0.0 && cfg.varsigma < 1.0) {
            return Err(Error::contract("varsigma must lie in (0, 1)"));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("starting point is not finite"));
        }
        let w0 = cfg.varsigma.sqrt();
        Ok(PrunAdag {
            x: x0,
            w_opt: vec![w0; n],
            w_dec: vec![w0; n],
            k: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &PrunAdagConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn w_opt(&self) -> &[f64] {
        &self.w_opt
    }

    pub fn w_dec(&self) -> &[f64] {
        &self.w_dec
    }

    /// Performs one full iteration from a precomputed gradient.
    pub fn step_detailed(&mut self, g: &[f64]) -> IterationDetail {
        let n = self.x.len();
        assert_eq!(g.len(), n, "gradient length mismatch");
        let variant = self.cfg.variant;

        let relevant =
            select_relevant(g, self.cfg.relevant).expect("relevant size checked in constructor");
        let tentative = tentative_opt_weights(&self.w_opt, g);
        let sign_matched = sign_matched_irrelevant(&self.x, g, &relevant);
        let bounds = bounding_sequences(variant, self.k, &self.x, g, &relevant, &sign_matched);
        let cls = classify(variant, &self.x, g, &tentative, relevant, &bounds);

        let mut step = optimisable_step(g, &tentative, &cls.optimisable);

        // Commit weights: O takes the tentative value, D accumulates x².
        for i in cls.optimisable.iter() {
            self.w_opt[i] = tentative[i];
        }
        for i in cls.decreasable.iter() {
            let xi = self.x[i];
            self.w_dec[i] = (self.w_dec[i] * self.w_dec[i] + xi * xi).sqrt();
        }

        let dec = decreasable_step(&self.x, g, &self.w_dec, &cls, &bounds.lower);
        for i in cls.decreasable.iter() {
            step[i] = dec.step[i];
        }

        let mut descent = DescentTerms::default();
        for i in cls.optimisable.iter() {
            let g2 = g[i] * g[i];
            descent.opt_gain += g2 / tentative[i];
            descent.opt_curvature += g2 / (tentative[i] * tentative[i]);
        }
        for i in cls.decreasable.iter() {
            let r = self.x[i] / self.w_dec[i];
            descent.dec_curvature += r * r;
        }

        let x_before = self.x.clone();
        for (xi, si) in self.x.iter_mut().zip(&step) {
            *xi += si;
        }
        let detail = IterationDetail {
            k: self.k,
            x: x_before,
            g: g.to_vec(),
            tentative,
            bounds,
            classification: cls,
            step,
            limit: dec.limit,
            descent,
        };
        self.k += 1;
        detail
    }

    /// Evaluates the gradient at the current iterate and performs one
    /// iteration.
    pub fn iterate<P: Problem + ?Sized>(&mut self, problem: &P) -> Result<IterationDetail> {
        let g = problem.gradient(&self.x);
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.k,
                reason: format!("gradient component {i} is not finite"),
                partial: None,
            });
        }
        Ok(self.step_detailed(&g))
    }
}

impl Optimizer for PrunAdag {
    fn x(&self) -> &[f64] {
        &self.x
    }

    fn step(&mut self, g: &[f64]) -> StepReport {
        let d = self.step_detailed(g);
        let cls = &d.classification;
        StepReport {
            card_relevant: cls.relevant.len(),
            card_acceptable: cls.acceptable.len(),
            card_decreasable: cls.decreasable.len(),
            grad_norm_opt: masked_norm(g, &cls.optimisable).unwrap_or(0.0),
            descent: Some(d.descent),
        }
    }
}
