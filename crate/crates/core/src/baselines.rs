//! Comparison methods: textbook Adagrad and deterministic Frank-Wolfe over
//! the `T`-support-norm ball.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::driver::{Optimizer, StepReport};
use crate::error::{Error, Result};
use crate::prunadag::select_relevant;
use crate::record::DescentTerms;
use crate::vector::{masked_norm, norm};

/// One Adagrad update: `w_i = sqrt(w_prev_i² + g_i²)`, `x_i -= g_i / w_i`.
pub fn adagrad_step(x: &[f64], g: &[f64], w_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w: Vec<f64> = w_prev
        .iter()
        .zip(g)
        .map(|(w, gi)| (w * w + gi * gi).sqrt())
        .collect();
    let x_next = x
        .iter()
        .zip(g)
        .zip(&w)
        .map(|((xi, gi), wi)| xi - gi / wi)
        .collect();
    (x_next, w)
}

#[derive(Clone, Debug)]
pub struct Adagrad {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Adagrad {
    pub fn new(x0: Vec<f64>, varsigma: f64) -> Result<Self> {
        if !(varsigma > 0.0) {
            return Err(Error::contract("varsigma must be positive"));
        }
        let w = vec![varsigma.sqrt(); x0.len()];
        Ok(Adagrad { x: x0, w })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }
}

impl Optimizer for Adagrad {
    fn x(&self) -> &[f64] {
        &self.x
    }

    fn step(&mut self, g: &[f64]) -> StepReport {
        let (x, w) = adagrad_step(&self.x, g, &self.w);
        let mut descent = DescentTerms::default();
        for (gi, wi) in g.iter().zip(&w) {
            descent.opt_gain += gi * gi / wi;
            descent.opt_curvature += gi * gi / (wi * wi);
        }
        self.x = x;
        self.w = w;
        let n = self.x.len();
        StepReport {
            card_relevant: n,
            card_acceptable: 0,
            card_decreasable: 0,
            grad_norm_opt: norm(g),
            descent: Some(descent),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwRate {
    /// `eta_k = 1/(k+1)`.
    Linear,
    /// `eta_k = min(beta |g|_R / |v - x|, 1)`.
    Rescaled { beta: f64 },
}

impl fmt::Display for FwRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FwRate::Linear => f.write_str("linear"),
            FwRate::Rescaled { beta } => write!(f, "rescaled(beta={beta})"),
        }
    }
}

impl FromStr for FwRate {
    type Err = Error;

    /// Accepts `linear` or `rescaled:<beta>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "linear" {
            return Ok(FwRate::Linear);
        }
        if let Some(beta) = s.strip_prefix("rescaled:") {
            let beta = beta
                .parse()
                .map_err(|_| Error::contract(format!("bad beta `{beta}`")))?;
            return Ok(FwRate::Rescaled { beta });
        }
        Err(Error::contract(format!("unknown Frank-Wolfe rate `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FwConfig {
    pub relevant: usize,
    pub tau: f64,
    pub rate: FwRate,
}

impl FwConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::contract("tau must be positive"));
        }
        if self.relevant < 1 || self.relevant > n {
            return Err(Error::contract(format!(
                "support size {} outside [1, {n}]",
                self.relevant
            )));
        }
        if let FwRate::Rescaled { beta } = self.rate {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::contract("beta must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Linear minimization oracle over the `T`-support-norm ball of radius
/// `tau`: `-tau g_R / |g_R|` on the top-`T` gradient indices, zero
/// elsewhere. Returns the zero vector when `|g_R| = 0`.
pub fn fw_lmo(g: &[f64], cfg: &FwConfig) -> Result<Vec<f64>> {
    let r = select_relevant(g, cfg.relevant)?;
    let gr = masked_norm(g, &r)?;
    let mut v = vec![0.0; g.len()];
    if gr > 0.0 {
        for i in r.iter() {
            v[i] = -cfg.tau * g[i] / gr;
        }
    }
    Ok(v)
}

/// Step size for iteration `k`. `grad_norm_r` is `|g|_R` and `gap` is
/// `|v - x|`; a zero gap gives `eta = 1`.
pub fn fw_rate(rate: FwRate, k: usize, grad_norm_r: f64, gap: f64) -> f64 {
    match rate {
        FwRate::Linear => 1.0 / (k as f64 + 1.0),
        FwRate::Rescaled { beta } => {
            if gap > 0.0 {
                (beta * grad_norm_r / gap).min(1.0)
            } else {
                1.0
            }
        }
    }
}

/// `x + eta_k (v_k - x)`.
pub fn fw_step(x: &[f64], g: &[f64], k: usize, cfg: &FwConfig) -> Result<Vec<f64>> {
    let v = fw_lmo(g, cfg)?;
    let r = select_relevant(g, cfg.relevant)?;
    let gr = masked_norm(g, &r)?;
    let gap = x
        .iter()
        .zip(&v)
        .map(|(xi, vi)| (vi - xi).powi(2))
        .sum::<f64>()
        .sqrt();
    let eta = fw_rate(cfg.rate, k, gr, gap);
    Ok(x.iter()
        .zip(&v)
        .map(|(xi, vi)| xi + eta * (vi - xi))
        .collect())
}

#[derive(Clone, Debug)]
pub struct FrankWolfe {
    x: Vec<f64>,
    k: usize,
    cfg: FwConfig,
}

impl FrankWolfe {
    pub fn new(x0: Vec<f64>, cfg: FwConfig) -> Result<Self> {
        cfg.validate(x0.len())?;
        Ok(FrankWolfe { x: x0, k: 0, cfg })
    }
}

impl Optimizer for FrankWolfe {
    fn x(&self) -> &[f64] {
        &self.x
    }

    fn step(&mut self, g: &[f64]) -> StepReport {
        let n = self.x.len();
        let t = self.cfg.relevant;
        let r = select_relevant(g, t).expect("support size validated");
        let gr = masked_norm(g, &r).expect("indices in range");
        self.x = fw_step(&self.x, g, self.k, &self.cfg).expect("support size validated");
        self.k += 1;
        StepReport {
            card_relevant: t,
            card_acceptable: 0,
            card_decreasable: n - t,
            grad_norm_opt: gr,
            descent: None,
        }
    }
}
