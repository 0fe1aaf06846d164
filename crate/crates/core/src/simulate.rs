//! Heavy-tailed D-valued increments and the partial-sum process
//! `S_n(t) = a_n^{-1} Σ_{i ≤ [nt]} X_i`, plus Hill and two-sample KS statistics.
//!
//! Replicate `j` of an ensemble draws from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `j`, so ensembles are reproducible and can be generated
//! in parallel with output identical to a serial run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, Pareto};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cadlag::StepFunction;
use crate::diagnostics::PathEnsemble;
use crate::error::{validation, Result};
use crate::nested::NestedPath;

fn default_sign_balance() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Tail index in `(0, 2)`.
    pub alpha: f64,
    /// Time resolution.
    pub n: usize,
    /// Number of replicates.
    pub m: usize,
    pub seed: u64,
    /// Probability of a positive sign.
    #[serde(default = "default_sign_balance")]
    pub sign_balance: f64,
}

impl SimConfig {
    pub fn new(alpha: f64, n: usize, m: usize, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            alpha,
            n,
            m,
            seed,
            sign_balance: 0.5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(validation(format!(
                "alpha must lie in (0,2), got {}",
                self.alpha
            )));
        }
        if self.n == 0 || self.m == 0 {
            return Err(validation("n and m must be positive"));
        }
        if !(0.0..=1.0).contains(&self.sign_balance) {
            return Err(validation(format!(
                "sign_balance must lie in [0,1], got {}",
                self.sign_balance
            )));
        }
        Ok(())
    }

    /// `a_n = n^{1/α}`.
    pub fn normalization(&self) -> f64 {
        (self.n as f64).powf(1.0 / self.alpha)
    }

    /// Generator for replicate `j`.
    pub fn stream(&self, j: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(j);
        rng
    }
}

/// Jump location and signed height of one increment.
fn draw(cfg: &SimConfig, rng: &mut impl Rng) -> (f64, f64) {
    let xi = Pareto::new(1.0, cfg.alpha)
        .expect("validated alpha")
        .sample(rng);
    let u: f64 = rng.sample(Open01);
    let sign = if rng.random_bool(cfg.sign_balance) {
        1.0
    } else {
        -1.0
    };
    (u, sign * xi)
}

/// `X = ε·ξ·1_{[U,1]}` with `ξ ~ Pareto(α)` on `[1, ∞)`, `U ~ Uniform(0,1)`.
pub fn sample_increment(cfg: &SimConfig, rng: &mut impl Rng) -> StepFunction {
    let (u, h) = draw(cfg, rng);
    StepFunction::indicator(u, h).expect("u lies in (0,1)")
}

/// One path of `S_n` with t-breakpoints `k/n`, `k = 1..n`.
pub fn partial_sum_path(cfg: &SimConfig, rng: &mut impl Rng) -> NestedPath {
    let inv = 1.0 / cfg.normalization();
    let mut raw = StepFunction::zero();
    let mut segments = Vec::with_capacity(cfg.n + 1);
    segments.push(StepFunction::zero());
    for _ in 0..cfg.n {
        let x = sample_increment(cfg, rng);
        raw = raw.add(&x);
        segments.push(raw.scale(inv));
    }
    let bps = (1..=cfg.n).map(|k| k as f64 / cfg.n as f64).collect();
    NestedPath::new(bps, segments).expect("valid by construction")
}

/// `S_n(1, 1)` from the same draws as [`partial_sum_path`], without building the path.
pub fn terminal_value(cfg: &SimConfig, rng: &mut impl Rng) -> f64 {
    let inv = 1.0 / cfg.normalization();
    let mut sum = 0.0;
    for _ in 0..cfg.n {
        sum += draw(cfg, rng).1;
    }
    sum * inv
}

/// `m` replicates of [`partial_sum_path`].
pub fn make_ensemble(cfg: &SimConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    let paths = (0..cfg.m as u64)
        .into_par_iter()
        .map(|j| partial_sum_path(cfg, &mut cfg.stream(j)))
        .collect();
    PathEnsemble::new(cfg.n, cfg.seed, paths)
}

/// `S_n(1, 1)` for each of the `m` replicates of [`make_ensemble`].
pub fn terminal_values(cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok((0..cfg.m as u64)
        .into_par_iter()
        .map(|j| terminal_value(cfg, &mut cfg.stream(j)))
        .collect())
}

/// Hill estimator of the tail index from the `k` largest observations:
/// the inverse mean of `ln(X_(i) / X_(k+1))`, `i = 1..k`.
pub fn hill_estimate(sample: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k >= sample.len() {
        return Err(validation(format!(
            "k must satisfy 1 <= k < {}, got {k}",
            sample.len()
        )));
    }
    if let Some(v) = sample.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(validation(format!(
            "Hill estimator needs positive values, got {v}"
        )));
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let threshold = s[k].ln();
    let mean = s[..k].iter().map(|v| v.ln() - threshold).sum::<f64>() / k as f64;
    Ok(1.0 / mean)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_u |F_a(u) - F_b(u)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(validation("KS statistic needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(validation("KS statistic got NaN"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = 0.0f64;
    while i < a.len() && j < b.len() {
        let u = a[i].min(b[j]);
        while i < a.len() && a[i] == u {
            i += 1;
        }
        while j < b.len() && b[j] == u {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(best)
}
