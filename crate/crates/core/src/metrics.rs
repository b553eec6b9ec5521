//! Utility scores for a run's positive set and an empirical accuracy
//! estimator.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::{child_rng, SvtRng};
use crate::svt::{HaltReason, SvtOutcome, Verdict};

/// True ranking of a dataset: ids by score descending, ties by ascending id.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    ranked_ids: Vec<u64>,
    scores: HashMap<u64, f64>,
    threshold: f64,
    c: usize,
}

impl GroundTruth {
    pub fn new(items: impl IntoIterator<Item = (u64, f64)>, threshold: f64, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::invalid("c", "must be at least 1"));
        }
        let mut ranked: Vec<(u64, f64)> = items.into_iter().collect();
        let mut scores = HashMap::with_capacity(ranked.len());
        for &(id, s) in &ranked {
            if scores.insert(id, s).is_some() {
                return Err(Error::invalid("id", format!("duplicate id {id}")));
            }
        }
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(Self {
            ranked_ids: ranked.into_iter().map(|(id, _)| id).collect(),
            scores,
            threshold,
            c,
        })
    }

    pub fn ranked_ids(&self) -> &[u64] {
        &self.ranked_ids
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn len(&self) -> usize {
        self.ranked_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked_ids.is_empty()
    }

    pub fn score(&self, id: u64) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    /// The `c` highest-ranked ids.
    pub fn top_c(&self) -> &[u64] {
        &self.ranked_ids[..self.c.min(self.ranked_ids.len())]
    }

    /// 1-based rank of `id`.
    pub fn rank(&self, id: u64) -> Option<usize> {
        self.ranked_ids.iter().position(|&x| x == id).map(|i| i + 1)
    }
}

/// Normalized cumulative rank. An id of true rank `i <= c` whose score
/// reaches the threshold earns `c - i + 1`; everything else earns 0.
pub fn ncr(positives: &[u64], truth: &GroundTruth) -> f64 {
    let c = truth.c;
    let top: HashMap<u64, usize> = truth.top_c().iter().enumerate().map(|(i, &id)| (id, i + 1)).collect();
    let unique: HashSet<u64> = positives.iter().copied().collect();
    let earned: usize = unique
        .into_iter()
        .filter_map(|id| {
            let rank = *top.get(&id)?;
            (truth.scores[&id] >= truth.threshold).then_some(c - rank + 1)
        })
        .sum();
    earned as f64 / (c * (c + 1) / 2) as f64
}

/// `2TP / (2TP + FP + FN)` against the true top-c set.
pub fn f1(positives: &[u64], truth: &GroundTruth) -> f64 {
    let top: HashSet<u64> = truth.top_c().iter().copied().collect();
    let emitted: HashSet<u64> = positives.iter().copied().collect();
    let tp = emitted.intersection(&top).count();
    let fp = emitted.len() - tp;
    let fn_ = top.len() - tp;
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Sample mean and its standard error (sample variance with `n - 1`).
pub fn mean_stderr(values: &[f64]) -> MeanStderr {
    let n = values.len();
    if n == 0 {
        return MeanStderr {
            mean: f64::NAN,
            stderr: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    MeanStderr { mean, stderr, n }
}

/// Whether `outcome` breaks `alpha`-accuracy: a positive on a query more
/// than `alpha` below the threshold, a negative on one more than `alpha`
/// above, or a halt before every query got its first evaluation.
pub fn violates_accuracy(outcome: &SvtOutcome, alpha: f64, truth: &GroundTruth) -> bool {
    let t = truth.threshold;
    let misclassified = outcome.answers.iter().any(|a| {
        let q = truth.score(a.query_id).unwrap_or(f64::NAN);
        match a.verdict {
            Verdict::Above => q < t - alpha,
            Verdict::Below => q > t + alpha,
        }
    });
    if misclassified {
        return true;
    }
    if outcome.halt_reason == HaltReason::Exhausted {
        return false;
    }
    let seen: HashSet<u64> = outcome.answers.iter().map(|a| a.query_id).collect();
    seen.len() < truth.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub beta_hat: f64,
    pub stderr: f64,
    pub failures: u64,
    pub trials: u64,
}

/// Monte-Carlo failure rate of `runner` under [`violates_accuracy`].
///
/// Trial `i` receives its own generator derived from `(seed, i)`, so the
/// estimate does not depend on thread scheduling.
pub fn alpha_beta_estimate<F>(runner: F, alpha: f64, truth: &GroundTruth, trials: u64, seed: u64) -> Result<BetaEstimate>
where
    F: Fn(&mut SvtRng) -> Result<SvtOutcome> + Sync,
{
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let failures = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, &[i]);
            runner(&mut rng).map(|out| u64::from(violates_accuracy(&out, alpha, truth)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let beta_hat = failures as f64 / trials as f64;
    Ok(BetaEstimate {
        beta_hat,
        stderr: (beta_hat * (1.0 - beta_hat) / trials as f64).sqrt(),
        failures,
        trials,
    })
}

/// `beta` solving `alpha = 4 (ln k + ln(2/beta)) / eps`.
pub fn theorem_beta(alpha: f64, k: u32, eps: f64) -> f64 {
    2.0 * f64::from(k) * (-alpha * eps / 4.0).exp()
}

/// `alpha = 4 (ln k + ln(2/beta)) / eps`.
pub fn theorem_alpha(beta: f64, k: u32, eps: f64) -> f64 {
    4.0 * (f64::from(k).ln() + (2.0 / beta).ln()) / eps
}
