//! Splitting a total budget between threshold noise (`eps1`) and query noise
//! (`eps2 = w * eps1`) so that the variance of the private comparison
//! `q + N2 >= T + N1` is minimal.
//!
//! For a comparison variance of the form `A (1+w)^2 + C ((1+w)/w)^2`
//! (scaled by `(sensitivity/eps)^2`) the minimizer is `w = (C/A)^(1/3)`,
//! which yields the per-family closed forms in [`optimal_w`].

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};
use crate::noise::gaussian_kappa;

/// Law of the query noise; the threshold noise is Laplace for every family
/// except `Gaussian`, which perturbs the threshold with Gaussian noise too.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseFamily {
    Exponential,
    Gumbel,
    Laplace,
    /// Gaussian threshold and query noise calibrated with failure rate `delta_dp`.
    Gaussian { delta_dp: f64 },
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Exponential => "exp",
            NoiseFamily::Gumbel => "gum",
            NoiseFamily::Laplace => "lap",
            NoiseFamily::Gaussian { .. } => "gau",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub eps_total: f64,
    pub w: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub family: NoiseFamily,
    pub monotonic: bool,
}

/// Ratio `eps2 / eps1` minimizing the comparison variance.
pub fn optimal_w(family: NoiseFamily, c: u32, monotonic: bool) -> f64 {
    let c = f64::from(c);
    let base = match (family, monotonic) {
        (NoiseFamily::Exponential, false) => SQRT_2 * c,
        (NoiseFamily::Gumbel, false) => PI * c / 3f64.sqrt(),
        (NoiseFamily::Laplace | NoiseFamily::Gaussian { .. }, false) => 2.0 * c,
        (NoiseFamily::Exponential, true) => c / SQRT_2,
        (NoiseFamily::Gumbel, true) => PI * c / (2.0 * 3f64.sqrt()),
        (NoiseFamily::Laplace | NoiseFamily::Gaussian { .. }, true) => c,
    };
    base.powf(2.0 / 3.0)
}

/// Splits `eps_total` with an explicit ratio `w`.
pub fn split_with_w(
    eps_total: f64,
    w: f64,
    family: NoiseFamily,
    monotonic: bool,
) -> Result<BudgetSplit> {
    ensure_positive("eps_total", eps_total)?;
    ensure_positive("w", w)?;
    let eps1 = eps_total / (1.0 + w);
    Ok(BudgetSplit {
        eps_total,
        w,
        eps1,
        eps2: eps_total - eps1,
        family,
        monotonic,
    })
}

/// Splits `eps_total` at the variance-optimal ratio for `family`.
pub fn split(eps_total: f64, family: NoiseFamily, c: u32, monotonic: bool) -> Result<BudgetSplit> {
    split_with_w(eps_total, optimal_w(family, c, monotonic), family, monotonic)
}

/// Variance of `N2 - N1` in the private comparison.
///
/// Query noise scale is `2 c sensitivity / eps2` (`c sensitivity / eps2` when
/// `monotonic`). Gaussian scales carry the factor
/// [`gaussian_kappa`]`(delta_dp)`.
pub fn comparison_variance(
    family: NoiseFamily,
    eps1: f64,
    eps2: f64,
    c: u32,
    sensitivity: f64,
    monotonic: bool,
) -> Result<f64> {
    ensure_positive("eps1", eps1)?;
    ensure_positive("eps2", eps2)?;
    ensure_positive("sensitivity", sensitivity)?;
    let spread = if monotonic { 1.0 } else { 2.0 };
    let threshold_scale = sensitivity / eps1;
    let query_scale = spread * f64::from(c) * sensitivity / eps2;
    Ok(match family {
        NoiseFamily::Exponential => 2.0 * threshold_scale.powi(2) + query_scale.powi(2),
        NoiseFamily::Gumbel => 2.0 * threshold_scale.powi(2) + PI * PI / 6.0 * query_scale.powi(2),
        NoiseFamily::Laplace => 2.0 * threshold_scale.powi(2) + 2.0 * query_scale.powi(2),
        NoiseFamily::Gaussian { delta_dp } => {
            let kappa = gaussian_kappa(delta_dp)?;
            (kappa * threshold_scale).powi(2) + (kappa * query_scale).powi(2)
        }
    })
}

/// Comparison variance at the optimal split of `eps_total`.
pub fn optimal_variance(
    family: NoiseFamily,
    eps_total: f64,
    c: u32,
    sensitivity: f64,
    monotonic: bool,
) -> Result<f64> {
    let s = split(eps_total, family, c, monotonic)?;
    comparison_variance(family, s.eps1, s.eps2, c, sensitivity, monotonic)
}
