//! Calibrated noise laws used for threshold and query perturbation.
//!
//! All four laws are sampled through their inverse cdf from a single stream of
//! uniforms on the open unit interval, so a seed fully determines the draws
//! regardless of the law being sampled.

use std::f64::consts::{LN_2, PI, SQRT_2};

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{ensure_positive, Error, Result};

/// Euler–Mascheroni constant; the mean of a standard Gumbel law.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Laplace,
    Exponential,
    Gaussian,
    Gumbel,
}

/// A noise law with its scale.
///
/// `scale` is the Laplace `b`, the exponential mean `1/lambda`, the Gaussian
/// standard deviation or the Gumbel `beta`, depending on `kind`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseDist {
    kind: NoiseKind,
    scale: f64,
    location: f64,
}

impl NoiseDist {
    pub fn new(kind: NoiseKind, scale: f64) -> Result<Self> {
        ensure_positive("scale", scale)?;
        Ok(Self {
            kind,
            scale,
            location: 0.0,
        })
    }

    pub fn laplace(b: f64) -> Result<Self> {
        Self::new(NoiseKind::Laplace, b)
    }

    /// Exponential law parameterized by its mean `1/lambda`.
    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(NoiseKind::Exponential, mean)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, sigma)
    }

    pub fn gumbel(beta: f64) -> Result<Self> {
        Self::new(NoiseKind::Gumbel, beta)
    }

    pub fn with_location(mut self, location: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::invalid("location", "must be finite"));
        }
        self.location = location;
        Ok(self)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    /// Rate `lambda` of an exponential law, `None` for the other kinds.
    pub fn rate(&self) -> Option<f64> {
        (self.kind == NoiseKind::Exponential).then(|| 1.0 / self.scale)
    }

    fn standardize(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = self.standardize(x);
        let s = self.scale;
        match self.kind {
            NoiseKind::Laplace => (-z.abs()).exp() / (2.0 * s),
            NoiseKind::Exponential => {
                if z < 0.0 {
                    0.0
                } else {
                    (-z).exp() / s
                }
            }
            NoiseKind::Gaussian => (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt()),
            NoiseKind::Gumbel => (-z - (-z).exp()).exp() / s,
        }
    }

    /// Natural log of the density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = self.standardize(x);
        let ln_s = self.scale.ln();
        match self.kind {
            NoiseKind::Laplace => -z.abs() - LN_2 - ln_s,
            NoiseKind::Exponential => {
                if z < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -z - ln_s
                }
            }
            NoiseKind::Gaussian => -0.5 * z * z - ln_s - 0.5 * (2.0 * PI).ln(),
            NoiseKind::Gumbel => -z - (-z).exp() - ln_s,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        let z = self.standardize(x);
        match self.kind {
            NoiseKind::Laplace => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            NoiseKind::Exponential => {
                if z <= 0.0 {
                    0.0
                } else {
                    -(-z).exp_m1()
                }
            }
            NoiseKind::Gaussian => 0.5 * erfc(-z / SQRT_2),
            NoiseKind::Gumbel => (-(-z).exp()).exp(),
        }
    }

    /// Survival function `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 1.0;
        }
        if x == f64::INFINITY {
            return 0.0;
        }
        let z = self.standardize(x);
        match self.kind {
            NoiseKind::Laplace => {
                if z < 0.0 {
                    1.0 - 0.5 * z.exp()
                } else {
                    0.5 * (-z).exp()
                }
            }
            NoiseKind::Exponential => {
                if z <= 0.0 {
                    1.0
                } else {
                    (-z).exp()
                }
            }
            NoiseKind::Gaussian => 0.5 * erfc(z / SQRT_2),
            NoiseKind::Gumbel => -(-(-z).exp()).exp_m1(),
        }
    }

    /// `ln(1 - cdf(x))`; `-inf` where the cdf is exactly one in floating point.
    pub fn ln_sf(&self, x: f64) -> f64 {
        let z = self.standardize(x);
        match self.kind {
            NoiseKind::Laplace => {
                if z < 0.0 {
                    (-0.5 * z.exp()).ln_1p()
                } else {
                    -LN_2 - z
                }
            }
            NoiseKind::Exponential => -z.max(0.0),
            NoiseKind::Gaussian | NoiseKind::Gumbel => self.sf(x).ln(),
        }
    }

    /// Inverse cdf on the open unit interval.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let s = self.scale;
        let z = match self.kind {
            NoiseKind::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
            NoiseKind::Exponential => -(-p).ln_1p(),
            NoiseKind::Gaussian => {
                let mut z = -SQRT_2 * erfc_inv(2.0 * p);
                // one Newton step on the cdf tightens erfc_inv's approximation
                let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
                if density > 0.0 {
                    z -= (0.5 * erfc(-z / SQRT_2) - p) / density;
                }
                z
            }
            NoiseKind::Gumbel => -(-p.ln()).ln(),
        };
        self.location + s * z
    }

    pub fn mean(&self) -> f64 {
        self.location
            + match self.kind {
                NoiseKind::Laplace | NoiseKind::Gaussian => 0.0,
                NoiseKind::Exponential => self.scale,
                NoiseKind::Gumbel => EULER_GAMMA * self.scale,
            }
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.scale * self.scale;
        match self.kind {
            NoiseKind::Laplace => 2.0 * s2,
            NoiseKind::Exponential | NoiseKind::Gaussian => s2,
            NoiseKind::Gumbel => PI * PI * s2 / 6.0,
        }
    }

    /// Maps a uniform draw on (0, 1) to a draw from this law.
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.quantile_unchecked(u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.from_uniform(u)
    }
}

/// Result of a Lipschitz-condition scan over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzCheck {
    /// Largest `|lhs| - k * |shift|` seen; at most zero when the condition holds.
    pub max_violation: f64,
    /// Grid points where the log term was undefined and therefore skipped.
    pub skipped: Vec<f64>,
}

fn scan(
    grid: &[f64],
    shift: f64,
    k: f64,
    log_term: impl Fn(f64) -> f64,
) -> Result<LipschitzCheck> {
    if shift == 0.0 || !shift.is_finite() {
        return Err(Error::invalid("shift", "must be finite and nonzero"));
    }
    ensure_positive("k", k)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut skipped = Vec::new();
    for &x in grid {
        let (a, b) = (log_term(x), log_term(x + shift));
        if !a.is_finite() || !b.is_finite() {
            skipped.push(x);
            continue;
        }
        max_violation = max_violation.max((a - b).abs() - k * shift.abs());
    }
    Ok(LipschitzCheck {
        max_violation,
        skipped,
    })
}

/// Checks `|ln(1-F(x)) - ln(1-F(x+shift))| <= k2 |shift|` over `grid`.
///
/// This is the condition a query-noise law must meet for SVT to remain
/// private. Diagnostic only: the mechanisms hard-code eligible pairings.
pub fn lipschitz_tail_check(
    dist: &NoiseDist,
    k2: f64,
    shift: f64,
    grid: &[f64],
) -> Result<LipschitzCheck> {
    scan(grid, shift, k2, |x| dist.ln_sf(x))
}

/// Checks `|ln f(x) - ln f(x+shift)| <= k1 |shift|` over `grid`, the
/// log-density condition required of threshold noise.
pub fn lipschitz_density_check(
    dist: &NoiseDist,
    k1: f64,
    shift: f64,
    grid: &[f64],
) -> Result<LipschitzCheck> {
    scan(grid, shift, k1, |x| dist.ln_pdf(x))
}

/// Gaussian-mechanism multiplier `sqrt(2 ln(1.25/delta))`, so that
/// `sigma = kappa * sensitivity / epsilon`.
pub fn gaussian_kappa(delta_dp: f64) -> Result<f64> {
    if !(delta_dp > 0.0 && delta_dp < 1.0) {
        return Err(Error::invalid("delta_dp", format!("must lie in (0, 1), got {delta_dp}")));
    }
    Ok((2.0 * (1.25 / delta_dp).ln()).sqrt())
}
