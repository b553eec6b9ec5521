//! Sparse vector technique (SVT) toolkit.
//!
//! The crate implements SVT with exponential query noise, a numerically
//! optimized threshold correction term and an appending strategy for
//! negatively answered queries, next to the classic Laplace, Gaussian and
//! Gumbel baselines. Around the mechanism sit the pieces needed to evaluate
//! it on top-c selection tasks:
//!
//! * [`noise`]: calibrated noise laws with pdf/cdf/quantile and seeded sampling.
//! * [`svt`]: the mechanism itself, including RESAMPLE and APPEND options.
//! * [`correction`]: discretize/convolve/argmax engine for the correction term,
//!   plus the closed-form success probability for the Laplace/exponential pair.
//! * [`allocation`]: budget split between threshold and query noise.
//! * [`metrics`]: NCR, F1 and an empirical (alpha, beta)-accuracy estimator.
//! * [`data`]: synthetic generators, transaction-file ingestion, scores files.
//! * [`experiment`]: seeded sweeps and CSV emission used by the `svt` binary.

pub mod allocation;
pub mod correction;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod noise;
pub mod seed;
pub mod svt;

pub use allocation::{BudgetSplit, NoiseFamily};
pub use correction::{CorrectionQuery, DiscretePmf};
pub use data::ScoredDataset;
pub use error::{Error, Result};
pub use metrics::GroundTruth;
pub use noise::{NoiseDist, NoiseKind};
pub use svt::{HaltReason, QueryStream, SvtConfig, SvtOutcome, Variant, Verdict};
