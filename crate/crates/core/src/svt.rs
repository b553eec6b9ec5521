//! The sparse vector technique.
//!
//! A single engine covers the classic mechanism and the exponential-noise
//! variant: threshold noise `rho` is drawn once (and again after every
//! positive when `resample` is set), each evaluation draws fresh query noise
//! `v`, and query `i` is answered positive iff
//! `q_i + v >= T_i + rho + r` for the active correction `r`. With `append`,
//! negatively answered queries re-enter the tail of the queue until they have
//! been evaluated `max_traverses` times.

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{BudgetSplit, NoiseFamily};
use crate::correction::{optimal_correction, CorrectionQuery, DEFAULT_MESH_COUNT, DEFAULT_TAIL_MASS};
use crate::error::{ensure_positive, Error, Result};
use crate::noise::{gaussian_kappa, NoiseDist};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Laplace threshold and query noise, no correction.
    Lap,
    /// Gaussian threshold and query noise, no correction.
    Gau,
    /// Laplace threshold noise, Gumbel query noise, mean correction.
    Gum,
    /// Exponential query noise without correction.
    ExpNoCorr,
    /// Exponential query noise corrected by its mean.
    ExpMeanCorr,
    /// Exponential query noise with the numerically optimal correction.
    ExpOptCorr,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::ExpOptCorr,
        Variant::ExpMeanCorr,
        Variant::ExpNoCorr,
        Variant::Lap,
        Variant::Gum,
        Variant::Gau,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Lap => "lap",
            Variant::Gau => "gau",
            Variant::Gum => "gum",
            Variant::ExpNoCorr => "exp-none",
            Variant::ExpMeanCorr => "exp-mean",
            Variant::ExpOptCorr => "exp-opt",
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Variant::ExpNoCorr | Variant::ExpMeanCorr | Variant::ExpOptCorr)
    }

    /// Query-noise family; Gaussian needs the failure rate.
    pub fn family(&self, gaussian_delta: f64) -> NoiseFamily {
        match self {
            Variant::Lap => NoiseFamily::Laplace,
            Variant::Gau => NoiseFamily::Gaussian {
                delta_dp: gaussian_delta,
            },
            Variant::Gum => NoiseFamily::Gumbel,
            _ => NoiseFamily::Exponential,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid("variant", format!("unknown variant `{s}`")))
    }
}

/// Every parameter of one mechanism instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvtConfig {
    pub variant: Variant,
    /// Sensitivity of every query.
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Maximum number of positive answers.
    pub c: u32,
    /// Maximum number of evaluations, re-appended ones included.
    pub k_max: u64,
    pub resample: bool,
    pub append: bool,
    /// Per-query evaluation cap when `append` is on.
    pub max_traverses: u32,
    pub monotonic: bool,
    /// Error tolerance used when optimizing the correction.
    pub alpha: f64,
    /// Expected negatives per positive used when optimizing the correction.
    pub k_est: u32,
    /// Replaces the variant's default correction when set.
    pub correction_override: Option<f64>,
    /// Failure rate of the Gaussian variant.
    pub gaussian_delta: Option<f64>,
    pub correction_mesh: usize,
    pub correction_tail: f64,
}

impl SvtConfig {
    pub fn new(variant: Variant, delta: f64, eps1: f64, eps2: f64, c: u32) -> Self {
        Self {
            variant,
            delta,
            eps1,
            eps2,
            c,
            k_max: u64::MAX,
            resample: false,
            append: false,
            max_traverses: 1,
            monotonic: false,
            alpha: 0.0,
            k_est: 1,
            correction_override: None,
            gaussian_delta: None,
            correction_mesh: DEFAULT_MESH_COUNT,
            correction_tail: DEFAULT_TAIL_MASS,
        }
    }

    pub fn from_split(variant: Variant, split: &BudgetSplit, delta: f64, c: u32) -> Self {
        Self {
            monotonic: split.monotonic,
            ..Self::new(variant, delta, split.eps1, split.eps2, c)
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("delta", self.delta)?;
        ensure_positive("eps1", self.eps1)?;
        ensure_positive("eps2", self.eps2)?;
        if self.c == 0 {
            return Err(Error::invalid("c", "must be at least 1"));
        }
        if self.k_max == 0 {
            return Err(Error::invalid("k_max", "must be at least 1"));
        }
        if self.max_traverses == 0 {
            return Err(Error::invalid("max_traverses", "must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite and nonnegative"));
        }
        if self.k_est == 0 {
            return Err(Error::invalid("k_est", "must be at least 1"));
        }
        if let Some(r) = self.correction_override {
            if !r.is_finite() {
                return Err(Error::invalid("correction_override", "must be finite"));
            }
        }
        if self.variant == Variant::Gau {
            match self.gaussian_delta {
                Some(d) if d > 0.0 && d < 1.0 => {}
                _ => return Err(Error::invalid("gaussian_delta", "Gaussian variant needs delta_dp in (0, 1)")),
            }
        }
        Ok(())
    }

    fn spread(&self) -> f64 {
        if self.monotonic {
            1.0
        } else {
            2.0
        }
    }

    /// Exponential rate `eps2 / (2 c delta)`, or `eps2 / (c delta)` for
    /// monotonic queries.
    pub fn effective_lambda(&self) -> Result<f64> {
        if !self.variant.is_exponential() {
            return Err(Error::invalid(
                "variant",
                format!("`{}` does not use exponential query noise", self.variant),
            ));
        }
        Ok(self.eps2 / (self.spread() * f64::from(self.c) * self.delta))
    }

    fn gaussian_kappa(&self) -> Result<f64> {
        gaussian_kappa(self.gaussian_delta.unwrap_or(f64::NAN))
    }

    pub fn threshold_noise(&self) -> Result<NoiseDist> {
        let b = self.delta / self.eps1;
        match self.variant {
            Variant::Gau => NoiseDist::gaussian(self.gaussian_kappa()? * b),
            _ => NoiseDist::laplace(b),
        }
    }

    pub fn query_noise(&self) -> Result<NoiseDist> {
        let scale = self.spread() * f64::from(self.c) * self.delta / self.eps2;
        match self.variant {
            Variant::Lap => NoiseDist::laplace(scale),
            Variant::Gau => NoiseDist::gaussian(self.gaussian_kappa()? * scale),
            Variant::Gum => NoiseDist::gumbel(scale),
            _ => NoiseDist::exponential(scale),
        }
    }

    /// Inputs for the numerical correction of an exponential variant.
    pub fn correction_query(&self) -> Result<CorrectionQuery> {
        Ok(CorrectionQuery::new(self.delta / self.eps1, self.effective_lambda()?, self.alpha, self.k_est)
            .with_mesh(self.correction_mesh)
            .with_tail(self.correction_tail))
    }

    /// Correction term the mechanism will add to the noisy threshold.
    pub fn correction(&self) -> Result<f64> {
        if let Some(r) = self.correction_override {
            return Ok(r);
        }
        Ok(match self.variant {
            Variant::Lap | Variant::Gau | Variant::ExpNoCorr => 0.0,
            Variant::Gum | Variant::ExpMeanCorr => self.query_noise()?.mean(),
            Variant::ExpOptCorr => optimal_correction(&self.correction_query()?)?.r_op,
        })
    }

    /// Privacy spent by one run under sequential composition.
    pub fn privacy_cost(&self) -> PrivacyCost {
        let threshold = if self.resample {
            f64::from(self.c) * self.eps1
        } else {
            self.eps1
        };
        let delta_dp = match self.variant {
            Variant::Gau => self.gaussian_delta.unwrap_or(0.0),
            _ => 0.0,
        };
        PrivacyCost {
            epsilon: threshold + self.eps2,
            delta_dp,
            threshold_epsilon: threshold,
            query_epsilon: self.eps2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrivacyCost {
    pub epsilon: f64,
    pub delta_dp: f64,
    /// `eps1`, or `c * eps1` when the threshold noise is resampled.
    pub threshold_epsilon: f64,
    pub query_epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryEntry {
    pub id: u64,
    /// True answer `q_i(D)`.
    pub score: f64,
    pub threshold: f64,
}

/// Ordered queries with their thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryStream {
    entries: Vec<QueryEntry>,
}

impl QueryStream {
    pub fn new(entries: Vec<QueryEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.id) {
                return Err(Error::invalid("query_id", format!("duplicate id {}", e.id)));
            }
            if !e.score.is_finite() || !e.threshold.is_finite() {
                return Err(Error::invalid("query", format!("non-finite score or threshold for id {}", e.id)));
            }
        }
        Ok(Self { entries })
    }

    /// Queries `ids[i]` with `scores[i]` against a common threshold.
    pub fn with_common_threshold(items: impl IntoIterator<Item = (u64, f64)>, threshold: f64) -> Result<Self> {
        Self::new(
            items
                .into_iter()
                .map(|(id, score)| QueryEntry { id, score, threshold })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[QueryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub query_id: u64,
    pub verdict: Verdict,
    /// 1 for a query's first evaluation, 2 for its first re-append, ...
    pub traverse: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HaltReason {
    PositiveBudget,
    QueryBudget,
    Exhausted,
}

impl HaltReason {
    pub fn name(&self) -> &'static str {
        match self {
            HaltReason::PositiveBudget => "positive-budget",
            HaltReason::QueryBudget => "query-budget",
            HaltReason::Exhausted => "exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvtOutcome {
    pub answers: Vec<Answer>,
    /// Ids answered positive, in emission order.
    pub positives: Vec<u64>,
    pub n_c: u32,
    pub n_a: u64,
    pub halt_reason: HaltReason,
    pub correction_used: f64,
}

/// Supplier of threshold and query noise to the engine.
pub trait NoiseSource {
    fn threshold_noise(&mut self) -> Result<f64>;
    fn query_noise(&mut self) -> Result<f64>;
}

/// Draws from the configured laws.
pub struct SampledNoise<'a, R: ?Sized> {
    threshold: NoiseDist,
    query: NoiseDist,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> SampledNoise<'a, R> {
    pub fn new(threshold: NoiseDist, query: NoiseDist, rng: &'a mut R) -> Self {
        Self { threshold, query, rng }
    }
}

impl<R: Rng + ?Sized> NoiseSource for SampledNoise<'_, R> {
    fn threshold_noise(&mut self) -> Result<f64> {
        Ok(self.threshold.sample(self.rng))
    }

    fn query_noise(&mut self) -> Result<f64> {
        Ok(self.query.sample(self.rng))
    }
}

/// Replays fixed noise values; errors once a sequence runs out unless it
/// was built with [`ScriptedNoise::constant`].
#[derive(Clone, Debug, Default)]
pub struct ScriptedNoise {
    threshold: Vec<f64>,
    query: Vec<f64>,
    next_threshold: usize,
    next_query: usize,
    cycle: bool,
}

impl ScriptedNoise {
    pub fn new(threshold: Vec<f64>, query: Vec<f64>) -> Self {
        Self {
            threshold,
            query,
            ..Self::default()
        }
    }

    pub fn constant(threshold: f64, query: f64) -> Self {
        Self {
            cycle: true,
            ..Self::new(vec![threshold], vec![query])
        }
    }

    fn next(values: &[f64], cursor: &mut usize, cycle: bool, what: &'static str) -> Result<f64> {
        let v = if cycle && !values.is_empty() {
            values[*cursor % values.len()]
        } else {
            *values.get(*cursor).ok_or(Error::NoiseExhausted(what))?
        };
        *cursor += 1;
        Ok(v)
    }
}

impl NoiseSource for ScriptedNoise {
    fn threshold_noise(&mut self) -> Result<f64> {
        Self::next(&self.threshold, &mut self.next_threshold, self.cycle, "threshold")
    }

    fn query_noise(&mut self) -> Result<f64> {
        Self::next(&self.query, &mut self.next_query, self.cycle, "query")
    }
}

/// A validated mechanism with its noise laws and correction resolved.
#[derive(Clone, Debug)]
pub struct Svt {
    cfg: SvtConfig,
    threshold_noise: NoiseDist,
    query_noise: NoiseDist,
    correction: f64,
}

impl Svt {
    pub fn new(cfg: SvtConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            threshold_noise: cfg.threshold_noise()?,
            query_noise: cfg.query_noise()?,
            correction: cfg.correction()?,
            cfg,
        })
    }

    pub fn config(&self) -> &SvtConfig {
        &self.cfg
    }

    pub fn correction(&self) -> f64 {
        self.correction
    }

    pub fn threshold_noise(&self) -> &NoiseDist {
        &self.threshold_noise
    }

    pub fn query_noise(&self) -> &NoiseDist {
        &self.query_noise
    }

    pub fn run<R: Rng + ?Sized>(&self, queries: &QueryStream, rng: &mut R) -> Result<SvtOutcome> {
        let mut noise = SampledNoise::new(self.threshold_noise, self.query_noise, rng);
        self.run_with_noise(queries, &mut noise)
    }

    pub fn run_with_noise(&self, queries: &QueryStream, noise: &mut dyn NoiseSource) -> Result<SvtOutcome> {
        if queries.is_empty() {
            return Err(Error::EmptyStream);
        }
        let cfg = &self.cfg;
        let entries = queries.entries();
        let mut queue: VecDeque<(usize, u32)> = (0..entries.len()).map(|i| (i, 1)).collect();
        let mut rho = noise.threshold_noise()?;
        let mut answers = Vec::new();
        let mut positives = Vec::new();
        let (mut n_c, mut n_a) = (0u32, 0u64);
        let mut halt_reason = HaltReason::Exhausted;

        while let Some((idx, traverse)) = queue.pop_front() {
            let entry = &entries[idx];
            n_a += 1;
            let noisy_query = entry.score + noise.query_noise()?;
            let verdict = if noisy_query >= entry.threshold + rho + self.correction {
                Verdict::Above
            } else {
                Verdict::Below
            };
            answers.push(Answer {
                query_id: entry.id,
                verdict,
                traverse,
            });
            match verdict {
                Verdict::Above => {
                    n_c += 1;
                    positives.push(entry.id);
                    if n_c >= cfg.c {
                        halt_reason = HaltReason::PositiveBudget;
                        break;
                    }
                    if cfg.resample {
                        rho = noise.threshold_noise()?;
                    }
                }
                Verdict::Below => {
                    if cfg.append && traverse < cfg.max_traverses {
                        queue.push_back((idx, traverse + 1));
                    }
                }
            }
            if n_a >= cfg.k_max {
                halt_reason = HaltReason::QueryBudget;
                break;
            }
        }

        Ok(SvtOutcome {
            answers,
            positives,
            n_c,
            n_a,
            halt_reason,
            correction_used: self.correction,
        })
    }
}

/// One-shot helper: validates `cfg`, resolves the correction and runs once.
/// `noise_override` replaces sampling from `rng` entirely when given.
pub fn run_svt<R: Rng + ?Sized>(
    queries: &QueryStream,
    cfg: &SvtConfig,
    rng: &mut R,
    noise_override: Option<&mut dyn NoiseSource>,
) -> Result<SvtOutcome> {
    let svt = Svt::new(cfg.clone())?;
    match noise_override {
        Some(noise) => svt.run_with_noise(queries, noise),
        None => svt.run(queries, rng),
    }
}

/// Empirical ceiling for top-c selection: perturb every score with `noise`
/// and keep the `c` largest. Ties go to the earlier entry.
pub fn noisy_ranking_top_c<R: Rng + ?Sized>(
    queries: &QueryStream,
    noise: &NoiseDist,
    c: usize,
    rng: &mut R,
) -> Vec<u64> {
    let mut noisy: Vec<(f64, usize)> = queries
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.score + noise.sample(rng), i))
        .collect();
    noisy.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    noisy
        .into_iter()
        .take(c)
        .map(|(_, i)| queries.entries()[i].id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn stream(scores: &[f64], threshold: f64) -> QueryStream {
        QueryStream::with_common_threshold(scores.iter().enumerate().map(|(i, &s)| (i as u64, s)), threshold).unwrap()
    }

    #[test]
    fn noiseless_comparison() {
        let cfg = SvtConfig::new(Variant::ExpNoCorr, 1.0, 0.5, 0.5, 2);
        let mut noise = ScriptedNoise::constant(0.0, 0.0);
        let mut rng = rng_from_seed(0);
        let out = run_svt(&stream(&[600.0, 400.0], 500.0), &cfg, &mut rng, Some(&mut noise)).unwrap();
        let verdicts: Vec<_> = out.answers.iter().map(|a| a.verdict).collect();
        assert_eq!(verdicts, vec![Verdict::Above, Verdict::Below]);
        assert_eq!(out.positives, vec![0]);
        assert_eq!(out.halt_reason, HaltReason::Exhausted);
    }

    #[test]
    fn ties_are_positive() {
        let cfg = SvtConfig {
            correction_override: Some(10.0),
            ..SvtConfig::new(Variant::Lap, 1.0, 0.5, 0.5, 1)
        };
        let mut noise = ScriptedNoise::new(vec![5.0], vec![15.0]);
        let out = Svt::new(cfg).unwrap().run_with_noise(&stream(&[100.0], 100.0), &mut noise).unwrap();
        assert_eq!(out.answers[0].verdict, Verdict::Above);
    }

    #[test]
    fn first_positive_halts_when_c_is_one() {
        let cfg = SvtConfig::new(Variant::ExpMeanCorr, 1.0, 0.5, 0.5, 1);
        let svt = Svt::new(cfg).unwrap();
        let s = stream(&[1e6; 20], 0.0);
        for seed in 0..20 {
            let out = svt.run(&s, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(out.halt_reason, HaltReason::PositiveBudget);
            assert_eq!(out.n_c, 1);
            assert_eq!(out.answers.len() as u64, out.n_a);
            assert_eq!(out.answers.last().unwrap().verdict, Verdict::Above);
        }
    }

    #[test]
    fn k_max_caps_evaluations() {
        let cfg = SvtConfig {
            k_max: 3,
            append: true,
            max_traverses: 10,
            ..SvtConfig::new(Variant::Lap, 1.0, 0.5, 0.5, 5)
        };
        let mut noise = ScriptedNoise::constant(0.0, 0.0);
        let out = Svt::new(cfg).unwrap().run_with_noise(&stream(&[0.0, 0.0], 10.0), &mut noise).unwrap();
        assert_eq!(out.n_a, 3);
        assert_eq!(out.halt_reason, HaltReason::QueryBudget);
    }

    #[test]
    fn append_respects_traverse_cap() {
        let cfg = SvtConfig {
            append: true,
            max_traverses: 4,
            ..SvtConfig::new(Variant::Lap, 1.0, 0.5, 0.5, 5)
        };
        let mut noise = ScriptedNoise::constant(0.0, 0.0);
        let out = Svt::new(cfg).unwrap().run_with_noise(&stream(&[0.0, 1.0, 2.0], 10.0), &mut noise).unwrap();
        assert_eq!(out.n_a, 12);
        let order: Vec<(u64, u32)> = out.answers.iter().map(|a| (a.query_id, a.traverse)).collect();
        assert_eq!(&order[..4], &[(0, 1), (1, 1), (2, 1), (0, 2)]);
        assert!(out.answers.iter().all(|a| a.traverse <= 4));
        assert_eq!(out.halt_reason, HaltReason::Exhausted);
    }

    #[test]
    fn without_append_each_query_runs_once() {
        let cfg = SvtConfig::new(Variant::Gum, 1.0, 0.5, 0.5, 100);
        let s = stream(&(0..50).map(f64::from).collect::<Vec<_>>(), 25.0);
        let out = run_svt(&s, &cfg, &mut rng_from_seed(3), None).unwrap();
        assert_eq!(out.n_a, 50);
        let ids: HashSet<u64> = out.answers.iter().map(|a| a.query_id).collect();
        assert_eq!(ids.len(), 50);
    }

    #[test]
    fn errors_on_empty_stream_and_short_script() {
        let cfg = SvtConfig::new(Variant::Lap, 1.0, 0.5, 0.5, 2);
        let svt = Svt::new(cfg.clone()).unwrap();
        let empty = QueryStream::new(vec![]).unwrap();
        assert!(matches!(svt.run(&empty, &mut rng_from_seed(0)), Err(Error::EmptyStream)));
        let mut short = ScriptedNoise::new(vec![0.0], vec![0.0]);
        let r = svt.run_with_noise(&stream(&[0.0, 0.0], 1.0), &mut short);
        assert!(matches!(r, Err(Error::NoiseExhausted("query"))));
        let mut no_threshold = ScriptedNoise::new(vec![], vec![0.0]);
        let r = svt.run_with_noise(&stream(&[0.0], 1.0), &mut no_threshold);
        assert!(matches!(r, Err(Error::NoiseExhausted("threshold"))));
    }

    #[test]
    fn resample_draws_new_threshold_after_positive() {
        let cfg = SvtConfig {
            resample: true,
            ..SvtConfig::new(Variant::Lap, 1.0, 0.5, 0.5, 3)
        };
        // first rho = 0 lets query 0 through; resampled rho = 100 blocks query 1
        let mut noise = ScriptedNoise::new(vec![0.0, 100.0], vec![0.0, 0.0]);
        let out = Svt::new(cfg).unwrap().run_with_noise(&stream(&[10.0, 10.0], 5.0), &mut noise).unwrap();
        assert_eq!(out.positives, vec![0]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let e = QueryEntry {
            id: 1,
            score: 0.0,
            threshold: 0.0,
        };
        assert!(QueryStream::new(vec![e, e]).is_err());
    }

    #[test]
    fn effective_lambda_examples() {
        let mut cfg = SvtConfig::new(Variant::ExpOptCorr, 1.0, 0.1, 0.1, 50);
        assert!((cfg.effective_lambda().unwrap() - 0.001).abs() < 1e-15);
        cfg.monotonic = true;
        assert!((cfg.effective_lambda().unwrap() - 0.002).abs() < 1e-15);
        let cfg = SvtConfig::new(Variant::ExpNoCorr, 1.0, 1.0, 2.0, 1);
        assert_eq!(cfg.effective_lambda().unwrap(), 1.0);
        assert!(SvtConfig::new(Variant::Lap, 1.0, 1.0, 1.0, 1).effective_lambda().is_err());
    }

    #[test]
    fn privacy_cost_examples() {
        let cfg = SvtConfig::new(Variant::ExpOptCorr, 1.0, 0.3, 0.7, 5);
        assert!((cfg.privacy_cost().epsilon - 1.0).abs() < 1e-12);
        let cfg = SvtConfig {
            resample: true,
            ..SvtConfig::new(Variant::ExpOptCorr, 1.0, 0.1, 0.5, 5)
        };
        let cost = cfg.privacy_cost();
        assert!((cost.epsilon - 1.0).abs() < 1e-12);
        assert!((cost.threshold_epsilon - 0.5).abs() < 1e-12);
        let one = SvtConfig::new(Variant::Lap, 1.0, 0.2, 0.4, 1);
        let one_resampled = SvtConfig {
            resample: true,
            ..one.clone()
        };
        assert_eq!(one.privacy_cost(), one_resampled.privacy_cost());
        let gau = SvtConfig {
            gaussian_delta: Some(1e-4),
            ..SvtConfig::new(Variant::Gau, 1.0, 0.2, 0.4, 1)
        };
        assert_eq!(gau.privacy_cost().delta_dp, 1e-4);
    }

    #[test]
    fn default_corrections() {
        let cfg = SvtConfig::new(Variant::ExpMeanCorr, 1.0, 0.5, 0.5, 10);
        assert!((cfg.correction().unwrap() - 40.0).abs() < 1e-12);
        let mono = SvtConfig {
            monotonic: true,
            ..cfg.clone()
        };
        assert!((mono.correction().unwrap() - 20.0).abs() < 1e-12);
        let gum = SvtConfig::new(Variant::Gum, 1.0, 0.5, 0.5, 10);
        assert!((gum.correction().unwrap() - crate::noise::EULER_GAMMA * 40.0).abs() < 1e-9);
        for v in [Variant::Lap, Variant::ExpNoCorr] {
            assert_eq!(SvtConfig::new(v, 1.0, 0.5, 0.5, 10).correction().unwrap(), 0.0);
        }
        let forced = SvtConfig {
            correction_override: Some(-3.0),
            ..cfg
        };
        assert_eq!(forced.correction().unwrap(), -3.0);
    }

    #[test]
    fn gaussian_variant_requires_delta() {
        let cfg = SvtConfig::new(Variant::Gau, 1.0, 0.5, 0.5, 1);
        assert!(Svt::new(cfg.clone()).is_err());
        let ok = SvtConfig {
            gaussian_delta: Some(1e-3),
            ..cfg
        };
        let svt = Svt::new(ok).unwrap();
        let kappa = gaussian_kappa(1e-3).unwrap();
        assert!((svt.threshold_noise().scale() - 2.0 * kappa).abs() < 1e-12);
        assert!((svt.query_noise().scale() - 4.0 * kappa).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_outcome() {
        let cfg = SvtConfig {
            append: true,
            max_traverses: 3,
            ..SvtConfig::new(Variant::ExpMeanCorr, 1.0, 0.3, 0.7, 4)
        };
        let s = stream(&(0..100).map(|i| f64::from(i) * 2.0).collect::<Vec<_>>(), 150.0);
        let svt = Svt::new(cfg).unwrap();
        let a = svt.run(&s, &mut rng_from_seed(42)).unwrap();
        let b = svt.run(&s, &mut rng_from_seed(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_ranking_without_noise_is_exact() {
        let s = stream(&[3.0, 9.0, 1.0, 7.0], 0.0);
        let tiny = NoiseDist::exponential(1e-12).unwrap();
        assert_eq!(noisy_ranking_top_c(&s, &tiny, 2, &mut rng_from_seed(0)), vec![1, 3]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("bogus".parse::<Variant>().is_err());
    }
}
