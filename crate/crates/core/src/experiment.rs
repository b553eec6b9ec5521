//! Seeded experiment sweeps and CSV emission.
//!
//! A sweep crosses methods, budgets, traverse counts and repetitions over
//! one dataset. Every cell is an independent job; jobs run on the rayon pool
//! and rows are written in configuration order, so the output only depends
//! on the configuration and its seed. Cell `(eps, traverses, repetition)`
//! uses the run seed `derive_seed(seed, [eps_idx, trav_idx, repetition])`:
//! its child `0` shuffles the stream and child `1` drives the noise. All
//! methods in a cell therefore see the same item order.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{optimal_variance, split, split_with_w, NoiseFamily};
use crate::correction::{
    optimal_correction, success_probability_analytical, CorrectionQuery, NumericalSuccess, DEFAULT_MESH_COUNT,
    DEFAULT_TAIL_MASS,
};
use crate::data::{
    gen_binary, gen_zipf, ingest_transactions, known_threshold, read_scores, shuffle_and_stream, ScoredDataset,
    DEFAULT_BINARY_POSITIVES, DEFAULT_ITEMS,
};
use crate::error::{Error, Result};
use crate::metrics::{f1, mean_stderr, ncr, GroundTruth};
use crate::noise::{gaussian_kappa, NoiseDist};
use crate::seed::{child_rng, derive_seed};
use crate::svt::{noisy_ranking_top_c, Svt, SvtConfig, Variant};

/// Where the items of a sweep come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Binary {
        #[serde(default = "default_items")]
        n_items: usize,
        #[serde(default = "default_positives")]
        n_positive: usize,
    },
    Zipf {
        #[serde(default = "default_items")]
        n_items: usize,
    },
    /// FIMI transaction file; the threshold falls back to the known value
    /// for `name` (the file stem when unset).
    Transactions {
        path: PathBuf,
        name: Option<String>,
        threshold: Option<f64>,
    },
    /// A scores file written by [`crate::data::write_scores`].
    Scores { path: PathBuf },
}

fn default_items() -> usize {
    DEFAULT_ITEMS
}

fn default_positives() -> usize {
    DEFAULT_BINARY_POSITIVES
}

impl DatasetSpec {
    pub fn load(&self) -> Result<ScoredDataset> {
        match self {
            DatasetSpec::Binary { n_items, n_positive } => gen_binary(*n_items, *n_positive),
            DatasetSpec::Zipf { n_items } => gen_zipf(*n_items),
            DatasetSpec::Transactions { path, name, threshold } => {
                let name = name.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "transactions".into())
                });
                let threshold = threshold.or_else(|| known_threshold(&name)).ok_or_else(|| {
                    Error::invalid("threshold", format!("no threshold given and none known for `{name}`"))
                })?;
                ingest_transactions(path, &name, threshold)
            }
            DatasetSpec::Scores { path } => read_scores(path),
        }
    }
}

/// Short forms: `binary[:n_items[:n_positive]]`, `zipf[:n_items]`,
/// `fimi:<path>[:threshold]`, `scores:<path>`.
impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::invalid("dataset", reason);
        let num = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("`{v}` is not a count")));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "binary" => {
                let mut parts = rest.split(':').filter(|p| !p.is_empty());
                Ok(DatasetSpec::Binary {
                    n_items: parts.next().map(num).transpose()?.unwrap_or(DEFAULT_ITEMS),
                    n_positive: parts.next().map(num).transpose()?.unwrap_or(DEFAULT_BINARY_POSITIVES),
                })
            }
            "zipf" => Ok(DatasetSpec::Zipf {
                n_items: if rest.is_empty() { DEFAULT_ITEMS } else { num(rest)? },
            }),
            "fimi" if !rest.is_empty() => {
                let (path, threshold) = match rest.rsplit_once(':') {
                    Some((p, t)) if t.parse::<f64>().is_ok() => (p, Some(t.parse().unwrap())),
                    _ => (rest, None),
                };
                Ok(DatasetSpec::Transactions {
                    path: path.into(),
                    name: None,
                    threshold,
                })
            }
            "scores" if !rest.is_empty() => Ok(DatasetSpec::Scores { path: rest.into() }),
            _ => Err(bad(format!("unrecognized dataset `{s}`"))),
        }
    }
}

/// A mechanism variant or the noisy-ranking ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Svt(Variant),
    /// Rank every item by `score + Exp(delta / eps2)` and keep the top `c`.
    UpperBound,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Svt(v) => v.name(),
            Method::UpperBound => "upper-bound",
        }
    }

    fn family(&self, gaussian_delta: f64) -> NoiseFamily {
        match self {
            Method::Svt(v) => v.family(gaussian_delta),
            Method::UpperBound => NoiseFamily::Exponential,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "upper-bound" {
            Ok(Method::UpperBound)
        } else {
            s.parse().map(Method::Svt)
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

/// How many negatives per positive the correction optimizer assumes.
/// In configs this is either `"floor-m-over-c"` or a bare count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KEstRepr", into = "KEstRepr")]
pub enum KEstRule {
    /// `floor(n_items / c)`.
    #[default]
    FloorMOverC,
    Explicit(u32),
}

impl KEstRule {
    pub fn resolve(&self, n_items: usize, c: u32) -> u32 {
        match *self {
            KEstRule::FloorMOverC => ((n_items / c as usize) as u32).max(1),
            KEstRule::Explicit(k) => k,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KEstRepr {
    Count(u32),
    Rule(String),
}

impl TryFrom<KEstRepr> for KEstRule {
    type Error = Error;

    fn try_from(r: KEstRepr) -> Result<Self> {
        match r {
            KEstRepr::Count(k) => Ok(KEstRule::Explicit(k)),
            KEstRepr::Rule(s) => s.parse(),
        }
    }
}

impl From<KEstRule> for KEstRepr {
    fn from(k: KEstRule) -> Self {
        match k {
            KEstRule::FloorMOverC => KEstRepr::Rule("floor-m-over-c".into()),
            KEstRule::Explicit(k) => KEstRepr::Count(k),
        }
    }
}

impl FromStr for KEstRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "floor-m-over-c" {
            return Ok(KEstRule::FloorMOverC);
        }
        s.parse()
            .map(KEstRule::Explicit)
            .map_err(|_| Error::invalid("k_est", format!("expected `floor-m-over-c` or a count, got `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub variants: Vec<Method>,
    pub eps_values: Vec<f64>,
    pub c: u32,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub k_est: KEstRule,
    #[serde(default = "default_traverses")]
    pub traverses: Vec<u32>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resample: bool,
    #[serde(default = "default_true")]
    pub append: bool,
    #[serde(default)]
    pub monotonic: bool,
    /// Query sensitivity.
    #[serde(default = "default_sensitivity")]
    pub sensitivity: f64,
    /// Failure rate of the Gaussian variant; `1 / n_records` (or
    /// `1 / n_items`) when unset.
    #[serde(default)]
    pub gaussian_delta: Option<f64>,
    #[serde(default = "default_mesh")]
    pub correction_mesh: usize,
    #[serde(default = "default_tail")]
    pub correction_tail: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_traverses() -> Vec<u32> {
    vec![1]
}

fn default_repetitions() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

fn default_sensitivity() -> f64 {
    1.0
}

fn default_mesh() -> usize {
    DEFAULT_MESH_COUNT
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_MASS
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec, variants: Vec<Method>, eps_values: Vec<f64>, c: u32) -> Self {
        Self {
            dataset,
            variants,
            eps_values,
            c,
            alpha: 0.0,
            k_est: KEstRule::default(),
            traverses: default_traverses(),
            repetitions: default_repetitions(),
            seed: 0,
            resample: false,
            append: true,
            monotonic: false,
            sensitivity: default_sensitivity(),
            gaussian_delta: None,
            correction_mesh: default_mesh(),
            correction_tail: default_tail(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::invalid("variants", "must not be empty"));
        }
        if self.eps_values.is_empty() {
            return Err(Error::invalid("eps_values", "must not be empty"));
        }
        if let Some(e) = self.eps_values.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::invalid("eps_values", format!("{e} is not a positive budget")));
        }
        if self.c == 0 {
            return Err(Error::invalid("c", "must be at least 1"));
        }
        if self.traverses.is_empty() || self.traverses.contains(&0) {
            return Err(Error::invalid("traverses", "must be a nonempty list of positive counts"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        Ok(())
    }
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub dataset: String,
    pub variant: String,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub c: u32,
    pub alpha: f64,
    pub k_est: u32,
    pub traverses: u32,
    pub repetition: u32,
    pub seed: u64,
    pub ncr: f64,
    pub f1: f64,
    pub n_c: u32,
    pub n_a: u64,
    pub halt_reason: String,
    /// Optimal correction; empty for other methods.
    pub r_op: Option<f64>,
    pub wall_time_ms: f64,
    pub correction: f64,
    /// Exponential rate; empty for non-exponential methods.
    pub lambda: Option<f64>,
    pub monotonic: bool,
    pub resample: bool,
    pub append: bool,
    pub gaussian_delta: Option<f64>,
    pub run_seed: u64,
}

struct Cell {
    method: usize,
    eps: usize,
    traverse: usize,
    repetition: u32,
}

/// A resolved mechanism for one `(method, eps, traverses)` combination.
enum Prepared {
    Svt(Svt),
    UpperBound { noise: NoiseDist, eps1: f64, eps2: f64 },
}

/// Runs every cell of `cfg` and writes the rows as CSV to `out`.
///
/// Rows preceding the first failing cell are written and flushed before the
/// error is returned.
pub fn run_sweep<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let dataset = cfg.dataset.load()?;
    let truth = dataset.ground_truth(cfg.c as usize)?;
    let n = dataset.n_items();
    let k_est = cfg.k_est.resolve(n, cfg.c);
    let gaussian_delta = cfg
        .gaussian_delta
        .unwrap_or_else(|| 1.0 / dataset.n_records.unwrap_or(n as u64) as f64);

    let prepared = prepare(cfg, n, k_est, gaussian_delta)?;

    let mut cells = Vec::new();
    for method in 0..cfg.variants.len() {
        for eps in 0..cfg.eps_values.len() {
            for traverse in 0..cfg.traverses.len() {
                for repetition in 0..cfg.repetitions {
                    cells.push(Cell {
                        method,
                        eps,
                        traverse,
                        repetition,
                    });
                }
            }
        }
    }

    let results: Vec<Result<SweepRow>> = cells
        .par_iter()
        .map(|cell| {
            let p = &prepared[(cell.method * cfg.eps_values.len() + cell.eps) * cfg.traverses.len() + cell.traverse];
            run_cell(cfg, cell, p, &dataset, &truth, k_est, gaussian_delta)
        })
        .collect();

    let mut writer = csv::Writer::from_writer(out);
    let mut rows = Vec::with_capacity(results.len());
    let mut failure = None;
    for r in results {
        match r {
            Ok(row) => {
                writer.serialize(&row)?;
                rows.push(row);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    writer.flush().map_err(|e| Error::io(cfg.output.clone().unwrap_or_default(), e))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

fn prepare(cfg: &ExperimentConfig, n: usize, k_est: u32, gaussian_delta: f64) -> Result<Vec<Prepared>> {
    // optimal corrections depend on eps only, not on traverses
    let mut corrections: HashMap<usize, f64> = HashMap::new();
    if cfg.variants.contains(&Method::Svt(Variant::ExpOptCorr)) {
        let computed: Vec<(usize, f64)> = (0..cfg.eps_values.len())
            .into_par_iter()
            .map(|i| {
                let svt_cfg = base_config(cfg, Variant::ExpOptCorr, cfg.eps_values[i], k_est, gaussian_delta)?;
                Ok((i, svt_cfg.correction()?))
            })
            .collect::<Result<_>>()?;
        corrections.extend(computed);
    }

    let mut prepared = Vec::new();
    for method in &cfg.variants {
        for (i, &eps) in cfg.eps_values.iter().enumerate() {
            for &traverses in &cfg.traverses {
                prepared.push(match method {
                    Method::Svt(variant) => {
                        let mut svt_cfg = base_config(cfg, *variant, eps, k_est, gaussian_delta)?;
                        svt_cfg.max_traverses = if cfg.append { traverses } else { 1 };
                        svt_cfg.k_max = n as u64 * u64::from(svt_cfg.max_traverses);
                        if *variant == Variant::ExpOptCorr {
                            svt_cfg.correction_override = Some(corrections[&i]);
                        }
                        Prepared::Svt(Svt::new(svt_cfg)?)
                    }
                    Method::UpperBound => {
                        let s = split(eps, NoiseFamily::Exponential, cfg.c, cfg.monotonic)?;
                        Prepared::UpperBound {
                            noise: NoiseDist::exponential(cfg.sensitivity / s.eps2)?,
                            eps1: s.eps1,
                            eps2: s.eps2,
                        }
                    }
                });
            }
        }
    }
    Ok(prepared)
}

fn base_config(cfg: &ExperimentConfig, variant: Variant, eps: f64, k_est: u32, gaussian_delta: f64) -> Result<SvtConfig> {
    let family = Method::Svt(variant).family(gaussian_delta);
    let s = split(eps, family, cfg.c, cfg.monotonic)?;
    Ok(SvtConfig {
        resample: cfg.resample,
        append: cfg.append,
        alpha: cfg.alpha,
        k_est,
        gaussian_delta: (variant == Variant::Gau).then_some(gaussian_delta),
        correction_mesh: cfg.correction_mesh,
        correction_tail: cfg.correction_tail,
        ..SvtConfig::from_split(variant, &s, cfg.sensitivity, cfg.c)
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    prepared: &Prepared,
    dataset: &ScoredDataset,
    truth: &GroundTruth,
    k_est: u32,
    gaussian_delta: f64,
) -> Result<SweepRow> {
    let run_seed = derive_seed(cfg.seed, &[cell.eps as u64, cell.traverse as u64, u64::from(cell.repetition)]);
    let stream = shuffle_and_stream(dataset, &mut child_rng(run_seed, &[0]))?;
    let mut rng = child_rng(run_seed, &[1]);
    let method = cfg.variants[cell.method];
    let start = Instant::now();
    let (positives, eps1, eps2, n_c, n_a, halt, correction, lambda) = match prepared {
        Prepared::Svt(svt) => {
            let out = svt.run(&stream, &mut rng)?;
            let sc = svt.config();
            (
                out.positives,
                sc.eps1,
                sc.eps2,
                out.n_c,
                out.n_a,
                out.halt_reason.name(),
                out.correction_used,
                sc.effective_lambda().ok(),
            )
        }
        Prepared::UpperBound { noise, eps1, eps2 } => {
            let top = noisy_ranking_top_c(&stream, noise, cfg.c as usize, &mut rng);
            let n_c = top.len() as u32;
            (top, *eps1, *eps2, n_c, stream.len() as u64, "ranking", 0.0, noise.rate())
        }
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SweepRow {
        dataset: dataset.name.clone(),
        variant: method.name().to_string(),
        eps: cfg.eps_values[cell.eps],
        eps1,
        eps2,
        c: cfg.c,
        alpha: cfg.alpha,
        k_est,
        traverses: cfg.traverses[cell.traverse],
        repetition: cell.repetition,
        seed: cfg.seed,
        ncr: ncr(&positives, truth),
        f1: f1(&positives, truth),
        n_c,
        n_a,
        halt_reason: halt.to_string(),
        r_op: (method == Method::Svt(Variant::ExpOptCorr)).then_some(correction),
        wall_time_ms,
        correction,
        lambda,
        monotonic: cfg.monotonic,
        resample: cfg.resample,
        append: cfg.append,
        gaussian_delta: (method == Method::Svt(Variant::Gau)).then_some(gaussian_delta),
        run_seed,
    })
}

/// Mean and standard error of a metric per `(variant, eps, traverses)`,
/// in first-appearance order.
pub fn summarize(rows: &[SweepRow], metric: impl Fn(&SweepRow) -> f64) -> Vec<SummaryRow> {
    let mut order: Vec<(String, u64, u32)> = Vec::new();
    let mut groups: HashMap<(String, u64, u32), Vec<f64>> = HashMap::new();
    for r in rows {
        let key = (r.variant.clone(), r.eps.to_bits(), r.traverses);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(metric(r));
    }
    order
        .into_iter()
        .map(|key| {
            let s = mean_stderr(&groups[&key]);
            SummaryRow {
                variant: key.0,
                eps: f64::from_bits(key.1),
                traverses: key.2,
                mean: s.mean,
                stderr: s.stderr,
                n: s.n,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: String,
    pub eps: f64,
    pub traverses: u32,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Parameters of the correction-term table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTableParams {
    pub eps_values: Vec<f64>,
    pub c: u32,
    pub alpha: f64,
    pub k: u32,
    pub sensitivity: f64,
    pub monotonic: bool,
    pub mesh: usize,
    pub tail: f64,
}

impl Default for CorrectionTableParams {
    fn default() -> Self {
        Self {
            eps_values: vec![0.01, 0.05, 0.1, 1.0, 2.0],
            c: 50,
            alpha: 0.0,
            k: (DEFAULT_ITEMS / 50) as u32,
            sensitivity: 1.0,
            monotonic: false,
            mesh: DEFAULT_MESH_COUNT,
            tail: DEFAULT_TAIL_MASS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionRow {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub w: f64,
    pub c: u32,
    pub alpha: f64,
    pub k: u32,
    pub sensitivity: f64,
    pub monotonic: bool,
    pub b: f64,
    pub lambda: f64,
    pub optimal: f64,
    pub p_optimal: f64,
    pub mean: f64,
    pub p_mean: f64,
    pub mesh: usize,
    pub tail: f64,
}

/// Optimal versus mean correction per budget at the exponential split.
pub fn correction_table(params: &CorrectionTableParams) -> Result<Vec<CorrectionRow>> {
    params
        .eps_values
        .par_iter()
        .map(|&eps| {
            let s = split(eps, NoiseFamily::Exponential, params.c, params.monotonic)?;
            let cfg = SvtConfig {
                alpha: params.alpha,
                k_est: params.k,
                correction_mesh: params.mesh,
                correction_tail: params.tail,
                ..SvtConfig::from_split(Variant::ExpOptCorr, &s, params.sensitivity, params.c)
            };
            let q: CorrectionQuery = cfg.correction_query()?;
            let numerical = q.numerical()?;
            let opt = optimal_correction(&q)?;
            let mean = 1.0 / q.lambda;
            Ok(CorrectionRow {
                eps,
                eps1: s.eps1,
                eps2: s.eps2,
                w: s.w,
                c: params.c,
                alpha: params.alpha,
                k: params.k,
                sensitivity: params.sensitivity,
                monotonic: params.monotonic,
                b: q.b,
                lambda: q.lambda,
                optimal: opt.r_op,
                p_optimal: opt.p_max,
                mean,
                p_mean: numerical.success_probability(mean, params.alpha, params.k),
                mesh: params.mesh,
                tail: params.tail,
            })
        })
        .collect()
}

pub fn write_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(PathBuf::new(), e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// Optimal comparison variance per noise family against the budget.
    Variance,
    /// Failure probability `beta` against the tolerance `alpha`.
    Accuracy,
    /// Success probability `p(r)` against the correction `r`.
    CorrectionSweep,
    /// Mean NCR against the number of traverses.
    Traverses,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(PlotKind::Variance),
            "accuracy" => Ok(PlotKind::Accuracy),
            "correction-sweep" => Ok(PlotKind::CorrectionSweep),
            "traverses" => Ok(PlotKind::Traverses),
            _ => Err(Error::invalid(
                "kind",
                format!("unknown plot kind `{s}` (variance, accuracy, correction-sweep, traverses)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotParams {
    pub c: u32,
    pub eps: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub alpha: f64,
    pub alpha_max: f64,
    /// Number of queries for accuracy, negatives for the correction sweep.
    pub k: u32,
    pub points: usize,
    pub sensitivity: f64,
    pub monotonic: bool,
    pub gaussian_delta: f64,
    pub mesh: usize,
    pub tail: f64,
    /// Sweep behind the `traverses` series.
    pub sweep: Option<ExperimentConfig>,
}

impl Default for PlotParams {
    fn default() -> Self {
        Self {
            c: 50,
            eps: 1.0,
            eps_min: 0.01,
            eps_max: 2.0,
            alpha: 0.0,
            alpha_max: 40.0,
            k: 50,
            points: 200,
            sensitivity: 1.0,
            monotonic: false,
            gaussian_delta: 1e-4,
            mesh: DEFAULT_MESH_COUNT,
            tail: DEFAULT_TAIL_MASS,
            sweep: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub stderr: Option<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| lo + step * i as f64)
}

fn row(series: &str, x: f64, y: f64) -> SeriesRow {
    SeriesRow {
        series: series.to_string(),
        x,
        y,
        stderr: None,
    }
}

/// Plot-ready `(series, x, y)` data for `kind`.
pub fn plot_series(kind: PlotKind, p: &PlotParams) -> Result<Vec<SeriesRow>> {
    if p.points == 0 {
        return Err(Error::invalid("points", "must be at least 1"));
    }
    match kind {
        PlotKind::Variance => variance_series(p),
        PlotKind::Accuracy => accuracy_series(p),
        PlotKind::CorrectionSweep => correction_sweep_series(p),
        PlotKind::Traverses => traverse_series(p),
    }
}

fn variance_series(p: &PlotParams) -> Result<Vec<SeriesRow>> {
    let families = [
        NoiseFamily::Exponential,
        NoiseFamily::Laplace,
        NoiseFamily::Gumbel,
        NoiseFamily::Gaussian {
            delta_dp: p.gaussian_delta,
        },
    ];
    let (lo, hi) = (p.eps_min.ln(), p.eps_max.ln());
    let last = p.points - 1;
    let mut rows = Vec::new();
    for fam in families {
        for (i, x) in linspace(lo, hi, p.points).map(f64::exp).enumerate() {
            let x = match i {
                0 => p.eps_min,
                i if i == last => p.eps_max,
                _ => x,
            };
            rows.push(row(fam.name(), x, optimal_variance(fam, x, p.c, p.sensitivity, p.monotonic)?));
        }
    }
    Ok(rows)
}

/// `beta(alpha) = 1 - p(r)` with `k - 1` negatives at `T - alpha` and one
/// positive at `T + alpha`, single positive, budget halved between threshold
/// and queries. Optimal correction is re-optimized at every `alpha`.
fn accuracy_series(p: &PlotParams) -> Result<Vec<SeriesRow>> {
    if p.k < 2 {
        return Err(Error::invalid("k", "accuracy needs at least two queries"));
    }
    let half = split_with_w(p.eps, 1.0, NoiseFamily::Laplace, p.monotonic)?;
    let spread = if p.monotonic { 1.0 } else { 2.0 };
    let b = p.sensitivity / half.eps1;
    let q_scale = spread * p.sensitivity / half.eps2;
    let kappa = gaussian_kappa(p.gaussian_delta)?;
    let lap = NoiseDist::laplace(b)?;
    let pairs: Vec<(&str, NoiseDist, NoiseDist, Option<f64>)> = vec![
        ("exp-opt", NoiseDist::exponential(q_scale)?, lap, None),
        ("lap", NoiseDist::laplace(q_scale)?, lap, Some(0.0)),
        (
            "gum",
            NoiseDist::gumbel(q_scale)?,
            lap,
            Some(crate::noise::EULER_GAMMA * q_scale),
        ),
        (
            "gau",
            NoiseDist::gaussian(kappa * q_scale)?,
            NoiseDist::gaussian(kappa * b)?,
            Some(0.0),
        ),
    ];
    let negatives = p.k - 1;
    let alphas: Vec<f64> = linspace(0.0, p.alpha_max, p.points).collect();
    let series: Vec<Vec<SeriesRow>> = pairs
        .par_iter()
        .map(|(name, query, threshold, fixed_r)| {
            let engine = NumericalSuccess::new(query, threshold, p.mesh, p.tail)?;
            Ok(alphas
                .iter()
                .map(|&a| {
                    let success = match fixed_r {
                        Some(r) => engine.success_probability(*r, a, negatives),
                        None => engine.argmax(a, negatives).1,
                    };
                    row(name, a, (1.0 - success).clamp(0.0, 1.0))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(series.into_iter().flatten().collect())
}

fn correction_sweep_series(p: &PlotParams) -> Result<Vec<SeriesRow>> {
    let s = split(p.eps, NoiseFamily::Exponential, p.c, p.monotonic)?;
    let cfg = SvtConfig {
        alpha: p.alpha,
        k_est: p.k,
        correction_mesh: p.mesh,
        correction_tail: p.tail,
        ..SvtConfig::from_split(Variant::ExpOptCorr, &s, p.sensitivity, p.c)
    };
    let q = cfg.correction_query()?;
    let grid: Vec<f64> = linspace(-2.0 * q.b, 4.0 / q.lambda, p.points).collect();
    let mut rows: Vec<SeriesRow> = crate::correction::correction_sweep(&q, &grid)?
        .into_iter()
        .map(|(r, pr)| row("numerical", r, pr))
        .collect();
    for &r in &grid {
        rows.push(row("analytical", r, success_probability_analytical(r, &q)?));
    }
    Ok(rows)
}

fn traverse_series(p: &PlotParams) -> Result<Vec<SeriesRow>> {
    let cfg = p
        .sweep
        .as_ref()
        .ok_or_else(|| Error::invalid("sweep", "the traverses series needs a sweep configuration"))?;
    let rows = run_sweep(cfg, std::io::sink())?;
    Ok(summarize(&rows, |r| r.ncr)
        .into_iter()
        .map(|s| SeriesRow {
            series: format!("{}@eps={}", s.variant, s.eps),
            x: f64::from(s.traverses),
            y: s.mean,
            stderr: Some(s.stderr),
        })
        .collect())
}
