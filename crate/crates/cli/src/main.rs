//! `svt`: command-line front end for the sparse vector toolkit.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use svt_core::data::{gen_binary, gen_zipf, known_threshold, write_scores_to, DEFAULT_BINARY_POSITIVES, DEFAULT_ITEMS};
use svt_core::experiment::{
    correction_table, plot_series, run_sweep, summarize, write_csv, CorrectionTableParams, DatasetSpec,
    ExperimentConfig, KEstRule, Method, PlotKind, PlotParams,
};
use svt_core::svt::Variant;

#[derive(Parser)]
#[command(name = "svt", version, about = "Sparse vector technique experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write one CSV row per run.
    Sweep(SweepArgs),
    /// Tabulate optimal and mean corrections over a set of budgets.
    CorrectionTable(TableArgs),
    /// Emit the data behind a plot as `series,x,y,stderr` rows.
    PlotSeries(PlotArgs),
    /// Turn a FIMI transaction file into a scores file.
    Ingest(IngestArgs),
    /// Write a synthetic dataset as a scores file.
    Gen(GenArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file holding an experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// binary[:n[:pos]], zipf[:n], fimi:<path>[:threshold] or scores:<path>.
    #[arg(long)]
    dataset: Option<DatasetSpec>,
    /// Methods to run (lap, gau, gum, exp-none, exp-mean, exp-opt, upper-bound).
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    c: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `floor-m-over-c` or an explicit count.
    #[arg(long)]
    k_est: Option<KEstRule>,
    #[arg(long, value_delimiter = ',')]
    traverses: Option<Vec<u32>>,
    #[arg(long)]
    repetitions: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resample: bool,
    #[arg(long)]
    no_append: bool,
    #[arg(long)]
    monotonic: bool,
    #[arg(long)]
    sensitivity: Option<f64>,
    #[arg(long)]
    gaussian_delta: Option<f64>,
    #[arg(long)]
    mesh: Option<usize>,
    /// Print mean NCR per (variant, eps, traverses) to stderr when done.
    #[arg(long)]
    summary: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    c: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    sensitivity: Option<f64>,
    #[arg(long)]
    monotonic: bool,
    #[arg(long)]
    mesh: Option<usize>,
    #[arg(long)]
    tail: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// variance, accuracy, correction-sweep or traverses.
    kind: PlotKind,
    /// TOML file with plot parameters; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment config behind the `traverses` series.
    #[arg(long)]
    sweep_config: Option<PathBuf>,
    #[arg(long)]
    c: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    gaussian_delta: Option<f64>,
    #[arg(long)]
    mesh: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Transaction file, one whitespace-separated itemset per line.
    path: PathBuf,
    /// Dataset name; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Required unless the name has a known threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// binary or zipf.
    kind: String,
    #[arg(long, default_value_t = DEFAULT_ITEMS)]
    n_items: usize,
    /// Positives in the binary dataset.
    #[arg(long, default_value_t = DEFAULT_BINARY_POSITIVES)]
    n_positive: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn experiment_config(path: &Path) -> Result<ExperimentConfig> {
    toml::from_str(&read_text(path)?).with_context(|| format!("invalid config {}", path.display()))
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => experiment_config(path)?,
        None => {
            let Some(dataset) = a.dataset.clone() else {
                bail!("`--dataset` is required without `--config`");
            };
            let variants = Variant::ALL.iter().map(|&v| Method::Svt(v)).chain([Method::UpperBound]).collect();
            ExperimentConfig::new(dataset, variants, vec![0.1, 0.5, 1.0], 50)
        }
    };
    if let Some(v) = a.dataset {
        cfg.dataset = v;
    }
    if let Some(v) = a.variants {
        cfg.variants = v;
    }
    if let Some(v) = a.eps {
        cfg.eps_values = v;
    }
    if let Some(v) = a.c {
        cfg.c = v;
    }
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.k_est {
        cfg.k_est = v;
    }
    if let Some(v) = a.traverses {
        cfg.traverses = v;
    }
    if let Some(v) = a.repetitions {
        cfg.repetitions = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.sensitivity {
        cfg.sensitivity = v;
    }
    if let Some(v) = a.gaussian_delta {
        cfg.gaussian_delta = Some(v);
    }
    if let Some(v) = a.mesh {
        cfg.correction_mesh = v;
    }
    cfg.resample |= a.resample;
    cfg.monotonic |= a.monotonic;
    cfg.append &= !a.no_append;
    if a.out.is_some() {
        cfg.output = a.out;
    }

    let rows = run_sweep(&cfg, output(cfg.output.as_deref())?)?;
    if a.summary {
        let mut err = io::stderr().lock();
        for s in summarize(&rows, |r| r.ncr) {
            writeln!(
                err,
                "{:<12} eps={:<6} traverses={:<4} ncr={:.4} +/- {:.4} (n={})",
                s.variant, s.eps, s.traverses, s.mean, s.stderr, s.n
            )?;
        }
    }
    Ok(())
}

fn table(a: TableArgs) -> Result<()> {
    let mut p = CorrectionTableParams::default();
    if let Some(v) = a.eps {
        p.eps_values = v;
    }
    if let Some(v) = a.c {
        p.c = v;
    }
    if let Some(v) = a.alpha {
        p.alpha = v;
    }
    if let Some(v) = a.k {
        p.k = v;
    }
    if let Some(v) = a.sensitivity {
        p.sensitivity = v;
    }
    if let Some(v) = a.mesh {
        p.mesh = v;
    }
    if let Some(v) = a.tail {
        p.tail = v;
    }
    p.monotonic |= a.monotonic;
    write_csv(&correction_table(&p)?, output(a.out.as_deref())?)?;
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let mut p = match &a.config {
        Some(path) => toml::from_str(&read_text(path)?)
            .with_context(|| format!("invalid plot parameters {}", path.display()))?,
        None => PlotParams::default(),
    };
    if let Some(path) = &a.sweep_config {
        p.sweep = Some(experiment_config(path)?);
    }
    if let Some(v) = a.c {
        p.c = v;
    }
    if let Some(v) = a.eps {
        p.eps = v;
    }
    if let Some(v) = a.eps_min {
        p.eps_min = v;
    }
    if let Some(v) = a.eps_max {
        p.eps_max = v;
    }
    if let Some(v) = a.alpha {
        p.alpha = v;
    }
    if let Some(v) = a.alpha_max {
        p.alpha_max = v;
    }
    if let Some(v) = a.k {
        p.k = v;
    }
    if let Some(v) = a.points {
        p.points = v;
    }
    if let Some(v) = a.gaussian_delta {
        p.gaussian_delta = v;
    }
    if let Some(v) = a.mesh {
        p.mesh = v;
    }
    if let (Some(seed), Some(sweep)) = (a.seed, p.sweep.as_mut()) {
        sweep.seed = seed;
    }
    write_csv(&plot_series(a.kind, &p)?, output(a.out.as_deref())?)?;
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let name = match a.name {
        Some(n) => n,
        None => a
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .context("cannot derive a dataset name from the path")?,
    };
    let Some(threshold) = a.threshold.or_else(|| known_threshold(&name)) else {
        bail!("no threshold known for `{name}`; pass `--threshold`");
    };
    let ds = svt_core::data::ingest_transactions(&a.path, &name, threshold)?;
    let mut out = output(a.out.as_deref())?;
    write_scores_to(&ds, &mut out)?;
    out.flush()?;
    Ok(())
}

fn generate(a: GenArgs) -> Result<()> {
    let ds = match a.kind.as_str() {
        "binary" => gen_binary(a.n_items, a.n_positive)?,
        "zipf" => gen_zipf(a.n_items)?,
        other => bail!("unknown dataset kind `{other}` (binary, zipf)"),
    };
    let mut out = output(a.out.as_deref())?;
    write_scores_to(&ds, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::CorrectionTable(a) => table(a),
        Command::PlotSeries(a) => plot(a),
        Command::Ingest(a) => ingest(a),
        Command::Gen(a) => generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
