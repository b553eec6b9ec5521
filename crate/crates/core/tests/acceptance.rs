//! Acceptance suite. Prints one PASS/FAIL line per criterion (criteria with
//! two independent clauses print one line per clause) and exits nonzero if
//! any line fails. Runtime limits are part of each criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use svt_core::allocation::{comparison_variance, optimal_variance, optimal_w, split_with_w, NoiseFamily};
use svt_core::correction::{
    max_success_lower_bound, optimal_correction, success_probability_analytical, CorrectionQuery,
};
use svt_core::experiment::{
    correction_table, run_sweep, summarize, CorrectionTableParams, DatasetSpec, ExperimentConfig, KEstRule, Method,
    SummaryRow,
};
use svt_core::metrics::{alpha_beta_estimate, theorem_alpha, theorem_beta};
use svt_core::noise::{lipschitz_tail_check, NoiseDist};
use svt_core::seed::rng_from_seed;
use svt_core::svt::{QueryStream, Svt, SvtConfig, Variant};
use svt_core::GroundTruth;

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, title: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    Line {
        id,
        title,
        pass,
        detail: detail.into(),
    }
}

/// Runs `f`, then folds the runtime limit (if any) into every line it produced.
fn timed(limit: Option<Duration>, f: impl FnOnce() -> Vec<Line>) -> Vec<Line> {
    let start = Instant::now();
    let mut lines = f();
    let elapsed = start.elapsed();
    for l in &mut lines {
        l.detail = match limit {
            Some(limit) => {
                l.pass &= elapsed <= limit;
                format!("{}; {:.2}s (limit {}s)", l.detail, elapsed.as_secs_f64(), limit.as_secs())
            }
            None => format!("{}; {:.2}s", l.detail, elapsed.as_secs_f64()),
        };
    }
    lines
}

const EXP: NoiseFamily = NoiseFamily::Exponential;

fn oracle_equivalence() -> Vec<Line> {
    let (eps, c) = (0.03, 50);
    let w = optimal_w(EXP, c, false);
    let s = split_with_w(eps, w, EXP, false).unwrap();
    let cfg = SvtConfig {
        k_est: 10,
        ..SvtConfig::from_split(Variant::ExpOptCorr, &s, 1.0, c)
    };
    let q = cfg.correction_query().unwrap();
    let num = q.numerical().unwrap();
    let theta = 1.0 / q.lambda;
    let (lo, hi) = (-5.0 * q.b, 10.0 * theta);
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    for i in 0..1000 {
        let r = lo + (hi - lo) * f64::from(i) / 999.0;
        let d = num.success_probability(r, q.alpha, q.k) - success_probability_analytical(r, &q).unwrap();
        sup = sup.max(d.abs());
        sq += d * d;
    }
    let l2 = sq.sqrt();
    vec![line(
        "1",
        "numerical p(r) matches closed form (m=20001, eps=0.03, alpha=0, k=10)",
        sup < 1e-2 && l2 < 1e-2,
        format!("sup={sup:.2e} l2={l2:.2e} over r in [{lo:.0}, {hi:.0}]"),
    )]
}

fn lipschitz_inequalities() -> Vec<Line> {
    let mut rng = rng_from_seed(2);
    let n = 10_000;
    let mut worst = [f64::NEG_INFINITY; 3];
    let mut tight_gap: f64 = 0.0;
    let b = 3.0;
    let lap = NoiseDist::laplace(b).unwrap();
    let theta = 4.0;
    let exp = NoiseDist::exponential(theta).unwrap();
    let beta = 2.5;
    let gum = NoiseDist::gumbel(beta).unwrap();
    for _ in 0..n {
        let shift = rng.random_range(-5.0..5.0);
        let x = rng.random_range(-60.0..60.0);
        worst[0] = worst[0].max((lap.ln_pdf(x) - lap.ln_pdf(x + shift)).abs() - shift.abs() / b);
        let x = rng.random_range(-20.0..200.0);
        let lhs = (exp.ln_sf(x) - exp.ln_sf(x + shift)).abs();
        worst[1] = worst[1].max(lhs - shift.abs() / theta);
        if x > 0.0 && x + shift > 0.0 {
            tight_gap = tight_gap.max((lhs - shift.abs() / theta).abs());
        }
        let x = rng.random_range(-20.0..200.0);
        let (a, z) = (gum.ln_sf(x), gum.ln_sf(x + shift));
        if a.is_finite() && z.is_finite() {
            worst[2] = worst[2].max((a - z).abs() - shift.abs() / beta);
        }
    }
    let sigma = 1.5;
    let gau = NoiseDist::gaussian(sigma).unwrap();
    let grid: Vec<f64> = (0..=3_500).map(|i| f64::from(i) * 0.01 * sigma).collect();
    let gaussian_fails = [1.0, 10.0, 25.0]
        .iter()
        .all(|k| lipschitz_tail_check(&gau, k / sigma, 1.0, &grid).unwrap().max_violation > 0.0);
    let pass = worst.iter().all(|&v| v <= 1e-9) && tight_gap <= 1e-9 && gaussian_fails;
    vec![line(
        "2",
        "Lipschitz inequalities over 1e4 random (x, shift) pairs",
        pass,
        format!(
            "max violation lap={:.1e} exp={:.1e} gum={:.1e}; exp tightness gap={tight_gap:.1e}; gaussian fails k2 in {{1,10,25}}/sigma: {gaussian_fails}",
            worst[0], worst[1], worst[2]
        ),
    )]
}

fn allocation_optimality() -> Vec<Line> {
    let families = [
        EXP,
        NoiseFamily::Gumbel,
        NoiseFamily::Laplace,
        NoiseFamily::Gaussian { delta_dp: 1e-4 },
    ];
    let grid: Vec<f64> = (0..10_000)
        .map(|i| (0.01f64.ln() + (1e4f64.ln() - 0.01f64.ln()) * f64::from(i) / 9_999.0).exp())
        .collect();
    let mut worst_ratio: f64 = 0.0;
    for fam in families {
        for monotonic in [false, true] {
            for c in [1, 5, 50, 500] {
                let v = |w: f64| {
                    let s = split_with_w(1.0, w, fam, monotonic).unwrap();
                    comparison_variance(fam, s.eps1, s.eps2, c, 1.0, monotonic).unwrap()
                };
                let best = grid.iter().map(|&w| v(w)).fold(f64::INFINITY, f64::min);
                worst_ratio = worst_ratio.max(v(optimal_w(fam, c, monotonic)) / best - 1.0);
            }
        }
    }
    let mut ordered = 0;
    let mut exp_lowest = true;
    let mut gum_over_lap: (f64, f64) = (f64::INFINITY, 0.0);
    let points = 200;
    for i in 0..points {
        let eps = (0.01f64.ln() + (2f64.ln() - 0.01f64.ln()) * f64::from(i) / f64::from(points - 1)).exp();
        let v = |f| optimal_variance(f, eps, 50, 1.0, false).unwrap();
        let (e, l, g, n) = (
            v(EXP),
            v(NoiseFamily::Laplace),
            v(NoiseFamily::Gumbel),
            v(NoiseFamily::Gaussian { delta_dp: 1e-4 }),
        );
        exp_lowest &= e <= l && e <= g && e <= n;
        if e <= l && l <= g {
            ordered += 1;
        }
        gum_over_lap = (gum_over_lap.0.min(g / l), gum_over_lap.1.max(g / l));
    }
    vec![
        line(
            "3a",
            "closed-form w within 0.1% of a 1e4-point grid search",
            worst_ratio <= 1e-3,
            format!("worst relative excess {worst_ratio:.2e} over 4 families x 2 settings x c in {{1,5,50,500}}"),
        ),
        line(
            "3b",
            "V_Exp <= V_Lap <= V_Gum at optimal splits, c=50, eps in [0.01, 2]",
            ordered == points,
            format!(
                "ordering held at {ordered}/{points} budgets; V_Gum/V_Lap in [{:.4}, {:.4}]; V_Exp lowest of all four: {exp_lowest}",
                gum_over_lap.0, gum_over_lap.1
            ),
        ),
    ]
}

fn maximum_existence() -> Vec<Line> {
    let mut rng = rng_from_seed(4);
    let mut worst = f64::INFINITY;
    let mut worst_cfg = String::new();
    for _ in 0..50 {
        let b = rng.random_range(0.5f64.ln()..100f64.ln()).exp();
        let theta = rng.random_range(0.5f64.ln()..500f64.ln()).exp();
        let k = rng.random_range(1..=100u32);
        let q = CorrectionQuery::new(b, 1.0 / theta, 0.0, k);
        let opt = optimal_correction(&q).unwrap();
        let margin = opt.p_max - max_success_lower_bound(k);
        if margin < worst {
            worst = margin;
            worst_cfg = format!("b={b:.3} theta={theta:.3} k={k}");
        }
    }
    vec![line(
        "4",
        "max_r p(r) >= k^k/(k+1)^(k+1) - 1e-2 on 50 random configurations",
        worst >= -1e-2,
        format!("smallest margin {worst:.3e} at {worst_cfg}"),
    )]
}

fn correction_table_shape() -> Vec<Line> {
    let rows = correction_table(&CorrectionTableParams::default()).unwrap();
    let dominates = rows.iter().all(|r| r.optimal > r.mean);
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].optimal < w[0].optimal && w[1].mean < w[0].mean);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("eps={}: opt={:.2} mean={:.2}", r.eps, r.optimal, r.mean))
        .collect();
    vec![line(
        "5",
        "optimal correction > mean correction, both decreasing in eps (c=50, alpha=0, k=200)",
        dominates && decreasing,
        table.join(", "),
    )]
}

fn theorem_bound() -> Vec<Line> {
    let (k, eps) = (50u32, 1.0);
    let trials = 10_000;
    let mut details = Vec::new();
    let mut pass = true;
    for beta_bound in [0.1, 0.05] {
        let alpha = theorem_alpha(beta_bound, k, eps);
        assert!((theorem_beta(alpha, k, eps) - beta_bound).abs() < 1e-12);
        let threshold = 0.0;
        // k-1 records strictly below T - alpha, the last strictly above T + alpha
        let scores: Vec<(u64, f64)> = (0..u64::from(k))
            .map(|i| {
                let s = if i + 1 == u64::from(k) { alpha + 1e-6 } else { -alpha - 1e-6 };
                (i, threshold + s)
            })
            .collect();
        let truth = GroundTruth::new(scores.clone(), threshold, 1).unwrap();
        let stream = QueryStream::with_common_threshold(scores, threshold).unwrap();
        for variant in [Variant::ExpOptCorr, Variant::ExpNoCorr] {
            let svt = Svt::new(SvtConfig {
                alpha,
                k_est: k - 1,
                ..SvtConfig::new(variant, 1.0, eps / 2.0, eps / 2.0, 1)
            })
            .unwrap();
            let est = alpha_beta_estimate(|rng| svt.run(&stream, rng), alpha, &truth, trials, 6).unwrap();
            let ok = est.beta_hat <= beta_bound + 3.0 * est.stderr;
            pass &= ok;
            details.push(format!(
                "{variant} alpha={alpha:.2}: beta_hat={:.4} (se {:.4}) vs bound {beta_bound}",
                est.beta_hat, est.stderr
            ));
        }
    }
    vec![line(
        "6",
        "Monte-Carlo beta within bound at two alpha points (c=1, k=50, eps=1, 1e4 trials)",
        pass,
        details.join("; "),
    )]
}

fn find<'a>(rows: &'a [SummaryRow], variant: &str, eps: f64) -> &'a SummaryRow {
    rows.iter()
        .find(|r| r.variant == variant && r.eps == eps)
        .unwrap_or_else(|| panic!("missing {variant} at {eps}"))
}

fn gap(a: &SummaryRow, b: &SummaryRow) -> f64 {
    (a.mean - b.mean) / a.stderr.hypot(b.stderr).max(f64::MIN_POSITIVE)
}

fn end_to_end_ordering() -> Vec<Line> {
    let methods: Vec<Method> = ["exp-opt", "exp-mean", "exp-none", "lap", "gau", "upper-bound"]
        .iter()
        .map(|m| m.parse().unwrap())
        .collect();
    let eps_values = vec![0.1, 0.5, 1.0];
    let mut lines = Vec::new();
    for (name, dataset) in [
        (
            "binary",
            DatasetSpec::Binary {
                n_items: 10_000,
                n_positive: 100,
            },
        ),
        ("zipf", DatasetSpec::Zipf { n_items: 10_000 }),
    ] {
        let cfg = ExperimentConfig {
            traverses: vec![5],
            repetitions: 20,
            seed: 7,
            k_est: KEstRule::FloorMOverC,
            ..ExperimentConfig::new(dataset, methods.clone(), eps_values.clone(), 50)
        };
        let rows = run_sweep(&cfg, std::io::sink()).unwrap();
        let summary = summarize(&rows, |r| r.ncr);
        let mut pass = true;
        let mut detail = Vec::new();
        for &eps in &eps_values {
            let m = |v| find(&summary, v, eps);
            let chain = [
                gap(m("exp-opt"), m("exp-mean")),
                gap(m("exp-mean"), m("exp-none")),
                gap(m("exp-opt"), m("lap")),
                gap(m("lap"), m("gau")),
            ];
            let within_bound = m("exp-opt").mean <= m("upper-bound").mean + 2.0 * m("exp-opt").stderr.hypot(m("upper-bound").stderr);
            pass &= chain.iter().all(|&g| g > 2.0) && within_bound;
            detail.push(format!(
                "eps={eps}: opt={:.3} mean={:.3} none={:.3} lap={:.3} gau={:.3} ub={:.3} gaps(se)=[{:.1}, {:.1}, {:.1}, {:.1}]",
                m("exp-opt").mean,
                m("exp-mean").mean,
                m("exp-none").mean,
                m("lap").mean,
                m("gau").mean,
                m("upper-bound").mean,
                chain[0],
                chain[1],
                chain[2],
                chain[3]
            ));
        }
        lines.push(line(
            if name == "binary" { "7a" } else { "7b" },
            if name == "binary" {
                "NCR ordering on Binary (m=1e4, c=50, 5 traverses, 20 reps)"
            } else {
                "NCR ordering on Zipf (m=1e4, c=50, 5 traverses, 20 reps)"
            },
            pass,
            detail.join("; "),
        ));
    }
    lines
}

fn appending_monotonicity() -> Vec<Line> {
    let cfg = ExperimentConfig {
        traverses: vec![1, 2, 5, 10],
        repetitions: 20,
        seed: 8,
        ..ExperimentConfig::new(
            DatasetSpec::Zipf { n_items: 10_000 },
            vec![Method::Svt(Variant::ExpOptCorr)],
            vec![0.5],
            50,
        )
    };
    let rows = run_sweep(&cfg, std::io::sink()).unwrap();
    let summary = summarize(&rows, |r| r.ncr);
    let pass = summary
        .windows(2)
        .all(|w| w[1].mean >= w[0].mean - 2.0 * w[0].stderr.hypot(w[1].stderr));
    let detail: Vec<String> = summary
        .iter()
        .map(|s| format!("t={}: {:.3} (se {:.3})", s.traverses, s.mean, s.stderr))
        .collect();
    vec![line(
        "8",
        "exp-opt NCR nondecreasing in traverses on Zipf at eps=0.5",
        pass,
        detail.join(", "),
    )]
}

/// CSV text with the `wall_time_ms` column removed.
fn metric_columns(csv_bytes: &[u8]) -> Vec<String> {
    let mut reader = csv::Reader::from_reader(csv_bytes);
    let headers = reader.headers().unwrap().clone();
    let skip = headers.iter().position(|h| h == "wall_time_ms").unwrap();
    reader
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

fn determinism() -> Vec<Line> {
    let cfg = ExperimentConfig {
        traverses: vec![1, 3],
        repetitions: 4,
        seed: 99,
        correction_mesh: 4001,
        ..ExperimentConfig::new(
            DatasetSpec::Zipf { n_items: 2_000 },
            ["exp-opt", "exp-mean", "lap", "gau", "gum", "upper-bound"]
                .iter()
                .map(|m| m.parse().unwrap())
                .collect(),
            vec![0.2, 1.0],
            10,
        )
    };
    let run = |threads| {
        let mut out = Vec::new();
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_sweep(&cfg, &mut out).unwrap());
        metric_columns(&out)
    };
    let (a, b, c) = (run(1), run(4), run(4));
    vec![line(
        "9",
        "same seed gives byte-identical metric columns",
        a == b && b == c && !a.is_empty(),
        format!("{} rows compared across 1 and 4 threads", a.len()),
    )]
}

/// Runtime limit in seconds, if any, and the check itself.
type Criterion = (Option<u64>, fn() -> Vec<Line>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (Some(5), oracle_equivalence),
        (Some(1), lipschitz_inequalities),
        (Some(5), allocation_optimality),
        (Some(30), maximum_existence),
        (None, correction_table_shape),
        (Some(60), theorem_bound),
        (Some(600), end_to_end_ordering),
        (Some(600), appending_monotonicity),
        (None, determinism),
    ];
    let mut failed = 0;
    let mut total = 0;
    for (limit, f) in criteria {
        for l in timed(limit.map(Duration::from_secs), f) {
            total += 1;
            if !l.pass {
                failed += 1;
            }
            println!(
                "{} [{}] {}: {}",
                if l.pass { "PASS" } else { "FAIL" },
                l.id,
                l.title,
                l.detail
            );
        }
    }
    println!("acceptance: {} passed, {failed} failed", total - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
