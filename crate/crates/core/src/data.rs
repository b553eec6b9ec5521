//! Datasets: synthetic generators, FIMI transaction ingestion and a small
//! scores-file format for caching ingested scores.
//!
//! Scores file layout:
//!
//! ```text
//! # name=kosarak threshold=10500 records=990002
//! id,score
//! 1,12
//! 2,7
//! ```
//!
//! The `records=` key is optional.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::GroundTruth;
use crate::svt::QueryStream;

pub const BINARY_THRESHOLD: f64 = 500.0;
pub const ZIPF_THRESHOLD: f64 = 200.0;
pub const DEFAULT_ITEMS: usize = 10_000;
pub const DEFAULT_BINARY_POSITIVES: usize = 100;

/// Published thresholds of the benchmark datasets, keyed by lowercase name.
pub const KNOWN_THRESHOLDS: [(&str, f64); 6] = [
    ("binary", BINARY_THRESHOLD),
    ("zipf", ZIPF_THRESHOLD),
    ("bms-pos", 13_600.0),
    ("kosarak", 10_500.0),
    ("t40i10d100k", 11_850.0),
    ("adult", 200.0),
];

pub fn known_threshold(name: &str) -> Option<f64> {
    let name = name.to_ascii_lowercase();
    KNOWN_THRESHOLDS.iter().find(|(n, _)| *n == name).map(|&(_, t)| t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredDataset {
    pub name: String,
    pub threshold: f64,
    /// `(id, score)` pairs sorted by id.
    pub items: Vec<(u64, f64)>,
    /// Number of transactions the scores were counted over, when known.
    pub n_records: Option<u64>,
}

impl ScoredDataset {
    pub fn new(name: impl Into<String>, threshold: f64, mut items: Vec<(u64, f64)>, n_records: Option<u64>) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::invalid("threshold", "must be finite"));
        }
        items.sort_by_key(|&(id, _)| id);
        if let Some(w) = items.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("id", format!("duplicate id {}", w[0].0)));
        }
        if let Some(&(id, _)) = items.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::invalid("score", format!("non-finite score for id {id}")));
        }
        Ok(Self {
            name: name.into(),
            threshold,
            items,
            n_records,
        })
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn ground_truth(&self, c: usize) -> Result<GroundTruth> {
        GroundTruth::new(self.items.iter().copied(), self.threshold, c)
    }
}

/// Ids `1..=n_items`; the first `n_positive` score 1000, the rest 0.
pub fn gen_binary(n_items: usize, n_positive: usize) -> Result<ScoredDataset> {
    if n_items == 0 {
        return Err(Error::invalid("n_items", "must be at least 1"));
    }
    if n_positive > n_items {
        return Err(Error::invalid(
            "n_positive",
            format!("{n_positive} exceeds n_items = {n_items}"),
        ));
    }
    let items = (1..=n_items as u64)
        .map(|id| (id, if id as usize <= n_positive { 1000.0 } else { 0.0 }))
        .collect();
    ScoredDataset::new("binary", BINARY_THRESHOLD, items, None)
}

/// Item `i` (1-based) scores `10000 / i`.
pub fn gen_zipf(n_items: usize) -> Result<ScoredDataset> {
    if n_items == 0 {
        return Err(Error::invalid("n_items", "must be at least 1"));
    }
    let items = (1..=n_items as u64).map(|i| (i, 10_000.0 / i as f64)).collect();
    ScoredDataset::new("zipf", ZIPF_THRESHOLD, items, None)
}

/// Scores every item by the number of transactions containing it.
pub fn ingest_transactions(path: &Path, name: &str, threshold: f64) -> Result<ScoredDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), path, name, threshold)
}

/// [`ingest_transactions`] over any reader; `origin` labels errors.
pub fn ingest_reader<R: BufRead>(reader: R, origin: &Path, name: &str, threshold: f64) -> Result<ScoredDataset> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut records = 0u64;
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        seen.clear();
        for token in line.split_whitespace() {
            let id: u64 = token.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                reason: format!("`{token}` is not a nonnegative integer item id"),
            })?;
            if seen.insert(id) {
                *counts.entry(id).or_default() += 1;
            }
        }
        records += 1;
    }
    if records == 0 {
        return Err(Error::EmptyInput(origin.to_path_buf()));
    }
    let items = counts.into_iter().map(|(id, n)| (id, n as f64)).collect();
    ScoredDataset::new(name, threshold, items, Some(records))
}

/// Random permutation of the items, each queried against the dataset threshold.
pub fn shuffle_and_stream<R: Rng + ?Sized>(ds: &ScoredDataset, rng: &mut R) -> Result<QueryStream> {
    let mut items = ds.items.clone();
    items.shuffle(rng);
    QueryStream::with_common_threshold(items, ds.threshold)
}

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    id: u64,
    score: f64,
}

pub fn write_scores(ds: &ScoredDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_scores_to(ds, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_scores_to<W: Write>(ds: &ScoredDataset, mut out: W) -> Result<()> {
    let mut header = format!("# name={} threshold={}", ds.name, ds.threshold);
    if let Some(n) = ds.n_records {
        header.push_str(&format!(" records={n}"));
    }
    writeln!(out, "{header}").map_err(|e| Error::io(PathBuf::new(), e))?;
    let mut w = csv::Writer::from_writer(out);
    for &(id, score) in &ds.items {
        w.serialize(ScoreRow { id, score })?;
    }
    w.flush().map_err(|e| Error::io(PathBuf::new(), e))?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<ScoredDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores_from(BufReader::new(file), path)
}

pub fn read_scores_from<R: Read>(reader: R, origin: &Path) -> Result<ScoredDataset> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(origin, e))?;
    let parse_err = |reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line: 1,
        reason,
    };
    let body = first
        .trim_end()
        .strip_prefix('#')
        .ok_or_else(|| parse_err("missing `# name=... threshold=...` header".into()))?;
    let (mut name, mut threshold, mut records) = (None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(format!("malformed header field `{field}`")))?;
        match key {
            "name" => name = Some(value.to_string()),
            "threshold" => {
                threshold = Some(value.parse::<f64>().map_err(|_| parse_err(format!("bad threshold `{value}`")))?)
            }
            "records" => records = Some(value.parse::<u64>().map_err(|_| parse_err(format!("bad records `{value}`")))?),
            _ => return Err(parse_err(format!("unknown header key `{key}`"))),
        }
    }
    let name = name.ok_or_else(|| parse_err("header lacks name".into()))?;
    let threshold = threshold.ok_or_else(|| parse_err("header lacks threshold".into()))?;

    let mut rows = csv::Reader::from_reader(reader);
    let mut items = Vec::new();
    for row in rows.deserialize::<ScoreRow>() {
        let row = row?;
        items.push((row.id, row.score));
    }
    ScoredDataset::new(name, threshold, items, records)
}
