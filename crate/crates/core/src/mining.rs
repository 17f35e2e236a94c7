//! The model mining loop.
//!
//! Each candidate score table is split into a training and a holdout set,
//! a tree is fitted on the training part and scored on the holdout, and the
//! candidate passes when its holdout accuracy reaches the configured
//! threshold. Passing candidates are then ranked by their confusion-matrix
//! metrics.
//!
//! Every candidate gets its own split seed,
//! `rng::derive_seed(config.seed, "<experiment>\x1f<epoch>\x1f<dataset>")`,
//! so adding or removing a table never changes another table's split.
//! Holdout selection is a Fisher–Yates shuffle of the record indices with
//! [`SplitMix64`]; the first `ceil(fraction * n)` shuffled indices form the
//! holdout. Both parts keep ingestion order.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::datamodel::{BinaryLabel, ScoreTable, TableId};
use crate::metrics::{binary_metrics, confusion, render_metric, ConfusionMatrix, MetricSet, MetricsError, Proportion};
use crate::rng::{derive_seed, SplitMix64};
use crate::tree::{export_tree, fit_tree, DecisionTree, ExportFormat, TreeConfig, TreeError};

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("need at least 2 records to split, got {0}")]
    TooFewSamples(usize),
    #[error("test fraction {fraction} leaves no training records out of {n}")]
    DegenerateSplit { fraction: f64, n: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("candidate {table_id}: {source}")]
    Candidate {
        table_id: TableId,
        #[source]
        source: Box<MiningError>,
    },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error("writing report to {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankPolicy {
    /// F1 descending, then FP rate ascending, then accuracy descending.
    #[default]
    F1ThenFpr,
    /// Accuracy descending, then F1 descending, then FP rate ascending.
    AccuracyThenF1,
}

impl fmt::Display for RankPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankPolicy::F1ThenFpr => f.write_str("f1_then_fpr"),
            RankPolicy::AccuracyThenF1 => f.write_str("accuracy_then_f1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningConfig {
    pub test_fraction: f64,
    pub accuracy_threshold: f64,
    pub seed: u64,
    pub tree_config: TreeConfig,
    pub rank_policy: RankPolicy,
    /// Keep the class ratio in the holdout. Off by default.
    pub stratified: bool,
    /// Abort the run on the first failing candidate instead of recording it.
    pub strict: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            test_fraction: 0.2,
            accuracy_threshold: 0.60,
            seed: 0,
            tree_config: TreeConfig::default(),
            rank_policy: RankPolicy::default(),
            stratified: false,
            strict: false,
        }
    }
}

impl MiningConfig {
    pub fn with_seed(seed: u64) -> Self {
        MiningConfig {
            seed,
            ..MiningConfig::default()
        }
    }
}

/// `ceil(fraction * n)`, treating products within floating-point noise of
/// an integer as that integer.
pub fn test_size(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    let nearest = exact.round();
    if (exact - nearest).abs() <= 1e-9 * (n.max(1) as f64) {
        nearest as usize
    } else {
        exact.ceil() as usize
    }
}

fn check_split(n: usize, fraction: f64) -> Result<usize, MiningError> {
    if n < 2 {
        return Err(MiningError::TooFewSamples(n));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(MiningError::DegenerateSplit { fraction, n });
    }
    let k = test_size(n, fraction);
    if k >= n || k == 0 {
        return Err(MiningError::DegenerateSplit { fraction, n });
    }
    Ok(k)
}

/// Holdout indices for a table of `n` records, sorted ascending.
pub fn holdout_indices(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>, MiningError> {
    let k = check_split(n, fraction)?;
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let mut test = order[..k].to_vec();
    test.sort_unstable();
    Ok(test)
}

/// Class-stratified holdout indices. The holdout size is the same as for
/// the plain split, shared across classes by largest remainder.
pub fn stratified_holdout_indices(labels: &[BinaryLabel], fraction: f64, seed: u64) -> Result<Vec<usize>, MiningError> {
    let n = labels.len();
    let k = check_split(n, fraction)?;
    let classes = [BinaryLabel::Malignant, BinaryLabel::Benign];
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..n).filter(|&i| labels[i] == *c).collect())
        .collect();
    let mut quotas: Vec<usize> = members.iter().map(|m| k * m.len() / n).collect();
    let remainders: Vec<usize> = members.iter().map(|m| (k * m.len()) % n).collect();
    let mut leftover = k - quotas.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..classes.len()).collect();
    by_remainder.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    for c in by_remainder {
        if leftover == 0 {
            break;
        }
        if quotas[c] < members[c].len() {
            quotas[c] += 1;
            leftover -= 1;
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut test = Vec::with_capacity(k);
    for (mut class_members, quota) in members.into_iter().zip(quotas) {
        rng.shuffle(&mut class_members);
        test.extend_from_slice(&class_members[..quota]);
    }
    test.sort_unstable();
    Ok(test)
}

fn partition(table: &ScoreTable, test: &[usize]) -> (ScoreTable, ScoreTable) {
    let mut train_t = ScoreTable::new(table.experiment_id.clone(), table.epoch, table.dataset_tag);
    let mut test_t = train_t.clone();
    let mut next = test.iter().peekable();
    for (i, r) in table.records.iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
            test_t.records.push(r.clone());
        } else {
            train_t.records.push(r.clone());
        }
    }
    (train_t, test_t)
}

/// Splits `table` into `(train, test)` with a seeded, unstratified shuffle.
pub fn split_train_test(table: &ScoreTable, fraction: f64, seed: u64) -> Result<(ScoreTable, ScoreTable), MiningError> {
    let test = holdout_indices(table.len(), fraction, seed)?;
    Ok(partition(table, &test))
}

pub fn split_train_test_stratified(
    table: &ScoreTable,
    fraction: f64,
    seed: u64,
) -> Result<(ScoreTable, ScoreTable), MiningError> {
    let labels: Vec<BinaryLabel> = table.records.iter().map(|r| r.label).collect();
    let test = stratified_holdout_indices(&labels, fraction, seed)?;
    Ok(partition(table, &test))
}

/// Split seed for one candidate table.
pub fn candidate_seed(seed: u64, id: &TableId) -> u64 {
    let key = format!("{}\u{1f}{}\u{1f}{}", id.experiment_id, id.epoch, id.dataset);
    derive_seed(seed, key.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub table_id: TableId,
    /// Position of the table in the mined input list.
    pub input_index: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub cm: ConfusionMatrix,
    pub metrics: MetricSet,
    pub passed_filter: bool,
    pub tree: DecisionTree,
}

fn passes(metrics: &MetricSet, threshold: f64) -> bool {
    metrics.accuracy.is_some_and(|a| a.value() >= threshold)
}

pub fn evaluate_candidate(table: &ScoreTable, config: &MiningConfig) -> Result<CandidateResult, MiningError> {
    evaluate_at(table, config, 0).map_err(|e| MiningError::Candidate {
        table_id: table.id(),
        source: Box::new(e),
    })
}

fn evaluate_at(table: &ScoreTable, config: &MiningConfig, input_index: usize) -> Result<CandidateResult, MiningError> {
    let seed = candidate_seed(config.seed, &table.id());
    let (train, test) = if config.stratified {
        split_train_test_stratified(table, config.test_fraction, seed)?
    } else {
        split_train_test(table, config.test_fraction, seed)?
    };
    let tree = fit_tree(&train.records, &config.tree_config)?;
    let predictions: Vec<BinaryLabel> = test.records.iter().map(|r| tree.predict(&r.features)).collect();
    let truths: Vec<BinaryLabel> = test.records.iter().map(|r| r.label).collect();
    let cm = confusion(&predictions, &truths)?;
    let metrics = binary_metrics(&cm)?;
    Ok(CandidateResult {
        table_id: table.id(),
        input_index,
        train_size: train.len(),
        test_size: test.len(),
        cm,
        passed_filter: passes(&metrics, config.accuracy_threshold),
        metrics,
        tree,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFailure {
    pub table_id: TableId,
    pub input_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassSummary {
    pub passed: usize,
    pub total: usize,
}

impl PassSummary {
    pub fn rate(&self) -> Option<Proportion> {
        Proportion::new(self.passed as u64, self.total as u64)
    }

    /// Percentage to one decimal, e.g. `86.8%`, or `n/a` for an empty run.
    pub fn percent(&self) -> String {
        match self.rate() {
            Some(rate) => format!("{}%", crate::metrics::render_scaled(rate.scaled_round(3), 1)),
            None => "n/a".to_string(),
        }
    }
}

impl fmt::Display for PassSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({})", self.passed, self.total, self.percent())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningReport {
    pub config: MiningConfig,
    /// Successful evaluations, in input order.
    pub results: Vec<CandidateResult>,
    /// Candidates that could not be evaluated, in input order.
    pub failures: Vec<CandidateFailure>,
    /// Indices into `results` of passing candidates, best first.
    pub ranking: Vec<usize>,
    pub summary: PassSummary,
}

impl MiningReport {
    pub fn top(&self) -> Option<&CandidateResult> {
        self.ranking.first().map(|&i| &self.results[i])
    }

    pub fn ranked(&self) -> impl Iterator<Item = &CandidateResult> {
        self.ranking.iter().map(|&i| &self.results[i])
    }
}

/// Mines every table on the current thread.
pub fn mine(tables: &[ScoreTable], config: &MiningConfig) -> Result<MiningReport, MiningError> {
    let outcomes = tables
        .iter()
        .enumerate()
        .map(|(i, t)| evaluate_at(t, config, i))
        .collect();
    assemble(tables, config, outcomes)
}

/// Mines tables on up to `jobs` worker threads (0 picks the machine's
/// parallelism). The report is identical to [`mine`].
pub fn mine_with_jobs(tables: &[ScoreTable], config: &MiningConfig, jobs: usize) -> Result<MiningReport, MiningError> {
    if jobs == 1 {
        return mine(tables, config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MiningError::Pool(e.to_string()))?;
    let outcomes = pool.install(|| {
        tables
            .par_iter()
            .enumerate()
            .map(|(i, t)| evaluate_at(t, config, i))
            .collect()
    });
    assemble(tables, config, outcomes)
}

fn assemble(
    tables: &[ScoreTable],
    config: &MiningConfig,
    outcomes: Vec<Result<CandidateResult, MiningError>>,
) -> Result<MiningReport, MiningError> {
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) if config.strict => {
                return Err(MiningError::Candidate {
                    table_id: tables[i].id(),
                    source: Box::new(e),
                })
            }
            Err(e) => failures.push(CandidateFailure {
                table_id: tables[i].id(),
                input_index: i,
                error: e.to_string(),
            }),
        }
    }
    let ranking = rank_models(&results, config.rank_policy);
    let summary = PassSummary {
        passed: ranking.len(),
        total: results.len() + failures.len(),
    };
    Ok(MiningReport {
        config: config.clone(),
        results,
        failures,
        ranking,
        summary,
    })
}

/// Larger is better; absent sorts after every present value.
fn desc(a: Option<Proportion>, b: Option<Proportion>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => b.cmp(&a),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Smaller is better; absent sorts after every present value.
fn asc(a: Option<Proportion>, b: Option<Proportion>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.cmp(&b),
        _ => desc(a, b),
    }
}

/// Indices of passing results, best first. Final tie-breaks use table
/// identity, then input position.
pub fn rank_models(results: &[CandidateResult], policy: RankPolicy) -> Vec<usize> {
    let mut passing: Vec<usize> = (0..results.len()).filter(|&i| results[i].passed_filter).collect();
    passing.sort_by(|&a, &b| {
        let (x, y) = (&results[a], &results[b]);
        let (mx, my) = (&x.metrics, &y.metrics);
        let primary = match policy {
            RankPolicy::F1ThenFpr => desc(mx.f1, my.f1)
                .then_with(|| asc(mx.fp_rate, my.fp_rate))
                .then_with(|| desc(mx.accuracy, my.accuracy)),
            RankPolicy::AccuracyThenF1 => desc(mx.accuracy, my.accuracy)
                .then_with(|| desc(mx.f1, my.f1))
                .then_with(|| asc(mx.fp_rate, my.fp_rate)),
        };
        primary
            .then_with(|| x.table_id.cmp(&y.table_id))
            .then_with(|| x.input_index.cmp(&y.input_index))
    });
    passing
}

pub const METRICS_COLUMNS: [&str; 16] = [
    "experiment_id",
    "epoch",
    "dataset",
    "n_train",
    "n_test",
    "tp",
    "fn",
    "fp",
    "tn",
    "accuracy",
    "sensitivity",
    "specificity",
    "ppv",
    "fp_rate",
    "f1",
    "passed",
];

/// One metrics.csv row for a candidate.
pub fn metrics_row(r: &CandidateResult) -> Vec<String> {
    let mut row = vec![
        r.table_id.experiment_id.clone(),
        r.table_id.epoch.to_string(),
        r.table_id.dataset.to_string(),
        r.train_size.to_string(),
        r.test_size.to_string(),
        r.cm.tp.to_string(),
        r.cm.fn_.to_string(),
        r.cm.fp.to_string(),
        r.cm.tn.to_string(),
    ];
    row.extend(r.metrics.columns().iter().map(|m| render_metric(*m)));
    row.push(r.passed_filter.to_string());
    row
}

/// metrics.csv contents for a list of candidates.
pub fn metrics_csv<'a>(results: impl IntoIterator<Item = &'a CandidateResult>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS).expect("in-memory write");
    for r in results {
        w.write_record(metrics_row(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn file_token(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Base file name (without extension) for a candidate's tree files.
/// Candidates sharing an identity get their input index appended.
pub fn tree_file_stem(r: &CandidateResult, duplicated: bool) -> String {
    let base = format!(
        "tree_{}_{}_{}",
        file_token(&r.table_id.experiment_id),
        r.table_id.epoch,
        r.table_id.dataset
    );
    if duplicated {
        format!("{base}_{}", r.input_index)
    } else {
        base
    }
}

pub fn summary_text(report: &MiningReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    out.push_str(&format!("candidates: {}\n", report.summary.total));
    out.push_str(&format!("passed: {}\n", report.summary));
    out.push_str(&format!("failed: {}\n", report.failures.len()));
    out.push_str(&format!("accuracy_threshold: {}\n", c.accuracy_threshold));
    out.push_str(&format!("test_fraction: {}\n", c.test_fraction));
    out.push_str(&format!("seed: {}\n", c.seed));
    out.push_str(&format!("max_depth: {}\n", c.tree_config.max_depth));
    out.push_str(&format!("min_samples_split: {}\n", c.tree_config.min_samples_split));
    out.push_str(&format!("rank_policy: {}\n", c.rank_policy));
    out.push_str(&format!("stratified: {}\n", c.stratified));
    out.push_str("\nranking:\n");
    for (rank, r) in report.ranked().enumerate() {
        let m = &r.metrics;
        out.push_str(&format!(
            "{:>4}. {} f1={} fp_rate={} accuracy={} sensitivity={} specificity={}\n",
            rank + 1,
            r.table_id,
            render_metric(m.f1),
            render_metric(m.fp_rate),
            render_metric(m.accuracy),
            render_metric(m.sensitivity),
            render_metric(m.specificity),
        ));
    }
    if !report.failures.is_empty() {
        out.push_str("\nfailures:\n");
        for f in &report.failures {
            out.push_str(&format!("  [{}] {}: {}\n", f.input_index, f.table_id, f.error));
        }
    }
    out
}

/// Writes `metrics.csv`, `summary.txt`, and a JSON and DOT tree file per
/// passing candidate. Returns the written paths in write order.
pub fn render_report(report: &MiningReport, out_dir: &Path) -> Result<Vec<PathBuf>, MiningError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| MiningError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let mut write = |name: &str, contents: &str| -> Result<(), MiningError> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };

    write("metrics.csv", &metrics_csv(&report.results))?;
    for r in report.ranked() {
        let duplicated = report.results.iter().filter(|o| o.table_id == r.table_id).count() > 1;
        let stem = tree_file_stem(r, duplicated);
        write(&format!("{stem}.json"), &export_tree(&r.tree, ExportFormat::Json))?;
        write(&format!("{stem}.dot"), &export_tree(&r.tree, ExportFormat::Dot))?;
    }
    write("summary.txt", &summary_text(report))?;
    Ok(written)
}
