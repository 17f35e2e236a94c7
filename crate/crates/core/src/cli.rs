//! The `miner` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 I/O error. Results go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::datamodel::{DatasetTag, ScoreTable};
use crate::ingest::{parse_score_table, write_score_table, IngestError, ParseMode};
use crate::mining::{evaluate_candidate, metrics_csv, mine_with_jobs, render_report, MiningConfig, MiningError};
use crate::preprocess::{self, PreprocessError};
use crate::report::{summarize_best, GroupBy, TableFormat};
use crate::synth::{epoch_series, SynthConfig};
use crate::tree::{export_tree, parse_tree, ExportFormat, TreeConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) => m,
        }
    }
}

impl From<MiningError> for CliError {
    fn from(e: MiningError) -> Self {
        match e {
            MiningError::Io { .. } | MiningError::Pool(_) => CliError::Io(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::Io { .. } => CliError::Io(e.to_string()),
            PreprocessError::Image { ref source, .. } if matches!(source, image::ImageError::IoError(_)) => {
                CliError::Io(e.to_string())
            }
            PreprocessError::BadDimensions { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(
    name = "miner",
    version,
    about = "Mine benign/malignant decision trees from pathology score tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit, filter and rank one tree per score table, then write reports.
    Mine(MineArgs),
    /// Evaluate a single score table and print its metrics row.
    Eval(EvalArgs),
    /// Write a synthetic epoch series of score tables.
    Synth(SynthArgs),
    /// Render a saved tree.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Image pre-processing.
    #[command(subcommand)]
    Prep(PrepCommand),
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Base seed for the train/test splits.
    #[arg(long, env = "MINER_SEED")]
    seed: u64,
    /// Minimum holdout accuracy for a tree to pass.
    #[arg(long, default_value_t = 0.60)]
    threshold: f64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    /// Keep the class ratio in the holdout.
    #[arg(long)]
    stratified: bool,
}

impl FitArgs {
    fn config(&self, strict: bool) -> Result<MiningConfig, CliError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Usage(format!(
                "--threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "--test-fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        Ok(MiningConfig {
            test_fraction: self.test_fraction,
            accuracy_threshold: self.threshold,
            seed: self.seed,
            tree_config: TreeConfig {
                max_depth: self.max_depth,
                ..TreeConfig::default()
            },
            stratified: self.stratified,
            strict,
            ..MiningConfig::default()
        })
    }
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Score files, or directories holding `scores_<experiment>_<epoch>_<dataset>.csv` files.
    #[arg(long, required = true, num_args = 1..)]
    scores: Vec<PathBuf>,
    #[arg(long)]
    dataset: DatasetTag,
    #[command(flatten)]
    fit: FitArgs,
    /// Stop at the first bad row or failing candidate.
    #[arg(long)]
    strict: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Dataset of the file; read from the file name when omitted.
    #[arg(long)]
    dataset: Option<DatasetTag>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 250)]
    n: usize,
    #[arg(long, default_value_t = 25)]
    epochs: u32,
    #[arg(long, env = "MINER_SEED")]
    seed: u64,
    #[arg(long, default_value = "combined")]
    dataset: DatasetTag,
    #[arg(long, default_value = "synth")]
    experiment: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum TreeCommand {
    /// Convert a tree file, DOT by default.
    Export(TreeArgs),
    /// Print a tree, ASCII by default.
    Show(TreeArgs),
}

#[derive(Args, Debug)]
struct TreeArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    format: Option<ExportFormat>,
}

#[derive(Args, Debug)]
struct ImageArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum PrepCommand {
    Equalize(ImageArgs),
    Resize {
        #[command(flatten)]
        io: ImageArgs,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
    },
    /// Mirror horizontally.
    Flip(ImageArgs),
    /// Rotate counter-clockwise.
    Rotate {
        #[command(flatten)]
        io: ImageArgs,
        #[arg(long, allow_negative_numbers = true)]
        degrees: f64,
        /// Grow the canvas to fit the rotated image.
        #[arg(long)]
        expand: bool,
    },
}

/// Runs the command line with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Runs the command line against the given output streams. `args[0]` is
/// the program name.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a, stdout, stderr),
        Command::Eval(a) => cmd_eval(a, stdout, stderr),
        Command::Synth(a) => cmd_synth(a, stdout),
        Command::Tree(c) => cmd_tree(c, stdout),
        Command::Prep(c) => cmd_prep(c),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

/// `(experiment, epoch, dataset)` from a `scores_<experiment>_<epoch>_<dataset>.csv`
/// file name. The experiment id may itself contain underscores.
pub fn parse_scores_file_name(name: &str) -> Option<(String, u32, DatasetTag)> {
    let stem = name.strip_prefix("scores_")?.strip_suffix(".csv")?;
    let mut parts = stem.rsplitn(3, '_');
    let dataset = parts.next()?.parse().ok()?;
    let epoch = parts.next()?.parse().ok()?;
    let experiment = parts.next().filter(|e| !e.is_empty())?;
    Some((experiment.to_string(), epoch, dataset))
}

pub fn scores_file_name(table: &ScoreTable) -> String {
    format!(
        "scores_{}_{}_{}.csv",
        table.experiment_id, table.epoch, table.dataset_tag
    )
}

struct Source {
    path: PathBuf,
    experiment: String,
    epoch: u32,
    dataset: DatasetTag,
}

fn file_source(path: &Path, dataset: Option<DatasetTag>) -> Result<Source, CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let parsed = parse_scores_file_name(name);
    let (experiment, epoch, dataset) = match (parsed, dataset) {
        (Some((_, _, d)), Some(want)) if d != want => {
            return Err(CliError::Usage(format!(
                "{} is tagged {d} but --dataset is {want}",
                path.display()
            )))
        }
        (Some(p), _) => p,
        (None, Some(d)) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scores");
            (stem.to_string(), 0, d)
        }
        (None, None) => {
            return Err(CliError::Usage(format!(
                "cannot tell the dataset of {}; pass --dataset",
                path.display()
            )))
        }
    };
    Ok(Source {
        path: path.to_path_buf(),
        experiment,
        epoch,
        dataset,
    })
}

/// Expands directories to their matching score files, sorted by name.
fn collect_sources(paths: &[PathBuf], dataset: DatasetTag) -> Result<Vec<Source>, CliError> {
    let mut sources = Vec::new();
    for path in paths {
        let meta = fs::metadata(path).map_err(|e| io_error(path, e))?;
        if !meta.is_dir() {
            sources.push(file_source(path, Some(dataset))?);
            continue;
        }
        let mut found: Vec<(String, PathBuf)> = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| io_error(path, e))? {
            let entry = entry.map_err(|e| io_error(path, e))?;
            if let Some(name) = entry.file_name().to_str() {
                if parse_scores_file_name(name).is_some_and(|(_, _, d)| d == dataset) {
                    found.push((name.to_string(), entry.path()));
                }
            }
        }
        found.sort();
        for (_, p) in found {
            sources.push(file_source(&p, Some(dataset))?);
        }
    }
    if sources.is_empty() {
        return Err(CliError::Data(format!("no {dataset} score tables found")));
    }
    Ok(sources)
}

/// Loads a score table. Problems are printed to stderr; a strict parse
/// turns the first one into an error.
fn load(source: &Source, mode: ParseMode, stderr: &mut dyn Write) -> Result<(ScoreTable, usize), CliError> {
    let bytes = fs::read(&source.path).map_err(|e| io_error(&source.path, e))?;
    let shown = source.path.display();
    let parsed =
        parse_score_table(&bytes, source.dataset, &source.experiment, source.epoch, mode).map_err(|e| match e {
            IngestError::Schema(i) | IngestError::Strict(i) => CliError::Data(format!("{shown}: {i}")),
        })?;
    let mut problems = 0;
    for issue in &parsed.issues {
        if !issue.kind.is_informational() {
            problems += 1;
        }
        let _ = writeln!(stderr, "{shown}: {issue}");
    }
    Ok((parsed.table, problems))
}

fn cmd_mine(a: MineArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = a.fit.config(a.strict)?;
    let mode = if a.strict {
        ParseMode::Strict
    } else {
        ParseMode::Lenient
    };
    let sources = collect_sources(&a.scores, a.dataset)?;
    let mut tables = Vec::with_capacity(sources.len());
    for s in &sources {
        tables.push(load(s, mode, stderr)?.0);
    }
    let report = mine_with_jobs(&tables, &config, a.jobs)?;
    render_report(&report, &a.out)?;
    for f in &report.failures {
        let _ = writeln!(stderr, "candidate {} failed: {}", f.table_id, f.error);
    }
    let _ = writeln!(
        stderr,
        "mined {} candidates, passed {}",
        report.summary.total, report.summary
    );
    write!(
        stdout,
        "{}",
        summarize_best(&report, GroupBy::Experiment, TableFormat::Csv)
    )
    .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn cmd_eval(a: EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = a.fit.config(true)?;
    let source = file_source(&a.scores, a.dataset)?;
    let (table, problems) = load(&source, ParseMode::Lenient, stderr)?;
    if problems > 0 {
        return Err(CliError::Data(format!(
            "{}: {problems} invalid rows",
            source.path.display()
        )));
    }
    let result = evaluate_candidate(&table, &config)?;
    write!(stdout, "{}", metrics_csv([&result])).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn cmd_synth(a: SynthArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let base = SynthConfig {
        n_records: a.n,
        seed: a.seed,
        experiment_id: a.experiment,
        dataset: a.dataset,
        ..SynthConfig::default()
    };
    if base.experiment_id.is_empty() || base.experiment_id.contains(['/', '\\']) {
        return Err(CliError::Usage(format!(
            "--experiment {:?} is not usable in a file name",
            base.experiment_id
        )));
    }
    let series = epoch_series(&base, a.epochs).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    for table in &series {
        let path = a.out.join(scores_file_name(table));
        fs::write(&path, write_score_table(table)).map_err(|e| io_error(&path, e))?;
        writeln!(stdout, "{}", path.display()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    }
    Ok(())
}

fn cmd_tree(c: TreeCommand, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (args, default) = match c {
        TreeCommand::Export(a) => (a, ExportFormat::Dot),
        TreeCommand::Show(a) => (a, ExportFormat::Ascii),
    };
    let text = fs::read_to_string(&args.tree).map_err(|e| io_error(&args.tree, e))?;
    let tree = parse_tree(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.tree.display())))?;
    write!(stdout, "{}", export_tree(&tree, args.format.unwrap_or(default)))
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

type ImageOp = Box<dyn Fn(&preprocess::GrayImage) -> Result<preprocess::GrayImage, PreprocessError>>;

fn cmd_prep(c: PrepCommand) -> Result<(), CliError> {
    let (io, op): (ImageArgs, ImageOp) = match c {
        PrepCommand::Equalize(io) => (io, Box::new(preprocess::equalize)),
        PrepCommand::Resize { io, width, height } => (io, Box::new(move |img| preprocess::resize(img, width, height))),
        PrepCommand::Flip(io) => (io, Box::new(|img| Ok(preprocess::hflip(img)))),
        PrepCommand::Rotate { io, degrees, expand } => {
            if !degrees.is_finite() {
                return Err(CliError::Usage(format!("--degrees {degrees} is not finite")));
            }
            (io, Box::new(move |img| Ok(preprocess::rotate(img, degrees, expand))))
        }
    };
    let img = preprocess::load_png(&io.input)?;
    preprocess::save_png(&op(&img)?, &io.out)?;
    Ok(())
}
