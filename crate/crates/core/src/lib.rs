//! Mine shallow decision trees that stratify lung nodules as benign or
//! malignant from five per-image pathology scores (Atelectasis, Effusion,
//! Mass, NoFinding, Nodule).
//!
//! Each score table comes from one (experiment, epoch, dataset) run of an
//! upstream classifier. Mining harmonizes the diagnoses, holds out 20% of
//! the records with a seeded shuffle, fits a depth-3 entropy tree on the
//! rest and keeps it if holdout accuracy reaches 60%. Kept trees are ranked
//! by F1, then FP rate.
//!
//! ## Examples
//!
//! ```text
//! examples/
//! ├── harmonize_and_ingest.rs    # LIDC/JSRT labels, lenient and strict parsing
//! ├── fit_and_export_tree.rs     # fit one tree, ASCII / DOT / JSON
//! ├── diagnostic_metrics.rs      # exact metrics from confusion matrices, AUC
//! ├── mine_synthetic_series.rs   # 25-epoch series, parallel mining, reports
//! ├── preprocess_image.rs        # equalize, resize, flip, rotate, PNG
//! └── summary_tables.rs          # best tree per group, pass rates
//! ```
//!
//! ```bash
//! cargo run --example harmonize_and_ingest
//! cargo run --example mine_synthetic_series -- /tmp/run1
//! ```
//!
//! The `miner` binary exposes the same pipeline:
//!
//! ```bash
//! miner synth --n 250 --epochs 25 --seed 7 --out tables/
//! miner mine --scores tables/ --dataset combined --seed 7 --out run1/
//! miner tree show --tree run1/tree_synth_18_combined.json
//! ```
//!
//! ## Modules
//!
//! - [`datamodel`]: records, labels, score tables, diagnosis harmonization
//! - [`ingest`]: score-table CSV reading and writing
//! - [`tree`]: tree fitting, prediction and export
//! - [`metrics`]: confusion matrices, diagnostic ratios, ROC AUC
//! - [`mining`]: splitting, filtering, ranking, report files
//! - [`synth`]: synthetic score tables
//! - [`preprocess`]: grayscale image normalization
//! - [`report`]: summary tables across runs
//! - [`cli`]: the `miner` command line

pub mod cli;
pub mod datamodel;
pub mod ingest;
pub mod metrics;
pub mod mining;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod synth;
pub mod tree;
