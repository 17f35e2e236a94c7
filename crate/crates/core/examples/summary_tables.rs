//! Compare several mining runs: the best tree per experiment and dataset,
//! and each run's pass rate.
//!
//! ```bash
//! cargo run --example summary_tables
//! ```

use malignancy_miner::datamodel::DatasetTag;
use malignancy_miner::mining::{mine, MiningConfig};
use malignancy_miner::report::{pass_rate_table, summarize_best, GroupBy, TableFormat};
use malignancy_miner::synth::{epoch_series, SynthConfig};

fn main() {
    let config = MiningConfig::with_seed(11);
    let mut runs = Vec::new();
    // Two "experiments" of different difficulty, each scored on two datasets.
    for (experiment, separability) in [("A", 1.0), ("B", 0.5)] {
        let mut tables = Vec::new();
        for (dataset, n) in [(DatasetTag::Lidc, 96), (DatasetTag::Jsrt, 154)] {
            let base = SynthConfig {
                n_records: n,
                separability,
                experiment_id: experiment.to_string(),
                dataset,
                seed: 3,
                ..SynthConfig::default()
            };
            tables.extend(epoch_series(&base, 10).unwrap());
        }
        runs.push(mine(&tables, &config).unwrap());
    }

    for run in &runs {
        println!("{}", summarize_best(run, GroupBy::Dataset, TableFormat::Text));
    }

    let all: Vec<_> = runs.iter().collect();
    print!("{}", pass_rate_table(&all, TableFormat::Text));
    println!();
    print!("{}", pass_rate_table(&all, TableFormat::Csv));
}
