//! Generate a 25-epoch synthetic series whose classes separate as training
//! progresses, mine one tree per epoch on a worker pool, and write the
//! report directory.
//!
//! ```bash
//! cargo run --example mine_synthetic_series -- /tmp/run1
//! ```

use std::path::PathBuf;

use malignancy_miner::metrics::render_metric;
use malignancy_miner::mining::{mine, mine_with_jobs, render_report, summary_text, MiningConfig};
use malignancy_miner::synth::{epoch_series, SynthConfig};

fn main() {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("malignancy-miner-run"));

    let base = SynthConfig {
        seed: 7,
        ..SynthConfig::default()
    };
    let series = epoch_series(&base, 25).unwrap();

    let config = MiningConfig::with_seed(7);
    let report = mine_with_jobs(&series, &config, 4).unwrap();
    assert_eq!(report, mine(&series, &config).unwrap());

    for r in &report.results {
        println!(
            "epoch {:>2}  acc {}  {}",
            r.table_id.epoch,
            render_metric(r.metrics.accuracy),
            if r.passed_filter { "pass" } else { "fail" }
        );
    }
    println!();
    print!("{}", summary_text(&report));

    let written = render_report(&report, &out).unwrap();
    println!("\nwrote {} files to {}", written.len(), out.display());
}
