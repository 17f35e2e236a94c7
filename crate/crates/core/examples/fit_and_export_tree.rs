//! Fit a depth-limited entropy tree on a handful of records and render it
//! as ASCII, Graphviz DOT and JSON.
//!
//! ```bash
//! cargo run --example fit_and_export_tree
//! cargo run --example fit_and_export_tree | dot -Tpng > tree.png   # DOT part only
//! ```

use malignancy_miner::datamodel::{BinaryLabel, Feature, FeatureVector, LabeledRecord, Provenance};
use malignancy_miner::tree::{best_split, export_tree, fit_tree, parse_tree, ExportFormat, TreeConfig};

fn record(id: &str, scores: [f64; 5], label: BinaryLabel) -> LabeledRecord {
    LabeledRecord::new(id, FeatureVector::new(scores).unwrap(), label, Provenance::Lidc).unwrap()
}

fn main() {
    use BinaryLabel::{Benign, Malignant};
    //                         Atel  Effu  Mass  NoF   Nod
    let records = vec![
        record("P01", [0.10, 0.20, 0.80, 0.10, 0.70], Malignant),
        record("P02", [0.20, 0.10, 0.75, 0.20, 0.40], Malignant),
        record("P03", [0.30, 0.30, 0.20, 0.80, 0.30], Benign),
        record("P04", [0.10, 0.40, 0.25, 0.70, 0.60], Malignant),
        record("P05", [0.20, 0.20, 0.15, 0.90, 0.20], Benign),
        record("P06", [0.40, 0.10, 0.30, 0.60, 0.25], Benign),
        record("P07", [0.30, 0.20, 0.90, 0.30, 0.80], Malignant),
        record("P08", [0.20, 0.30, 0.55, 0.75, 0.30], Malignant),
    ];

    let root_split = best_split(&records, &Feature::ALL)
        .unwrap()
        .expect("records are separable");
    println!(
        "root split: {} <= {:.3} (gain {:.3} bits)\n",
        root_split.feature.name(),
        root_split.threshold,
        root_split.information_gain_bits
    );

    let tree = fit_tree(&records, &TreeConfig::default()).unwrap();
    println!("depth {}, {} nodes\n", tree.depth(), tree.node_count());
    print!("{}", export_tree(&tree, ExportFormat::Ascii));

    let probe = FeatureVector::new([0.2, 0.2, 0.3, 0.7, 0.62]).unwrap();
    println!("\nprobe -> {}\n", tree.predict(&probe));

    let json = export_tree(&tree, ExportFormat::Json);
    assert_eq!(parse_tree(&json).unwrap(), tree);
    println!("{json}");
    print!("{}", export_tree(&tree, ExportFormat::Dot));
}
