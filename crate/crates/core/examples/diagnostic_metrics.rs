//! Diagnostic metrics from confusion matrices, kept as exact fractions and
//! rounded only for display, plus ROC AUC from raw scores.
//!
//! ```bash
//! cargo run --example diagnostic_metrics
//! ```

use malignancy_miner::datamodel::BinaryLabel;
use malignancy_miner::metrics::{binary_metrics, confusion, render_metric, roc_auc, ConfusionMatrix};

fn main() {
    // (tp, fn, fp, tn) of the best trees on the LIDC, JSRT and combined
    // holdouts.
    let holdouts = [
        ("lidc", ConfusionMatrix::new(13, 2, 1, 4)),
        ("jsrt", ConfusionMatrix::new(16, 0, 9, 6)),
        ("combined", ConfusionMatrix::new(30, 5, 4, 11)),
    ];
    println!("{:<9} {:>3}  acc   sens  spec  ppv   fpr   f1", "holdout", "n");
    for (name, cm) in holdouts {
        let m = binary_metrics(&cm).unwrap();
        let cells: Vec<String> = m.columns().iter().map(|v| render_metric(*v)).collect();
        println!("{name:<9} {:>3}  {}", cm.total(), cells.join(" "));
    }

    let jsrt = binary_metrics(&holdouts[1].1).unwrap();
    let f1 = jsrt.f1.unwrap();
    println!("\njsrt F1 is exactly {f1} = {:.6}", f1.value());

    // Undefined ratios stay absent rather than becoming NaN.
    let no_positives = binary_metrics(&ConfusionMatrix::new(0, 0, 0, 5)).unwrap();
    println!(
        "sensitivity with no malignant truths: {}",
        render_metric(no_positives.sensitivity)
    );

    use BinaryLabel::{Benign, Malignant};
    let truths = [Malignant, Malignant, Benign, Malignant, Benign, Benign];
    let predictions = [Malignant, Benign, Benign, Malignant, Malignant, Benign];
    println!("\n{:?}", confusion(&predictions, &truths).unwrap());

    // Tied scores count one half.
    let scores = [0.9, 0.4, 0.4, 0.7, 0.2, 0.5];
    println!("AUC = {:.4}", roc_auc(&scores, &truths).unwrap());
}
