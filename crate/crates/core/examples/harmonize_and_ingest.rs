//! Read raw LIDC and JSRT score files, harmonize their diagnoses to
//! benign/malignant, combine them and write the result back out.
//!
//! ```bash
//! cargo run --example harmonize_and_ingest
//! ```

use malignancy_miner::datamodel::{combine_datasets, BinaryLabel, DatasetTag};
use malignancy_miner::ingest::{parse_score_table, write_score_table, ParseMode};

// LIDC diagnosis levels: 0 unknown (dropped), 1 benign, 2 and 3 malignant.
// Row 4 has an out-of-range Mass score and is skipped in lenient mode.
const LIDC: &str = "\
PatientID,Atelectasis,Effusion,Mass,NoFinding,Nodule,Diagnosis
LIDC-0001,0.12,0.08,0.71,0.20,0.66,3
LIDC-0002,0.05,0.11,0.18,0.81,0.22,1
LIDC-0003,0.31,0.27,0.44,0.40,0.52,0
LIDC-0004,0.22,0.09,1.70,0.35,0.61,2
LIDC-0005,0.18,0.14,0.62,0.28,0.58,2
";

const JSRT: &str = "\
PatientID,Atelectasis,Effusion,Mass,NoFinding,Nodule,Diagnosis
JPCLN001,0.09,0.06,0.25,0.77,0.31,benign
JPCLN002,0.15,0.19,0.68,0.24,0.73,malignant
";

fn main() {
    let lidc = parse_score_table(LIDC.as_bytes(), DatasetTag::Lidc, "demo", 1, ParseMode::Lenient).unwrap();
    println!("LIDC: {} records kept", lidc.table.len());
    for issue in &lidc.issues {
        println!("  {issue}");
    }

    let jsrt = parse_score_table(JSRT.as_bytes(), DatasetTag::Jsrt, "demo", 1, ParseMode::Lenient).unwrap();
    println!("JSRT: {} records kept", jsrt.table.len());

    // Strict mode stops at the first bad row instead.
    let strict = parse_score_table(LIDC.as_bytes(), DatasetTag::Lidc, "demo", 1, ParseMode::Strict);
    println!("strict LIDC parse: {}", strict.unwrap_err());

    let combined = combine_datasets(&lidc.table, &jsrt.table).unwrap();
    println!(
        "combined: {} benign, {} malignant",
        combined.count(BinaryLabel::Benign),
        combined.count(BinaryLabel::Malignant)
    );

    let text = write_score_table(&combined);
    println!("\n{text}");

    let reread = parse_score_table(text.as_bytes(), DatasetTag::Combined, "demo", 1, ParseMode::Strict).unwrap();
    assert_eq!(reread.table, combined);
    println!("round trip ok");
}
