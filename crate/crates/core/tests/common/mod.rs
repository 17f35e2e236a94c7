//! Independent reference implementations and input generators shared by
//! the integration tests. Nothing here calls into the code under test
//! except for data types and the seeded generator used to make inputs.

#![allow(dead_code)]

use malignancy_miner::datamodel::{
    BinaryLabel, DatasetTag, Feature, FeatureVector, LabeledRecord, Provenance, ScoreTable,
};
use malignancy_miner::rng::SplitMix64;
use malignancy_miner::tree::{TreeConfig, TreeNode};

pub const TIE_TOLERANCE: f64 = 1e-12;

/// Tree shape used for node-for-node comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Split {
        feature: usize,
        threshold: f64,
        counts: (usize, usize),
        left: Box<Shape>,
        right: Box<Shape>,
    },
    Leaf {
        malignant: bool,
        counts: (usize, usize),
    },
}

pub fn shape_of(node: &TreeNode) -> Shape {
    match node {
        TreeNode::Internal {
            feature,
            threshold,
            stats,
            left,
            right,
        } => Shape::Split {
            feature: feature.index(),
            threshold: *threshold,
            counts: (stats.class_counts.benign, stats.class_counts.malignant),
            left: Box::new(shape_of(left)),
            right: Box::new(shape_of(right)),
        },
        TreeNode::Leaf { label, stats } => Shape::Leaf {
            malignant: label.is_malignant(),
            counts: (stats.class_counts.benign, stats.class_counts.malignant),
        },
    }
}

fn oracle_entropy(benign: usize, malignant: usize) -> f64 {
    let n = (benign + malignant) as f64;
    [benign, malignant]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn counts(records: &[&LabeledRecord]) -> (usize, usize) {
    let m = records.iter().filter(|r| r.label.is_malignant()).count();
    (records.len() - m, m)
}

/// Brute-force greedy tree: at every node, every feature and every
/// midpoint between consecutive distinct values is tried by partitioning
/// the records from scratch. Among splits within the tie tolerance of the
/// best gain, the lowest feature index and then the lowest threshold win.
pub fn oracle_tree(records: &[LabeledRecord], config: &TreeConfig) -> Shape {
    let refs: Vec<&LabeledRecord> = records.iter().collect();
    oracle_grow(&refs, 0, config)
}

fn oracle_grow(records: &[&LabeledRecord], depth: usize, config: &TreeConfig) -> Shape {
    let (b, m) = counts(records);
    let leaf = Shape::Leaf {
        malignant: m >= b,
        counts: (b, m),
    };
    if b == 0 || m == 0 || depth >= config.max_depth || records.len() < config.min_samples_split.max(2) {
        return leaf;
    }
    let parent = oracle_entropy(b, m);
    let n = records.len() as f64;
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for f in 0..Feature::COUNT {
        let mut values: Vec<f64> = records.iter().map(|r| r.features.as_array()[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            let (left, right): (Vec<&LabeledRecord>, Vec<&LabeledRecord>) =
                records.iter().partition(|r| r.features.as_array()[f] <= t);
            let (lb, lm) = counts(&left);
            let (rb, rm) = counts(&right);
            let gain = parent
                - (left.len() as f64 / n) * oracle_entropy(lb, lm)
                - (right.len() as f64 / n) * oracle_entropy(rb, rm);
            candidates.push((f, t, gain));
        }
    }
    let best_gain = candidates.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    if best_gain <= TIE_TOLERANCE {
        return leaf;
    }
    let &(feature, threshold, _) = candidates
        .iter()
        .filter(|c| c.2 >= best_gain - TIE_TOLERANCE)
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .unwrap();
    let (left, right): (Vec<&LabeledRecord>, Vec<&LabeledRecord>) = records
        .iter()
        .partition(|r| r.features.as_array()[feature] <= threshold);
    Shape::Split {
        feature,
        threshold,
        counts: (b, m),
        left: Box::new(oracle_grow(&left, depth + 1, config)),
        right: Box::new(oracle_grow(&right, depth + 1, config)),
    }
}

/// AUC as the share of (malignant, benign) pairs ordered correctly, ties
/// counting one half, computed in integers.
pub fn pair_count_auc(scores: &[f64], truths: &[BinaryLabel]) -> f64 {
    let mut twice_wins = 0u64;
    let mut pairs = 0u64;
    for (i, ti) in truths.iter().enumerate() {
        if !ti.is_malignant() {
            continue;
        }
        for (j, tj) in truths.iter().enumerate() {
            if tj.is_malignant() {
                continue;
            }
            pairs += 1;
            twice_wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

/// `num/den` in thousandths, rounded half away from zero; `None` for an
/// empty denominator.
pub fn thousandths(num: u64, den: u64) -> Option<u64> {
    (den > 0).then(|| (2000 * num + den) / (2 * den))
}

/// Every `(tp, fn, fp, tn)` with the given total whose accuracy,
/// sensitivity, specificity, PPV, FP rate and F1 round to the printed
/// thousandths.
pub fn matrices_matching(total: u64, printed: [u64; 6]) -> Vec<(u64, u64, u64, u64)> {
    let mut out = Vec::new();
    for tp in 0..=total {
        for fn_ in 0..=total - tp {
            for fp in 0..=total - tp - fn_ {
                let tn = total - tp - fn_ - fp;
                let values = [
                    thousandths(tp + tn, total),
                    thousandths(tp, tp + fn_),
                    thousandths(tn, tn + fp),
                    thousandths(tp, tp + fp),
                    thousandths(fp, fp + tn),
                    thousandths(2 * tp, 2 * tp + fn_ + fp),
                ];
                if values.iter().zip(printed).all(|(v, p)| *v == Some(p)) {
                    out.push((tp, fn_, fp, tn));
                }
            }
        }
    }
    out
}

pub fn grid_value(rng: &mut SplitMix64, steps: u64) -> f64 {
    rng.below(steps + 1) as f64 / steps as f64
}

/// A random tree-fitting instance: up to 30 records on a coarse grid so
/// that values tie, labels driven by at most three features plus noise.
pub fn random_instance(rng: &mut SplitMix64) -> (Vec<LabeledRecord>, TreeConfig) {
    let n = 1 + rng.below(30) as usize;
    let n_informative = 1 + rng.below(3) as usize;
    let mut features: Vec<usize> = (0..Feature::COUNT).collect();
    rng.shuffle(&mut features);
    let informative = &features[..n_informative];
    let steps = [4, 10, 20][rng.below(3) as usize];
    let cuts: Vec<f64> = informative.iter().map(|_| grid_value(rng, steps)).collect();
    let noise = rng.below(4) as f64 * 0.05;

    let records = (0..n)
        .map(|i| {
            let mut scores = [0.0; Feature::COUNT];
            for s in scores.iter_mut() {
                *s = grid_value(rng, steps);
            }
            let votes = informative.iter().zip(&cuts).filter(|(f, c)| scores[**f] > **c).count();
            let mut malignant = 2 * votes >= n_informative;
            if rng.next_f64() < noise {
                malignant = !malignant;
            }
            let label = if malignant {
                BinaryLabel::Malignant
            } else {
                BinaryLabel::Benign
            };
            LabeledRecord::new(
                format!("R{i}"),
                FeatureVector::new(scores).unwrap(),
                label,
                Provenance::Lidc,
            )
            .unwrap()
        })
        .collect();
    let config = if rng.below(2) == 0 {
        TreeConfig::default()
    } else {
        TreeConfig {
            max_depth: rng.below(5) as usize,
            min_samples_split: 2 + rng.below(4) as usize,
        }
    };
    (records, config)
}

/// Labels are fair coin flips independent of the uniformly drawn scores.
pub fn coin_flip_table(n: usize, seed: u64) -> ScoreTable {
    let mut rng = SplitMix64::new(seed);
    let mut table = ScoreTable::new("coin", 1, DatasetTag::Lidc);
    for i in 0..n {
        let mut scores = [0.0; Feature::COUNT];
        for s in scores.iter_mut() {
            *s = rng.next_f64();
        }
        let label = if rng.below(2) == 1 {
            BinaryLabel::Malignant
        } else {
            BinaryLabel::Benign
        };
        table.records.push(
            LabeledRecord::new(
                format!("C{i:03}"),
                FeatureVector::new(scores).unwrap(),
                label,
                Provenance::Lidc,
            )
            .unwrap(),
        );
    }
    table
}
