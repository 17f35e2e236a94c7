//! Depth-limited binary decision trees grown on the entropy criterion.
//!
//! Induction is greedy: at each node every allowed feature is scanned for
//! the threshold that maximizes information gain, where candidate
//! thresholds are midpoints between consecutive distinct values. Records
//! with `feature <= threshold` go left. Ties in gain go to the lower feature
//! index, then the lower threshold. A node becomes a leaf when it is pure,
//! has reached `max_depth`, holds fewer than `min_samples_split` records, or
//! has no split with positive gain. Leaves predict the majority class, and a
//! tied leaf predicts `Malignant`.
//!
//! The fitted tree depends only on the multiset of training records, not on
//! their order.

mod export;

pub use export::{export_tree, parse_tree, ExportFormat};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{BinaryLabel, Feature, FeatureVector, LabeledRecord};

/// Gains closer than this are treated as equal for tie-breaking, and a
/// split must gain more than this to be taken.
pub const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("entropy of an empty node is undefined")]
    EmptyNode,
    #[error("need at least 2 records to search for a split, got {0}")]
    TooFewSamples(usize),
    #[error("cannot fit a tree to an empty dataset")]
    EmptyDataset,
    #[error("invalid tree document: {0}")]
    TreeParseError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 3,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub benign: usize,
    pub malignant: usize,
}

impl ClassCounts {
    pub fn new(benign: usize, malignant: usize) -> Self {
        ClassCounts { benign, malignant }
    }

    pub fn of<'a>(labels: impl IntoIterator<Item = &'a BinaryLabel>) -> Self {
        let mut counts = ClassCounts::default();
        for label in labels {
            counts.add(*label);
        }
        counts
    }

    pub fn add(&mut self, label: BinaryLabel) {
        match label {
            BinaryLabel::Benign => self.benign += 1,
            BinaryLabel::Malignant => self.malignant += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.benign + self.malignant
    }

    pub fn is_pure(&self) -> bool {
        self.benign == 0 || self.malignant == 0
    }

    /// Majority class; an even split goes to `Malignant`.
    pub fn majority(&self) -> BinaryLabel {
        if self.benign > self.malignant {
            BinaryLabel::Benign
        } else {
            BinaryLabel::Malignant
        }
    }
}

/// Shannon entropy in bits, with `0 * log2(0) = 0`.
pub fn entropy(counts: ClassCounts) -> Result<f64, TreeError> {
    let total = counts.total();
    if total == 0 {
        return Err(TreeError::EmptyNode);
    }
    let n = total as f64;
    let h = [counts.benign, counts.malignant]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    // -0.0 for pure nodes
    Ok(h.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub n_samples: usize,
    pub class_counts: ClassCounts,
    pub entropy_bits: f64,
}

impl NodeStats {
    fn from_counts(counts: ClassCounts) -> Self {
        NodeStats {
            n_samples: counts.total(),
            class_counts: counts,
            entropy_bits: entropy(counts).expect("nodes are never empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: Feature,
        threshold: f64,
        stats: NodeStats,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: BinaryLabel,
        stats: NodeStats,
    },
}

impl TreeNode {
    pub fn stats(&self) -> &NodeStats {
        match self {
            TreeNode::Internal { stats, .. } | TreeNode::Leaf { stats, .. } => stats,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Depth of the deepest leaf below this node, counting this node as 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { .. } => out.push(node),
                TreeNode::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub config: TreeConfig,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn predict(&self, features: &FeatureVector) -> BinaryLabel {
        predict(self, features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: Feature,
    pub threshold: f64,
    pub information_gain_bits: f64,
}

/// The best entropy split of `records` over `allowed_features`, or `None`
/// when no split has positive gain.
pub fn best_split(
    records: &[LabeledRecord],
    allowed_features: &[Feature],
) -> Result<Option<SplitCandidate>, TreeError> {
    if records.len() < 2 {
        return Err(TreeError::TooFewSamples(records.len()));
    }
    let refs: Vec<&LabeledRecord> = records.iter().collect();
    Ok(best_split_of(&refs, allowed_features))
}

fn best_split_of(records: &[&LabeledRecord], allowed_features: &[Feature]) -> Option<SplitCandidate> {
    let parent = ClassCounts::of(records.iter().map(|r| &r.label));
    let parent_entropy = entropy(parent).ok()?;
    let n = records.len() as f64;

    let mut features = allowed_features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<SplitCandidate> = None;
    let mut sorted: Vec<(f64, BinaryLabel)> = Vec::with_capacity(records.len());
    for feature in features {
        sorted.clear();
        sorted.extend(records.iter().map(|r| (r.features.get(feature), r.label)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut left = ClassCounts::default();
        for i in 0..sorted.len() - 1 {
            left.add(sorted[i].1);
            let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
            if lo == hi {
                continue;
            }
            let right = ClassCounts::new(parent.benign - left.benign, parent.malignant - left.malignant);
            let weighted =
                (left.total() as f64 * entropy(left).ok()? + right.total() as f64 * entropy(right).ok()?) / n;
            let gain = parent_entropy - weighted;
            let threshold = midpoint(lo, hi);
            // Thresholds ascend within a feature and features ascend, so a
            // strictly larger gain is needed to displace the incumbent.
            let better = match best {
                None => gain > GAIN_TOLERANCE,
                Some(b) => gain > b.information_gain_bits + GAIN_TOLERANCE,
            };
            if better {
                best = Some(SplitCandidate {
                    feature,
                    threshold,
                    information_gain_bits: gain.max(0.0),
                });
            }
        }
    }
    best
}

/// Midpoint of two distinct values that still separates them under `<=`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

pub fn fit_tree(records: &[LabeledRecord], config: &TreeConfig) -> Result<DecisionTree, TreeError> {
    if records.is_empty() {
        return Err(TreeError::EmptyDataset);
    }
    let refs: Vec<&LabeledRecord> = records.iter().collect();
    let root = grow(&refs, 0, config);
    Ok(DecisionTree { config: *config, root })
}

fn grow(records: &[&LabeledRecord], depth: usize, config: &TreeConfig) -> TreeNode {
    let counts = ClassCounts::of(records.iter().map(|r| &r.label));
    let stats = NodeStats::from_counts(counts);
    let leaf = || TreeNode::Leaf {
        label: counts.majority(),
        stats,
    };
    if counts.is_pure() || depth >= config.max_depth || records.len() < config.min_samples_split.max(2) {
        return leaf();
    }
    let Some(split) = best_split_of(records, &Feature::ALL) else {
        return leaf();
    };
    let (left, right): (Vec<&LabeledRecord>, Vec<&LabeledRecord>) = records
        .iter()
        .partition(|r| r.features.get(split.feature) <= split.threshold);
    TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        stats,
        left: Box::new(grow(&left, depth + 1, config)),
        right: Box::new(grow(&right, depth + 1, config)),
    }
}

pub fn predict(tree: &DecisionTree, features: &FeatureVector) -> BinaryLabel {
    let mut node = &tree.root;
    loop {
        match node {
            TreeNode::Leaf { label, .. } => return *label,
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                node = if features.get(*feature) <= *threshold {
                    left
                } else {
                    right
                };
            }
        }
    }
}
