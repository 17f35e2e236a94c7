//! Text renderings of fitted trees.
//!
//! * JSON (`"schema": "tree/1"`) is lossless and is the only format that can
//!   be parsed back.
//! * DOT is a Graphviz digraph whose node labels read
//!   `feature <= threshold / entropy / samples / value / class`.
//! * ASCII is an indented branch listing.
//!
//! All formats visit nodes in pre-order, left child first, and end with a
//! newline.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ClassCounts, DecisionTree, NodeStats, TreeConfig, TreeError, TreeNode};
use crate::datamodel::{BinaryLabel, Feature};

pub const TREE_SCHEMA: &str = "tree/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
    Ascii,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            "ascii" => Ok(ExportFormat::Ascii),
            other => Err(format!("unknown tree format {other:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    schema: String,
    max_depth: usize,
    min_samples_split: usize,
    root: NodeDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NodeDoc {
    Internal {
        feature: Feature,
        feature_index: usize,
        threshold: f64,
        n_samples: usize,
        class_counts: [usize; 2],
        entropy_bits: f64,
        left: Box<NodeDoc>,
        right: Box<NodeDoc>,
    },
    Leaf {
        label: BinaryLabel,
        n_samples: usize,
        class_counts: [usize; 2],
        entropy_bits: f64,
    },
}

impl From<&TreeNode> for NodeDoc {
    fn from(node: &TreeNode) -> Self {
        match node {
            TreeNode::Internal {
                feature,
                threshold,
                stats,
                left,
                right,
            } => NodeDoc::Internal {
                feature: *feature,
                feature_index: feature.index(),
                threshold: *threshold,
                n_samples: stats.n_samples,
                class_counts: [stats.class_counts.benign, stats.class_counts.malignant],
                entropy_bits: stats.entropy_bits,
                left: Box::new(NodeDoc::from(left.as_ref())),
                right: Box::new(NodeDoc::from(right.as_ref())),
            },
            TreeNode::Leaf { label, stats } => NodeDoc::Leaf {
                label: *label,
                n_samples: stats.n_samples,
                class_counts: [stats.class_counts.benign, stats.class_counts.malignant],
                entropy_bits: stats.entropy_bits,
            },
        }
    }
}

fn bad(msg: impl Into<String>) -> TreeError {
    TreeError::TreeParseError(msg.into())
}

fn checked_stats(n_samples: usize, counts: [usize; 2], entropy_bits: f64) -> Result<NodeStats, TreeError> {
    let class_counts = ClassCounts::new(counts[0], counts[1]);
    if class_counts.total() != n_samples {
        return Err(bad(format!(
            "class counts {counts:?} do not sum to n_samples {n_samples}"
        )));
    }
    if n_samples == 0 {
        return Err(bad("node with zero samples"));
    }
    if !entropy_bits.is_finite() || entropy_bits < 0.0 {
        return Err(bad(format!("entropy {entropy_bits} must be finite and non-negative")));
    }
    Ok(NodeStats {
        n_samples,
        class_counts,
        entropy_bits,
    })
}

impl NodeDoc {
    fn into_node(self, depth: usize, max_depth: usize) -> Result<TreeNode, TreeError> {
        if depth > max_depth {
            return Err(bad(format!("node at depth {depth} exceeds max_depth {max_depth}")));
        }
        match self {
            NodeDoc::Leaf {
                label,
                n_samples,
                class_counts,
                entropy_bits,
            } => Ok(TreeNode::Leaf {
                label,
                stats: checked_stats(n_samples, class_counts, entropy_bits)?,
            }),
            NodeDoc::Internal {
                feature,
                feature_index,
                threshold,
                n_samples,
                class_counts,
                entropy_bits,
                left,
                right,
            } => {
                if feature.index() != feature_index {
                    return Err(bad(format!("feature {feature} does not have index {feature_index}")));
                }
                if !threshold.is_finite() {
                    return Err(bad("threshold must be finite"));
                }
                let stats = checked_stats(n_samples, class_counts, entropy_bits)?;
                let left = left.into_node(depth + 1, max_depth)?;
                let right = right.into_node(depth + 1, max_depth)?;
                if left.stats().n_samples + right.stats().n_samples != n_samples {
                    return Err(bad("children's samples do not sum to their parent's"));
                }
                Ok(TreeNode::Internal {
                    feature,
                    threshold,
                    stats,
                    left: Box::new(left),
                    right: Box::new(right),
                })
            }
        }
    }
}

pub fn export_tree(tree: &DecisionTree, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => to_json(tree),
        ExportFormat::Dot => to_dot(tree),
        ExportFormat::Ascii => to_ascii(tree),
    }
}

fn to_json(tree: &DecisionTree) -> String {
    let doc = TreeDoc {
        schema: TREE_SCHEMA.to_string(),
        max_depth: tree.config.max_depth,
        min_samples_split: tree.config.min_samples_split,
        root: NodeDoc::from(&tree.root),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("tree documents always serialize");
    out.push('\n');
    out
}

/// Inverse of the JSON export. Rejects documents with a different schema
/// tag or inconsistent node counts.
pub fn parse_tree(text: &str) -> Result<DecisionTree, TreeError> {
    let doc: TreeDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.schema != TREE_SCHEMA {
        return Err(bad(format!("unsupported schema {:?}", doc.schema)));
    }
    let root = doc.root.into_node(0, doc.max_depth)?;
    Ok(DecisionTree {
        config: TreeConfig {
            max_depth: doc.max_depth,
            min_samples_split: doc.min_samples_split,
        },
        root,
    })
}

fn stats_lines(stats: &NodeStats) -> String {
    format!(
        "entropy = {:.3}\\nsamples = {}\\nvalue = [{}, {}]\\nclass = {}",
        stats.entropy_bits,
        stats.n_samples,
        stats.class_counts.benign,
        stats.class_counts.malignant,
        stats.class_counts.majority(),
    )
}

fn to_dot(tree: &DecisionTree) -> String {
    let mut out = String::new();
    out.push_str("digraph Tree {\n");
    out.push_str("node [shape=box, style=\"rounded\", fontname=\"helvetica\"] ;\n");
    out.push_str("edge [fontname=\"helvetica\"] ;\n");
    let mut next_id = 0usize;
    dot_node(&tree.root, None, &mut next_id, &mut out);
    out.push_str("}\n");
    out
}

fn dot_node(node: &TreeNode, parent: Option<(usize, bool)>, next_id: &mut usize, out: &mut String) {
    let id = *next_id;
    *next_id += 1;
    match node {
        TreeNode::Internal {
            feature,
            threshold,
            stats,
            ..
        } => {
            let _ = writeln!(
                out,
                "{id} [label=\"{feature} <= {threshold:.3}\\n{}\"] ;",
                stats_lines(stats)
            );
        }
        TreeNode::Leaf { label, stats } => {
            let _ = writeln!(
                out,
                "{id} [label=\"entropy = {:.3}\\nsamples = {}\\nvalue = [{}, {}]\\nclass = {label}\"] ;",
                stats.entropy_bits, stats.n_samples, stats.class_counts.benign, stats.class_counts.malignant,
            );
        }
    }
    if let Some((parent_id, is_left)) = parent {
        // Only the root's edges carry True/False, as in the usual rendering.
        if parent_id == 0 {
            let (angle, text) = if is_left { (45, "True") } else { (-45, "False") };
            let _ = writeln!(
                out,
                "{parent_id} -> {id} [labeldistance=2.5, labelangle={angle}, headlabel=\"{text}\"] ;"
            );
        } else {
            let _ = writeln!(out, "{parent_id} -> {id} ;");
        }
    }
    if let TreeNode::Internal { left, right, .. } = node {
        dot_node(left, Some((id, true)), next_id, out);
        dot_node(right, Some((id, false)), next_id, out);
    }
}

fn to_ascii(tree: &DecisionTree) -> String {
    let mut out = String::new();
    ascii_node(&tree.root, 0, &mut out);
    out
}

fn ascii_node(node: &TreeNode, indent: usize, out: &mut String) {
    let prefix = "|   ".repeat(indent);
    match node {
        TreeNode::Leaf { label, stats } => {
            let _ = writeln!(
                out,
                "{prefix}|--- class: {label} (samples = {}, value = [{}, {}], entropy = {:.3})",
                stats.n_samples, stats.class_counts.benign, stats.class_counts.malignant, stats.entropy_bits
            );
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            let _ = writeln!(out, "{prefix}|--- {feature} <= {threshold:.3}");
            ascii_node(left, indent + 1, out);
            let _ = writeln!(out, "{prefix}|--- {feature} >  {threshold:.3}");
            ascii_node(right, indent + 1, out);
        }
    }
}
