use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{class_counts, find_split, ClassCounts};
use super::ForestParams;
use crate::seed::{derive_seed, derived_rng};
use crate::signals::Phase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: Phase,
        class_counts: ClassCounts,
    },
}

impl TreeNode {
    /// Routes `row` to a leaf: left iff `row[feature] <= threshold`.
    pub fn predict(&self, row: &[f64]) -> Phase {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    /// Depth of the deepest leaf; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

/// Majority class, ties to the lowest phase index.
pub(crate) fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

const ROOT_KEY: u64 = 1;

fn child_key(parent: u64, right: bool) -> u64 {
    derive_seed(parent, &[right as u64])
}

/// Same-size bootstrap sample with replacement, drawn from the tree's own stream.
pub fn bootstrap_sample(n_rows: usize, seed: u64, tree_index: usize) -> Vec<usize> {
    let mut rng = derived_rng(seed, &[tree_index as u64, 0]);
    (0..n_rows).map(|_| rng.random_range(0..n_rows)).collect()
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [Phase],
    params: &'a ForestParams,
    n_features: usize,
    tree_index: u64,
}

impl Grower<'_> {
    fn grow(&self, samples: &[usize], depth: usize, key: u64) -> TreeNode {
        let counts = class_counts(samples, self.labels);
        let leaf = || TreeNode::Leaf {
            label: Phase::ALL[majority(&counts)],
            class_counts: counts,
        };
        if depth >= self.params.max_depth {
            return leaf();
        }
        let mut rng = derived_rng(self.params.seed, &[self.tree_index, key]);
        let mut candidates =
            index::sample(&mut rng, self.n_features, self.params.features_per_node).into_vec();
        candidates.sort_unstable();
        let Some(split) = find_split(
            samples,
            self.rows,
            self.labels,
            &candidates,
            self.params.min_samples_leaf,
        ) else {
            return leaf();
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left, depth + 1, child_key(key, false))),
            right: Box::new(self.grow(&right, depth + 1, child_key(key, true))),
        }
    }
}

/// Grows one tree on the given bootstrap rows. Node randomness is keyed by
/// (seed, tree index, node position), never by row order.
pub fn grow_tree(
    rows: &[Vec<f64>],
    labels: &[Phase],
    bootstrap: &[usize],
    params: &ForestParams,
    tree_index: usize,
) -> TreeNode {
    let n_features = rows.first().map_or(0, Vec::len);
    Grower {
        rows,
        labels,
        params,
        n_features,
        tree_index: tree_index as u64,
    }
    .grow(bootstrap, 0, ROOT_KEY)
}
