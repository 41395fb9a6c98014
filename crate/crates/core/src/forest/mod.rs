//! Random forest classifier over phase labels: bagged, depth-limited Gini
//! trees with a fresh random feature subset at every node and majority voting.

mod split;
mod tree;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use split::{best_split, gini_impurity, ClassCounts, Split};
pub use tree::{bootstrap_sample, grow_tree, TreeNode};

use crate::error::{Error, Result};
use crate::signals::{FeatureMatrix, Phase, NUM_PHASES};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub features_per_node: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 80,
            max_depth: 9,
            features_per_node: 8,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl ForestParams {
    /// Per-node feature count that keeps the 8-of-17 ratio for other feature sets.
    pub fn default_features_per_node(n_features: usize) -> usize {
        ((n_features as f64 * 8.0 / 17.0).round() as usize).max(1)
    }

    /// Defaults for a feature set of the given width.
    pub fn for_features(n_features: usize, seed: u64) -> Self {
        ForestParams {
            features_per_node: Self::default_features_per_node(n_features),
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if self.features_per_node == 0 || self.features_per_node > n_features {
            return Err(Error::invalid(format!(
                "features_per_node must be in 1..={n_features}, got {}",
                self.features_per_node
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    pub trees: Vec<TreeNode>,
}

/// Trains a forest on `rows`. Each tree sees its own bootstrap sample and a
/// node-keyed random stream, so trees are trained in parallel and any single
/// tree can be reproduced in isolation.
pub fn train_forest(
    features: &FeatureMatrix,
    labels: &[Phase],
    params: &ForestParams,
) -> Result<RandomForest> {
    train_forest_rows(&features.rows, &features.names, labels, params)
}

pub fn train_forest_rows(
    rows: &[Vec<f64>],
    feature_names: &[String],
    labels: &[Phase],
    params: &ForestParams,
) -> Result<RandomForest> {
    if rows.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let n_features = feature_names.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            got: bad.len(),
        });
    }
    params.validate(n_features)?;
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let bootstrap = bootstrap_sample(rows.len(), params.seed, t);
            grow_tree(rows, labels, &bootstrap, params, t)
        })
        .collect();
    Ok(RandomForest {
        params: params.clone(),
        feature_names: feature_names.to_vec(),
        trees,
    })
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        Ok(())
    }

    pub fn vote_counts(&self, row: &[f64]) -> Result<[usize; NUM_PHASES]> {
        self.check_row(row)?;
        let mut votes = [0usize; NUM_PHASES];
        for tree in &self.trees {
            votes[tree.predict(row).index()] += 1;
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the lowest phase index.
    pub fn predict(&self, row: &[f64]) -> Result<Phase> {
        let votes = self.vote_counts(row)?;
        let counts: Vec<u64> = votes.iter().map(|&v| v as u64).collect();
        Ok(Phase::ALL[tree::majority(&counts)])
    }

    /// Fraction of trees voting for each phase.
    pub fn vote_distribution(&self, row: &[f64]) -> Result<[f64; NUM_PHASES]> {
        let votes = self.vote_counts(row)?;
        let n = self.trees.len() as f64;
        Ok(votes.map(|v| v as f64 / n))
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Phase>> {
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    pub fn predict_matrix(&self, features: &FeatureMatrix) -> Result<Vec<Phase>> {
        if features.n_features != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: features.n_features,
            });
        }
        self.predict_rows(&features.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let forest: RandomForest = serde_json::from_str(text)?;
        if forest.trees.len() != forest.params.n_trees {
            return Err(Error::invalid(format!(
                "forest document declares {} trees but holds {}",
                forest.params.n_trees,
                forest.trees.len()
            )));
        }
        Ok(forest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn forest_predict(model: &RandomForest, row: &[f64]) -> Result<Phase> {
    model.predict(row)
}

pub fn forest_vote_distribution(model: &RandomForest, row: &[f64]) -> Result<[f64; NUM_PHASES]> {
    model.vote_distribution(row)
}
