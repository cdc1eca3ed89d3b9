use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{majority, DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::metrics::SubjectFeatures;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `floor(sqrt(d))` when unset.
    pub features_per_split: Option<usize>,
    /// Draw a bootstrap sample per tree. Without it every tree sees the full
    /// training set in its original order.
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            rng_seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        if let Some(m) = self.features_per_split {
            if m == 0 || m > n_features {
                return Err(Error::InvalidConfig(format!(
                    "features_per_split must lie in 1..={n_features}, got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn features_for(&self, d: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
    }
}

/// Bagged ensemble of CART trees with majority voting.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<DecisionTree>,
    /// Class labels in lexicographic order; vote ties go to the first.
    classes: Vec<String>,
    training_ids: Vec<String>,
    in_bag: Vec<Vec<usize>>,
}

impl Forest {
    /// Fit on raw rows. `labels` are class names; `ids` name each row (used
    /// only to audit training membership).
    pub fn fit(rows: &[&[f64]], labels: &[&str], ids: &[&str], cfg: &ForestConfig) -> Result<Self> {
        if rows.is_empty() || rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(Error::InsufficientData(format!(
                "{} rows, {} labels, {} ids",
                rows.len(),
                labels.len(),
                ids.len()
            )));
        }
        let d = rows[0].len();
        if d == 0 || rows.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InsufficientData(
                "feature rows must be finite and of equal, nonzero length".into(),
            ));
        }
        cfg.validate(d)?;
        let mut classes: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::SingleClass(classes.len()));
        }
        let y: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search_by(|c| c.as_str().cmp(l)).expect("label present"))
            .collect();

        let params = TreeParams {
            min_samples_leaf: cfg.min_samples_leaf,
            features_per_split: cfg.features_for(d),
        };
        let n = rows.len();
        let mut trees = Vec::with_capacity(cfg.n_trees);
        let mut in_bag = Vec::with_capacity(cfg.n_trees);
        for t in 0..cfg.n_trees {
            let mut rng = seed::rng(seed::derive(cfg.rng_seed, t as u64));
            let sample: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            in_bag.push(sample.clone());
            trees.push(DecisionTree::fit(rows, &y, classes.len(), sample, &params, &mut rng));
        }
        Ok(Self {
            trees,
            classes,
            training_ids: ids.iter().map(|s| s.to_string()).collect(),
            in_bag,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Vote count per class, in [`Forest::classes`] order.
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut v = vec![0; self.classes.len()];
        for t in &self.trees {
            v[t.predict(x)] += 1;
        }
        v
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.classes[majority(&self.votes(x))]
    }

    /// Ids of the rows the forest was fitted on.
    pub fn training_ids(&self) -> &[String] {
        &self.training_ids
    }

    /// Ids of the rows drawn into each tree's bootstrap sample.
    pub fn in_bag_ids(&self, tree: usize) -> impl Iterator<Item = &str> + '_ {
        self.in_bag[tree]
            .iter()
            .map(move |&i| self.training_ids[i].as_str())
    }
}

/// Fit a forest on per-subject feature vectors, labelled by group.
pub fn train_forest(features: &[SubjectFeatures], cfg: &ForestConfig) -> Result<Forest> {
    if features.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 subjects, got {}",
            features.len()
        )));
    }
    let rows: Vec<&[f64]> = features.iter().map(|f| &f.features[..]).collect();
    let labels: Vec<&str> = features.iter().map(|f| f.group.as_str()).collect();
    let ids: Vec<&str> = features.iter().map(|f| f.subject_id.as_str()).collect();
    Forest::fit(&rows, &labels, &ids, cfg)
}

pub fn predict(forest: &Forest, features: &[f64; 3]) -> String {
    forest.predict(features).to_string()
}
