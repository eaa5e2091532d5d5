//! Bagged random forest used by the split-conformal baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Features;
use crate::error::{Error, Result};
use crate::rng;
use crate::tree::{bootstrap_indices, fit_tree, TreeModel, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            tree: TreeParams::default(),
        }
    }
}

/// Probability estimate = mean of per-tree leaf fractions.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<TreeModel>,
    n_classes: usize,
}

impl RandomForest {
    /// Fit on all rows of `x` with `labels[i] ∈ 0..n_classes`. Tree `b`
    /// bootstraps with the stream `(seed, "forest", b)`.
    pub fn fit(x: &Features, labels: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Result<Self> {
        if x.n_samples() == 0 || labels.len() != x.n_samples() {
            return Err(Error::InvalidInput(format!(
                "forest needs one label per row ({} rows, {} labels)",
                x.n_samples(),
                labels.len()
            )));
        }
        if params.n_trees == 0 {
            return Err(Error::InvalidInput("forest needs at least one tree".into()));
        }
        let n = x.n_samples();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, "forest", b as u64);
                let boot = bootstrap_indices(n, &mut r);
                let y: Vec<usize> = boot.draws.iter().map(|&i| labels[i]).collect();
                fit_tree(x, &boot.draws, &y, n_classes, &params.tree, &mut r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { trees, n_classes })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (o, f) in out.iter_mut().zip(t.leaf_fractions(x)) {
                *o += f;
            }
        }
        let b = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= b);
        out
    }

    /// Row-wise probabilities for every row of `x`.
    pub fn predict_proba_all(&self, x: &Features) -> Vec<Vec<f64>> {
        (0..x.n_samples())
            .into_par_iter()
            .map(|i| self.predict_proba(x.row(i)))
            .collect()
    }
}
