//! Quantile regression forests.
//!
//! Each tree keeps the training rows of every leaf. A query point receives a
//! weight per training row equal to the average over trees of
//! `1 / |leaf|` for the leaf it shares with that row; quantiles are read off
//! the weighted empirical CDF of the training targets.

use rand::Rng as _;
use rayon::prelude::*;

use super::tree::{Criterion, Tree, TreeConfig};
use super::TreeParams;
use crate::matrix::Matrix;
use crate::rng::{derive_path, rng_from, stream};

#[derive(Debug, Clone)]
pub struct QrfModel {
    trees: Vec<Tree>,
    targets: Vec<f64>,
    /// Training rows sorted by target, ties by row index.
    order: Vec<usize>,
    n_features: usize,
}

impl QrfModel {
    pub(crate) fn fit(x: &Matrix, y: &[f64], params: &TreeParams, seed: u64) -> Self {
        let n = y.len();
        let d = x.n_cols();
        let cfg = TreeConfig {
            max_depth: Some(params.max_depth),
            min_samples_split: 2,
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(d.div_ceil(3).max(1)),
            criterion: Criterion::Variance,
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from(derive_path(seed, &[stream::TREE, t as u64]));
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(x, y, rows, &cfg, &mut rng)
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
        Self {
            trees,
            targets: y.to_vec(),
            order,
            n_features: d,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.targets.len()];
        for tree in &self.trees {
            let samples = tree.leaf_samples(x);
            let share = 1.0 / samples.len() as f64;
            for &s in samples {
                w[s] += share;
            }
        }
        w
    }

    /// Quantiles at every level in `betas`, from one pass over the trees.
    /// Each result is the smallest training target whose weighted CDF reaches
    /// `beta`, which for equal weights is order statistic `ceil(beta * n)`.
    pub fn predict_many(&self, x: &[f64], betas: &[f64]) -> Vec<f64> {
        let w = self.weights(x);
        let total: f64 = w.iter().sum();
        let tol = 1e-12 * total;
        betas
            .iter()
            .map(|&beta| {
                let goal = beta * total - tol;
                let mut cum = 0.0;
                let mut last = f64::NAN;
                for &i in &self.order {
                    if w[i] == 0.0 {
                        continue;
                    }
                    cum += w[i];
                    last = self.targets[i];
                    if cum >= goal {
                        return last;
                    }
                }
                last
            })
            .collect()
    }
}
