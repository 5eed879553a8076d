//! Gradient boosting with squared or pinball loss.

use rand::seq::index;

use super::tree::{Criterion, Tree, TreeConfig};
use super::{empirical_quantile, pinball_loss, TreeParams};
use crate::matrix::Matrix;
use crate::rng::{derive_path, rng_from, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Loss {
    Squared,
    Pinball(f64),
}

#[derive(Debug, Clone)]
pub struct GbmModel {
    loss: Loss,
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
    n_features: usize,
    loss_history: Vec<f64>,
}

impl GbmModel {
    pub(crate) fn fit(x: &Matrix, y: &[f64], loss: Loss, params: &TreeParams, seed: u64) -> Self {
        let n = y.len();
        let init = match loss {
            Loss::Squared => y.iter().sum::<f64>() / n as f64,
            Loss::Pinball(beta) => empirical_quantile(y, beta),
        };
        let cfg = TreeConfig {
            max_depth: Some(params.max_depth),
            min_samples_split: 2,
            min_samples_leaf: params.min_samples_leaf,
            max_features: None,
            criterion: Criterion::Variance,
        };
        let mut pred = vec![init; n];
        let mut target = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.n_trees);
        let mut loss_history = Vec::with_capacity(params.n_trees + 1);
        loss_history.push(mean_loss(loss, y, &pred));
        let n_sub = ((params.subsample_fraction * n as f64).ceil() as usize).clamp(1, n);

        for round in 0..params.n_trees {
            let mut rng = rng_from(derive_path(seed, &[stream::TREE, round as u64]));
            let rows: Vec<usize> = if n_sub == n {
                (0..n).collect()
            } else {
                let mut r = index::sample(&mut rng, n, n_sub).into_vec();
                r.sort_unstable();
                r
            };
            for i in 0..n {
                let u = y[i] - pred[i];
                target[i] = match loss {
                    Loss::Squared => u,
                    Loss::Pinball(beta) => {
                        if u > 0.0 {
                            beta
                        } else {
                            beta - 1.0
                        }
                    }
                };
            }
            let mut tree = Tree::fit(x, &target, rows, &cfg, &mut rng);
            if let Loss::Pinball(beta) = loss {
                let mut buf = Vec::new();
                for (value, samples) in tree.leaves_mut() {
                    buf.clear();
                    buf.extend(samples.iter().map(|&i| y[i] - pred[i]));
                    *value = empirical_quantile(&buf, beta);
                }
            }
            tree.forget_samples();
            for (i, p) in pred.iter_mut().enumerate() {
                *p += params.learning_rate * tree.predict(x.row(i));
            }
            loss_history.push(mean_loss(loss, y, &pred));
            trees.push(tree);
        }

        Self {
            loss,
            init,
            learning_rate: params.learning_rate,
            trees,
            n_features: x.n_cols(),
            loss_history,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(x))
                .sum::<f64>()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Quantile level for pinball models.
    pub fn beta(&self) -> Option<f64> {
        match self.loss {
            Loss::Squared => None,
            Loss::Pinball(b) => Some(b),
        }
    }

    /// Mean training loss before boosting and after every round.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }
}

fn mean_loss(loss: Loss, y: &[f64], pred: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(pred)
        .map(|(&t, &p)| match loss {
            Loss::Squared => (t - p) * (t - p),
            Loss::Pinball(beta) => pinball_loss(t - p, beta).unwrap_or(f64::NAN),
        })
        .sum();
    total / y.len() as f64
}
