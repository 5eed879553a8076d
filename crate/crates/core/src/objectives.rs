//! Benchmark problems: synthetic datasets and a tunable random forest whose
//! validation score is the search objective.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_path, derive_seed, rng_from, stream};
use crate::searcher::Objective;
use crate::space::{rf_params, Configuration, ParamValue};
use crate::surrogate::tree::{Criterion, Tree, TreeConfig};

/// Share of rows used to train the base model.
pub const TRAIN_SHARE: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

/// Features, targets and a disjoint, exhaustive train/validation split.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<f64>,
    task: Task,
    train: Vec<usize>,
    val: Vec<usize>,
}

impl Dataset {
    /// Splits rows uniformly at random: `floor(0.75 n)` train, the rest
    /// validation.
    pub fn new(features: Matrix, targets: Vec<f64>, task: Task, split_seed: u64) -> Result<Self> {
        let n = targets.len();
        if n < 2 || features.n_rows() != n {
            return Err(Error::InvalidCount {
                what: "dataset rows",
                value: n,
            });
        }
        if features.rows().flatten().any(|v| !v.is_finite())
            || targets.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParams("dataset values must be finite".into()));
        }
        if let Task::Classification { n_classes } = task {
            if targets
                .iter()
                .any(|&t| t < 0.0 || t.fract() != 0.0 || t as usize >= n_classes)
            {
                return Err(Error::InvalidParams(format!(
                    "class labels must be integers in 0..{n_classes}"
                )));
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng_from(derive_seed(split_seed, stream::SPLIT)));
        let n_train = ((TRAIN_SHARE * n as f64).floor() as usize).clamp(1, n - 1);
        let val = idx.split_off(n_train);
        Ok(Self {
            features,
            targets,
            task,
            train: idx,
            val,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn val_indices(&self) -> &[usize] {
        &self.val
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Writes all rows as CSV with header `x0,...,x{d-1},y`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut line = String::new();
        for j in 0..self.n_features() {
            line.push_str(&format!("x{j},"));
        }
        line.push_str("y\n");
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        for (row, y) in self.features.rows().zip(&self.targets) {
            line.clear();
            for v in row {
                line.push_str(&format!("{v},"));
            }
            line.push_str(&format!("{y}\n"));
            w.write_all(line.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FriedmanVariant {
    One,
    Two,
    Three,
}

impl FriedmanVariant {
    pub fn from_number(v: u8) -> Option<Self> {
        match v {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            3 => Some(Self::Three),
            _ => None,
        }
    }

    pub fn n_features(self) -> usize {
        match self {
            Self::One => 10,
            Self::Two | Self::Three => 4,
        }
    }
}

/// Noiseless Friedman response at `x`.
pub fn friedman_target(variant: FriedmanVariant, x: &[f64]) -> f64 {
    match variant {
        FriedmanVariant::One => {
            10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
        }
        FriedmanVariant::Two => {
            let inner = x[1] * x[2] - 1.0 / (x[1] * x[3]);
            (x[0] * x[0] + inner * inner).sqrt()
        }
        FriedmanVariant::Three => ((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]).atan(),
    }
}

/// Friedman regression data. Variant 1 has 10 features on `[0, 1]` of which
/// five matter; variants 2 and 3 draw `x1 ~ U[0, 100]`,
/// `x2 ~ U[40 pi, 560 pi]`, `x3 ~ U[0, 1]`, `x4 ~ U[1, 11]`. Additive noise is
/// `N(0, noise_sd^2)`.
pub fn gen_friedman(
    variant: FriedmanVariant,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidCount {
            what: "n",
            value: n,
        });
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "noise_sd must be >= 0, got {noise_sd}"
        )));
    }
    let d = variant.n_features();
    let mut rng = rng_from(derive_seed(seed, stream::DATA));
    let mut noise_rng = rng_from(derive_seed(seed, stream::NOISE));
    let mut features = Matrix::zeros(n, d);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..d {
            let u: f64 = rng.random();
            let v = match (variant, j) {
                (FriedmanVariant::One, _) => u,
                (_, 0) => 100.0 * u,
                (_, 1) => 40.0 * PI + 520.0 * PI * u,
                (_, 2) => u,
                _ => 1.0 + 10.0 * u,
            };
            features.set(i, j, v);
        }
        let eps = if noise_sd > 0.0 {
            noise_sd
                * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut noise_rng)
        } else {
            0.0
        };
        targets.push(friedman_target(variant, features.row(i)) + eps);
    }
    Dataset::new(features, targets, Task::Regression, seed)
}

/// Binary classification data with one unit-normal cluster per class.
///
/// Class centres are two distinct vertices of `{-1, 1}^d_informative`
/// scaled by `class_sep`. Redundant features are random linear combinations
/// (weights `U[-1, 1]`) of the informative ones; columns are then permuted
/// and rows shuffled. Labels are exactly balanced.
pub fn gen_hypercube(
    n: usize,
    d_informative: usize,
    d_redundant: usize,
    class_sep: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidCount {
            what: "n",
            value: n,
        });
    }
    if d_informative == 0 {
        return Err(Error::InvalidCount {
            what: "d_informative",
            value: 0,
        });
    }
    if !class_sep.is_finite() {
        return Err(Error::InvalidParams("class_sep must be finite".into()));
    }
    let mut rng = rng_from(derive_seed(seed, stream::DATA));
    let vertex = |rng: &mut crate::rng::Rng| -> Vec<f64> {
        (0..d_informative)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect()
    };
    let a = vertex(&mut rng);
    let b = loop {
        let v = vertex(&mut rng);
        if v != a {
            break v;
        }
    };
    let centres = [a, b];
    let weights: Vec<Vec<f64>> = (0..d_informative)
        .map(|_| {
            (0..d_redundant)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let d = d_informative + d_redundant;
    let mut columns: Vec<usize> = (0..d).collect();
    columns.shuffle(&mut rng);
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng);

    let mut features = Matrix::zeros(n, d);
    let mut targets = vec![0.0; n];
    let mut raw = vec![0.0; d];
    for (k, &row) in rows.iter().enumerate() {
        let class = usize::from(k >= n / 2);
        for j in 0..d_informative {
            let z: f64 = rng.sample(StandardNormal);
            raw[j] = class_sep * centres[class][j] + z;
        }
        for r in 0..d_redundant {
            raw[d_informative + r] = (0..d_informative).map(|j| raw[j] * weights[j][r]).sum();
        }
        for (dst, &src) in columns.iter().enumerate() {
            features.set(row, dst, raw[src]);
        }
        targets[row] = class as f64;
    }
    Dataset::new(
        features,
        targets,
        Task::Classification { n_classes: 2 },
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Negated mean squared error.
    NegMse,
    Accuracy,
}

/// Random-forest controls read from a configuration. Sample controls are
/// fractions of the training rows, feature control a fraction of columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomForestParams {
    pub n_estimators: usize,
    pub min_samples_split: f64,
    pub min_samples_leaf: f64,
    pub max_features: f64,
}

fn numeric(config: &Configuration, name: &str) -> Result<f64> {
    match config.get(name) {
        Some(ParamValue::Num(v)) => Ok(*v),
        Some(ParamValue::Cat(_)) => Err(Error::IncompatibleSpace(format!(
            "`{name}` must be numeric"
        ))),
        None => Err(Error::IncompatibleSpace(format!("missing `{name}`"))),
    }
}

impl RandomForestParams {
    pub fn from_config(config: &Configuration) -> Result<Self> {
        let known = [
            rf_params::N_ESTIMATORS,
            rf_params::MIN_SAMPLES_SPLIT,
            rf_params::MIN_SAMPLES_LEAF,
            rf_params::MAX_FEATURES,
        ];
        if let Some((name, _)) = config
            .assignment()
            .iter()
            .find(|(n, _)| !known.contains(&n.as_str()))
        {
            return Err(Error::IncompatibleSpace(format!(
                "unknown hyperparameter `{name}`"
            )));
        }
        let n_est = numeric(config, rf_params::N_ESTIMATORS)?;
        if !(n_est >= 1.0 && n_est.fract() == 0.0) {
            return Err(Error::InvalidHyperparameter {
                name: rf_params::N_ESTIMATORS.into(),
                value: n_est,
            });
        }
        let p = Self {
            n_estimators: n_est as usize,
            min_samples_split: numeric(config, rf_params::MIN_SAMPLES_SPLIT)?,
            min_samples_leaf: numeric(config, rf_params::MIN_SAMPLES_LEAF)?,
            max_features: numeric(config, rf_params::MAX_FEATURES)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidHyperparameter {
                name: rf_params::N_ESTIMATORS.into(),
                value: 0.0,
            });
        }
        for (name, v) in [
            (rf_params::MIN_SAMPLES_SPLIT, self.min_samples_split),
            (rf_params::MIN_SAMPLES_LEAF, self.min_samples_leaf),
            (rf_params::MAX_FEATURES, self.max_features),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidHyperparameter {
                    name: name.into(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// `ceil(fraction * n)`, tolerant of binary rounding such as `0.7 * 10`.
pub fn fraction_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Bagged CART ensemble.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Tree>,
    task: Task,
    max_features: usize,
    min_samples_split: usize,
    min_samples_leaf: usize,
}

impl RandomForest {
    pub fn fit(dataset: &Dataset, params: &RandomForestParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let n = dataset.train.len();
        let d = dataset.n_features();
        let min_samples_split = fraction_count(params.min_samples_split, n).max(2);
        let min_samples_leaf = fraction_count(params.min_samples_leaf, n).max(1);
        let max_features = fraction_count(params.max_features, d).clamp(1, d);
        let criterion = match dataset.task {
            Task::Regression => Criterion::Variance,
            Task::Classification { n_classes } => Criterion::Gini { n_classes },
        };
        let cfg = TreeConfig {
            max_depth: None,
            min_samples_split,
            min_samples_leaf,
            max_features: Some(max_features),
            criterion,
        };
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from(derive_path(seed, &[stream::TREE, t as u64]));
                let rows: Vec<usize> = (0..n)
                    .map(|_| dataset.train[rng.random_range(0..n)])
                    .collect();
                let mut tree = Tree::fit(&dataset.features, &dataset.targets, rows, &cfg, &mut rng);
                tree.forget_samples();
                tree
            })
            .collect();
        Ok(Self {
            trees,
            task: dataset.task,
            max_features,
            min_samples_split,
            min_samples_leaf,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Features considered per split.
    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn min_samples_split(&self) -> usize {
        self.min_samples_split
    }

    pub fn min_samples_leaf(&self) -> usize {
        self.min_samples_leaf
    }

    /// Total leaves across trees.
    pub fn n_leaves(&self) -> usize {
        self.trees.iter().map(Tree::n_leaves).sum()
    }

    /// Tree mean for regression, majority vote (lowest label on ties) for
    /// classification.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.task {
            Task::Regression => {
                self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
            }
            Task::Classification { n_classes } => {
                let mut votes = vec![0usize; n_classes];
                for t in &self.trees {
                    votes[t.predict(x) as usize] += 1;
                }
                let mut best = 0;
                for (c, &v) in votes.iter().enumerate() {
                    if v > votes[best] {
                        best = c;
                    }
                }
                best as f64
            }
        }
    }
}

pub fn train_random_forest(
    dataset: &Dataset,
    config: &Configuration,
    seed: u64,
) -> Result<RandomForest> {
    RandomForest::fit(dataset, &RandomForestParams::from_config(config)?, seed)
}

/// Validation score of a model under `metric`.
pub fn score(dataset: &Dataset, metric: Metric, predict: impl Fn(&[f64]) -> f64) -> f64 {
    let val = &dataset.val;
    match metric {
        Metric::NegMse => {
            -val.iter()
                .map(|&i| (predict(dataset.features.row(i)) - dataset.targets[i]).powi(2))
                .sum::<f64>()
                / val.len() as f64
        }
        Metric::Accuracy => {
            val.iter()
                .filter(|&&i| predict(dataset.features.row(i)) == dataset.targets[i])
                .count() as f64
                / val.len() as f64
        }
    }
}

/// Validation performance of a random forest trained under a configuration.
/// Evaluations are memoized per configuration.
#[derive(Debug)]
pub struct RandomForestObjective {
    dataset: Dataset,
    metric: Metric,
    eval_seed: u64,
    cache: Mutex<HashMap<(usize, Vec<u64>), f64>>,
}

impl RandomForestObjective {
    /// Metric follows the task: negated MSE for regression, accuracy for
    /// classification.
    pub fn new(dataset: Dataset, eval_seed: u64) -> Self {
        let metric = match dataset.task {
            Task::Regression => Metric::NegMse,
            Task::Classification { .. } => Metric::Accuracy,
        };
        Self {
            dataset,
            metric,
            eval_seed,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn eval_seed(&self) -> u64 {
        self.eval_seed
    }

    /// Number of distinct configurations evaluated so far.
    pub fn n_evaluated(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    fn key(config: &Configuration) -> (usize, Vec<u64>) {
        let bits = config
            .assignment()
            .iter()
            .map(|(_, v)| v.as_f64().map_or(u64::MAX, f64::to_bits))
            .collect();
        (config.id(), bits)
    }
}

impl Objective for RandomForestObjective {
    fn evaluate(&self, config: &Configuration) -> Result<f64> {
        let key = Self::key(config);
        if let Some(&phi) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(phi);
        }
        let seed = derive_path(self.eval_seed, &[stream::EVAL, config.id() as u64]);
        let forest = train_random_forest(&self.dataset, config, seed)?;
        let phi = score(&self.dataset, self.metric, |x| forest.predict(x));
        self.cache.lock().expect("cache lock").insert(key, phi);
        Ok(phi)
    }
}

pub fn evaluate(objective: &RandomForestObjective, config: &Configuration) -> Result<f64> {
    objective.evaluate(config)
}
