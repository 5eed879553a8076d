//! Surrogate estimators over encoded configurations.
//!
//! Point estimators (`φ̂`, and the spread estimator `V̂` used by locally
//! weighted intervals) are squared-loss gradient boosting or KNN. Quantile
//! estimators are pinball-loss gradient boosting, fixed to one level at fit
//! time, or quantile regression forests, queryable at any level.
//!
//! Empirical quantiles throughout this module use the higher order
//! statistic at 1-based index `ceil(beta * n)`.

mod gbm;
mod knn;
mod qrf;
pub(crate) mod tree;

use serde::{Deserialize, Serialize};

pub use gbm::GbmModel;
pub use knn::KnnModel;
pub use qrf::QrfModel;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::space::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// Gradient boosting on squared error.
    Gbm,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileKind {
    /// Gradient boosting on pinball loss.
    Gbm,
    Qrf,
}

/// Capacity knobs shared by all surrogates; each kind reads the fields it
/// uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// 0 gives single-leaf trees.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_trees: usize,
    pub learning_rate: f64,
    pub subsample_fraction: f64,
    pub k: usize,
    /// Bootstrap rows per tree (forests only).
    pub bootstrap: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self::gbm()
    }
}

impl TreeParams {
    pub fn gbm() -> Self {
        Self {
            max_depth: 3,
            min_samples_leaf: 1,
            n_trees: 100,
            learning_rate: 0.1,
            subsample_fraction: 1.0,
            k: 5,
            bootstrap: false,
        }
    }

    pub fn qrf() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 1,
            n_trees: 100,
            learning_rate: 0.1,
            subsample_fraction: 1.0,
            k: 5,
            bootstrap: true,
        }
    }

    pub fn knn() -> Self {
        Self {
            k: 5,
            ..Self::gbm()
        }
    }

    pub fn for_point(kind: PointKind) -> Self {
        match kind {
            PointKind::Gbm => Self::gbm(),
            PointKind::Knn => Self::knn(),
        }
    }

    pub fn for_quantile(kind: QuantileKind) -> Self {
        match kind {
            QuantileKind::Gbm => Self::gbm(),
            QuantileKind::Qrf => Self::qrf(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTreeParams(m.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be finite and positive");
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return bad("subsample_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Pinball loss of the signed residual `u = y - ŷ`.
pub fn pinball_loss(residual: f64, beta: f64) -> Result<f64> {
    check_open_unit(beta)?;
    Ok(if residual > 0.0 {
        residual * beta
    } else {
        residual * (beta - 1.0)
    })
}

fn check_open_unit(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidQuantile(beta))
    }
}

/// Order statistic `ceil(beta * n)` (1-based, clamped to `[1, n]`) of
/// `values`. `values` must be non-empty.
pub fn empirical_quantile(values: &[f64], beta: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = (beta * n as f64).ceil();
    let k = if k.is_nan() {
        1
    } else {
        (k as usize).clamp(1, n)
    };
    sorted[k - 1]
}

#[derive(Debug, Clone)]
pub enum PointEstimator {
    Gbm(GbmModel),
    Knn(KnnModel),
}

#[derive(Debug, Clone)]
pub enum QuantileEstimator {
    GbmPinball(GbmModel),
    Qrf(QrfModel),
}

fn training_matrix(x: &[FeatureVector], y: &[f64]) -> Result<Matrix> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if x.iter().any(|v| v.0.iter().any(|c| !c.is_finite())) || y.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTreeParams(
            "training data must be finite".into(),
        ));
    }
    Ok(Matrix::from_rows(x).expect("rows checked"))
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        })
    }
}

pub fn fit_point(
    kind: PointKind,
    x: &[FeatureVector],
    y: &[f64],
    params: &TreeParams,
    seed: u64,
) -> Result<PointEstimator> {
    params.validate()?;
    let m = training_matrix(x, y)?;
    Ok(match kind {
        PointKind::Gbm => {
            PointEstimator::Gbm(GbmModel::fit(&m, y, gbm::Loss::Squared, params, seed))
        }
        PointKind::Knn => PointEstimator::Knn(KnnModel::fit(&m, y, params.k)),
    })
}

pub fn predict_point(model: &PointEstimator, x: &FeatureVector) -> Result<f64> {
    model.predict(x.as_slice())
}

impl PointEstimator {
    pub fn kind(&self) -> PointKind {
        match self {
            PointEstimator::Gbm(_) => PointKind::Gbm,
            PointEstimator::Knn(_) => PointKind::Knn,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            PointEstimator::Gbm(m) => m.n_features(),
            PointEstimator::Knn(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n_features(), x)?;
        Ok(match self {
            PointEstimator::Gbm(m) => m.predict(x),
            PointEstimator::Knn(m) => m.predict(x),
        })
    }
}

/// Fits a quantile estimator. `beta` fixes the level of pinball boosting and
/// is ignored by forests.
pub fn fit_quantile(
    kind: QuantileKind,
    x: &[FeatureVector],
    y: &[f64],
    beta: f64,
    params: &TreeParams,
    seed: u64,
) -> Result<QuantileEstimator> {
    params.validate()?;
    if kind == QuantileKind::Gbm {
        check_open_unit(beta)?;
    }
    let m = training_matrix(x, y)?;
    Ok(match kind {
        QuantileKind::Gbm => QuantileEstimator::GbmPinball(GbmModel::fit(
            &m,
            y,
            gbm::Loss::Pinball(beta),
            params,
            seed,
        )),
        QuantileKind::Qrf => QuantileEstimator::Qrf(QrfModel::fit(&m, y, params, seed)),
    })
}

pub fn predict_quantile(model: &QuantileEstimator, x: &FeatureVector, beta: f64) -> Result<f64> {
    model.predict(x.as_slice(), beta)
}

impl QuantileEstimator {
    pub fn kind(&self) -> QuantileKind {
        match self {
            QuantileEstimator::GbmPinball(_) => QuantileKind::Gbm,
            QuantileEstimator::Qrf(_) => QuantileKind::Qrf,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            QuantileEstimator::GbmPinball(m) => m.n_features(),
            QuantileEstimator::Qrf(m) => m.n_features(),
        }
    }

    /// Level fixed at fit time, if any.
    pub fn fitted_beta(&self) -> Option<f64> {
        match self {
            QuantileEstimator::GbmPinball(m) => m.beta(),
            QuantileEstimator::Qrf(_) => None,
        }
    }

    /// Forests accept any `beta` in `[0, 1]`; boosted models only their
    /// fitted level.
    pub fn predict(&self, x: &[f64], beta: f64) -> Result<f64> {
        Ok(self.predict_many(x, &[beta])?[0])
    }

    pub fn predict_many(&self, x: &[f64], betas: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_features(), x)?;
        match self {
            QuantileEstimator::GbmPinball(m) => {
                let fitted = m.beta().expect("pinball model");
                for &b in betas {
                    check_open_unit(b)?;
                    if (b - fitted).abs() > 1e-12 {
                        return Err(Error::QuantileMismatch {
                            fitted,
                            requested: b,
                        });
                    }
                }
                let v = m.predict(x);
                Ok(vec![v; betas.len()])
            }
            QuantileEstimator::Qrf(m) => {
                if let Some(&b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
                    return Err(Error::InvalidQuantile(b));
                }
                Ok(m.predict_many(x, betas))
            }
        }
    }
}
