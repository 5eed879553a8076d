//! Split, locally weighted and conformalized-quantile intervals.
//!
//! Quantiles of nonconformity scores use the finite-sample convention: the
//! value at 1-based index `ceil(level * (n + 1))` of the sorted scores, with
//! `+inf` past the largest score. Levels are clamped to `[0, 1]` first, so a
//! drifting adaptive alpha saturates instead of failing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::FeatureVector;
use crate::surrogate::{PointEstimator, QuantileEstimator};

/// Floor applied to spread-estimator outputs before they scale or divide.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Builds `[lower, upper]`; if the bounds cross, collapses to their
    /// midpoint.
    pub fn new(lower: f64, upper: f64) -> Self {
        if lower <= upper {
            Self { lower, upper }
        } else {
            let mid = lower + (upper - lower) / 2.0;
            Self {
                lower: mid,
                upper: mid,
            }
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Framework {
    Split,
    Lwci,
    Cqi,
}

impl Framework {
    /// Whether scores can be negative.
    pub fn signed(self) -> bool {
        matches!(self, Framework::Cqi)
    }
}

/// Validation nonconformity scores tagged with the framework that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct NonconformityScores {
    scores: Vec<f64>,
    framework: Framework,
}

impl NonconformityScores {
    pub fn new(scores: Vec<f64>, framework: Framework) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyScores);
        }
        if !framework.signed() && scores.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidParams(format!(
                "{framework:?} scores must be nonnegative"
            )));
        }
        Ok(Self { scores, framework })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn framework(&self) -> Framework {
        self.framework
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn quantile(&self, level: f64) -> f64 {
        quantile_of(&self.scores, level, self.framework.signed())
    }
}

fn quantile_of(scores: &[f64], level: f64, signed: bool) -> f64 {
    let n = scores.len();
    let level = level.clamp(0.0, 1.0);
    let rank = (level * (n as f64 + 1.0)).ceil();
    if rank.is_nan() || rank < 1.0 {
        return if signed { f64::NEG_INFINITY } else { 0.0 };
    }
    let rank = rank as usize;
    if rank > n {
        return f64::INFINITY;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[rank - 1]
}

/// Finite-sample quantile of `scores` at `level`.
///
/// Levels at or below zero give `-inf` for signed (CQI) scores and `0` for
/// nonnegative ones.
pub fn finite_sample_quantile(scores: &NonconformityScores, level: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(scores.quantile(level))
}

/// Constant-width interval around `prediction`.
pub fn split_interval(
    prediction: f64,
    scores: &NonconformityScores,
    level: f64,
) -> Result<Interval> {
    let q = finite_sample_quantile(scores, level)?;
    Ok(symmetric(prediction, q))
}

fn symmetric(center: f64, half_width: f64) -> Interval {
    if half_width.is_infinite() {
        return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
    }
    Interval::new(center - half_width, center + half_width)
}

/// Absolute residual scores of `point` on validation pairs.
pub fn split_calibrate(
    point: &PointEstimator,
    theta_val: &[FeatureVector],
    phi_val: &[f64],
) -> Result<NonconformityScores> {
    check_validation(theta_val, phi_val)?;
    let scores = theta_val
        .iter()
        .zip(phi_val)
        .map(|(t, &phi)| Ok((phi - point.predict(t.as_slice())?).abs()))
        .collect::<Result<Vec<_>>>()?;
    NonconformityScores::new(scores, Framework::Split)
}

fn check_validation(theta_val: &[FeatureVector], phi_val: &[f64]) -> Result<()> {
    if theta_val.is_empty() || phi_val.is_empty() {
        return Err(Error::EmptyValidationSet);
    }
    if theta_val.len() != phi_val.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_val.len(),
            actual: phi_val.len(),
        });
    }
    Ok(())
}

fn floored_spread(variance: &PointEstimator, x: &[f64]) -> Result<f64> {
    Ok(variance.predict(x)?.max(VARIANCE_FLOOR))
}

/// Residuals scaled by the floored spread estimate:
/// `|phi - point(theta)| / max(variance(theta), 1e-6)`.
pub fn lwci_calibrate(
    point: &PointEstimator,
    variance: &PointEstimator,
    theta_val: &[FeatureVector],
    phi_val: &[f64],
) -> Result<NonconformityScores> {
    check_validation(theta_val, phi_val)?;
    let scores = theta_val
        .iter()
        .zip(phi_val)
        .map(|(t, &phi)| {
            let x = t.as_slice();
            Ok((phi - point.predict(x)?).abs() / floored_spread(variance, x)?)
        })
        .collect::<Result<Vec<_>>>()?;
    NonconformityScores::new(scores, Framework::Lwci)
}

/// Signed exceedance scores `max(lo(theta) - phi, phi - hi(theta))`.
///
/// `lo_level` and `hi_level` are the levels the two estimators were fitted
/// at (or are queried at, for forests).
pub fn cqi_calibrate(
    q_lo: &QuantileEstimator,
    q_hi: &QuantileEstimator,
    levels: (f64, f64),
    theta_val: &[FeatureVector],
    phi_val: &[f64],
) -> Result<NonconformityScores> {
    check_validation(theta_val, phi_val)?;
    let scores = theta_val
        .iter()
        .zip(phi_val)
        .map(|(t, &phi)| {
            let lo = q_lo.predict(t.as_slice(), levels.0)?;
            let hi = q_hi.predict(t.as_slice(), levels.1)?;
            Ok((lo - phi).max(phi - hi))
        })
        .collect::<Result<Vec<_>>>()?;
    NonconformityScores::new(scores, Framework::Cqi)
}

/// `1` iff `phi` lies outside the closed interval.
pub fn breach_indicator(interval: &Interval, phi: f64) -> bool {
    !interval.contains(phi)
}

/// Online miss-coverage level: `alpha_{t+1} = alpha_t + gamma * (alpha - breach_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveAlphaState {
    alpha_target: f64,
    alpha_t: f64,
    gamma: f64,
    history: Vec<bool>,
}

impl AdaptiveAlphaState {
    pub fn new(alpha_target: f64, gamma: f64) -> Result<Self> {
        if !(alpha_target > 0.0 && alpha_target < 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in (0, 1), got {alpha_target}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        Ok(Self {
            alpha_target,
            alpha_t: alpha_target,
            gamma,
            history: Vec::new(),
        })
    }

    /// State with an explicit current level, for resuming or testing.
    pub fn with_alpha_t(mut self, alpha_t: f64) -> Self {
        self.alpha_t = alpha_t;
        self
    }

    pub fn alpha_target(&self) -> f64 {
        self.alpha_target
    }

    pub fn alpha_t(&self) -> f64 {
        self.alpha_t
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn history(&self) -> &[bool] {
        &self.history
    }

    /// Coverage level currently passed to score quantiles.
    pub fn coverage_level(&self) -> f64 {
        1.0 - self.alpha_t
    }

    pub fn breach_rate(&self) -> Option<f64> {
        if self.history.is_empty() {
            None
        } else {
            Some(self.history.iter().filter(|&&b| b).count() as f64 / self.history.len() as f64)
        }
    }
}

pub fn adaptive_update(state: &AdaptiveAlphaState, breach: bool) -> AdaptiveAlphaState {
    let eps = if breach { 1.0 } else { 0.0 };
    let mut next = state.clone();
    next.alpha_t = state.alpha_t + state.gamma * (state.alpha_target - eps);
    next.history.push(breach);
    next
}

/// Fitted estimators of one calibration round.
#[derive(Debug, Clone)]
pub enum CalibratedModel {
    Split {
        point: PointEstimator,
    },
    Lwci {
        point: PointEstimator,
        variance: PointEstimator,
    },
    /// `levels` are the quantile levels the bounds are read at.
    Cqi {
        lower: QuantileEstimator,
        upper: QuantileEstimator,
        levels: (f64, f64),
    },
}

/// Estimators, their validation scores and the alpha state that sets the
/// interval level. The calibration quantile is fixed at construction from
/// the state's current `alpha_t`.
#[derive(Debug, Clone)]
pub struct CalibrationState {
    model: CalibratedModel,
    scores: NonconformityScores,
    alpha: AdaptiveAlphaState,
    q: f64,
}

impl CalibrationState {
    pub fn new(
        model: CalibratedModel,
        scores: NonconformityScores,
        alpha: AdaptiveAlphaState,
    ) -> Result<Self> {
        let expected = match &model {
            CalibratedModel::Split { .. } => Framework::Split,
            CalibratedModel::Lwci { .. } => Framework::Lwci,
            CalibratedModel::Cqi { .. } => Framework::Cqi,
        };
        if scores.framework() != expected {
            return Err(Error::InvalidParams(format!(
                "{:?} scores given to a {expected:?} model",
                scores.framework()
            )));
        }
        let q = finite_sample_quantile(&scores, alpha.coverage_level())?;
        Ok(Self {
            model,
            scores,
            alpha,
            q,
        })
    }

    pub fn framework(&self) -> Framework {
        self.scores.framework()
    }

    pub fn model(&self) -> &CalibratedModel {
        &self.model
    }

    pub fn scores(&self) -> &NonconformityScores {
        &self.scores
    }

    pub fn alpha(&self) -> &AdaptiveAlphaState {
        &self.alpha
    }

    /// Calibration quantile at the current level.
    pub fn score_quantile(&self) -> f64 {
        self.q
    }

    /// Same estimators and scores under a new alpha state.
    pub fn with_alpha(&self, alpha: AdaptiveAlphaState) -> Result<Self> {
        Self::new(self.model.clone(), self.scores.clone(), alpha)
    }

    pub fn interval(&self, theta: &FeatureVector) -> Result<Interval> {
        let x = theta.as_slice();
        match &self.model {
            CalibratedModel::Split { point } => Ok(symmetric(point.predict(x)?, self.q)),
            CalibratedModel::Lwci { point, variance } => {
                let center = point.predict(x)?;
                let spread = floored_spread(variance, x)?;
                Ok(symmetric(center, spread * self.q))
            }
            CalibratedModel::Cqi {
                lower,
                upper,
                levels,
            } => {
                let lo = lower.predict(x, levels.0)?;
                let hi = upper.predict(x, levels.1)?;
                Ok(adjust_band(lo, hi, self.q))
            }
        }
    }
}

/// Shifts a raw quantile band outward by `q` (inward when negative). Crossed
/// bounds collapse to the raw band's midpoint.
pub fn adjust_band(lo: f64, hi: f64, q: f64) -> Interval {
    let lower = lo - q;
    let upper = hi + q;
    if lower <= upper {
        Interval { lower, upper }
    } else {
        let mid = lo + (hi - lo) / 2.0;
        Interval {
            lower: mid,
            upper: mid,
        }
    }
}

pub fn lwci_interval(state: &CalibrationState, theta: &FeatureVector) -> Result<Interval> {
    state.interval(theta)
}

pub fn cqi_interval(state: &CalibrationState, theta: &FeatureVector) -> Result<Interval> {
    state.interval(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use crate::surrogate::{fit_point, fit_quantile, PointKind, QuantileKind, TreeParams};
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn nonneg(v: &[f64]) -> NonconformityScores {
        NonconformityScores::new(v.to_vec(), Framework::Split).unwrap()
    }

    fn signed(v: &[f64]) -> NonconformityScores {
        NonconformityScores::new(v.to_vec(), Framework::Cqi).unwrap()
    }

    fn constant(value: f64) -> PointEstimator {
        fit_point(
            PointKind::Knn,
            &[FeatureVector(vec![0.0])],
            &[value],
            &TreeParams::knn(),
            0,
        )
        .unwrap()
    }

    /// A KNN with k = 1 that returns `targets[i]` at feature `i`.
    fn lookup(targets: &[f64]) -> PointEstimator {
        let x: Vec<FeatureVector> = (0..targets.len())
            .map(|i| FeatureVector(vec![i as f64]))
            .collect();
        fit_point(
            PointKind::Knn,
            &x,
            targets,
            &TreeParams {
                k: 1,
                ..TreeParams::knn()
            },
            0,
        )
        .unwrap()
    }

    fn oracle(scores: &[f64], level: f64, signed: bool) -> f64 {
        let mut s = scores.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let l = level.clamp(0.0, 1.0);
        let idx = (l * (n + 1.0)).ceil();
        if idx < 1.0 {
            if signed {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        } else if idx > n {
            f64::INFINITY
        } else {
            s[idx as usize - 1]
        }
    }

    #[test]
    fn quantile_examples() {
        let s = nonneg(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(finite_sample_quantile(&s, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(finite_sample_quantile(&s, 0.8).unwrap(), 5.0);
        assert_eq!(finite_sample_quantile(&nonneg(&[7.0]), 0.4).unwrap(), 7.0);
        assert_eq!(finite_sample_quantile(&s, 0.0).unwrap(), 0.0);
        assert_eq!(finite_sample_quantile(&s, -0.3).unwrap(), 0.0);
        assert_eq!(
            finite_sample_quantile(&signed(&[-1.0, 2.0]), 0.0).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(finite_sample_quantile(&s, 1.7).unwrap(), f64::INFINITY);
        assert!(matches!(
            NonconformityScores::new(vec![], Framework::Split),
            Err(Error::EmptyScores)
        ));
    }

    #[test]
    fn split_interval_examples() {
        let s = nonneg(&[1.0, 2.0, 3.0]);
        // ceil(0.5 * 4) = 2
        let i = split_interval(0.0, &s, 0.5).unwrap();
        assert_eq!((i.lower, i.upper), (-2.0, 2.0));
        let z = split_interval(1.5, &s, 0.0).unwrap();
        assert_eq!((z.lower, z.upper), (1.5, 1.5));
    }

    #[test]
    fn split_coverage_monte_carlo() {
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut total = 0.0;
        for seed in 0..20 {
            let mut rng = rng_from(seed);
            let cal: Vec<f64> = (0..1000)
                .map(|_| f64::abs(noise.sample(&mut rng)))
                .collect();
            let s = nonneg(&cal);
            let i = split_interval(0.0, &s, 0.8).unwrap();
            let hits = (0..1000)
                .filter(|_| i.contains(noise.sample(&mut rng)))
                .count();
            total += hits as f64 / 1000.0;
        }
        let cov = total / 20.0;
        assert!((0.78..=0.83).contains(&cov), "coverage {cov}");
    }

    #[test]
    fn lwci_calibration_examples() {
        let theta = [FeatureVector(vec![0.0])];
        let s = lwci_calibrate(&constant(3.0), &constant(2.0), &theta, &[5.0]).unwrap();
        assert_eq!(s.scores(), &[1.0]);
        let s = lwci_calibrate(&constant(3.0), &constant(0.0), &theta, &[4.0]).unwrap();
        assert_eq!(s.scores(), &[1e6]);
        let s = lwci_calibrate(
            &lookup(&[1.0, 2.0]),
            &constant(1.0),
            &[FeatureVector(vec![0.0]), FeatureVector(vec![1.0])],
            &[1.0, 2.0],
        )
        .unwrap();
        assert_eq!(s.scores(), &[0.0, 0.0]);
        assert!(matches!(
            lwci_calibrate(&constant(0.0), &constant(1.0), &[], &[]),
            Err(Error::EmptyValidationSet)
        ));
    }

    #[test]
    fn lwci_interval_examples() {
        // one score 0.25 with level 1 - alpha_t = 0.5 -> index ceil(0.5 * 2) = 1
        let scores = NonconformityScores::new(vec![0.25], Framework::Lwci).unwrap();
        let alpha = AdaptiveAlphaState::new(0.5, 0.0).unwrap();
        let state = CalibrationState::new(
            CalibratedModel::Lwci {
                point: constant(0.5),
                variance: constant(2.0),
            },
            scores.clone(),
            alpha.clone(),
        )
        .unwrap();
        let i = lwci_interval(&state, &FeatureVector(vec![0.0])).unwrap();
        assert_eq!((i.lower, i.upper), (0.0, 1.0));

        let wide = state.with_alpha(alpha.clone().with_alpha_t(0.01)).unwrap();
        let i = lwci_interval(&wide, &FeatureVector(vec![0.0])).unwrap();
        assert_eq!((i.lower, i.upper), (f64::NEG_INFINITY, f64::INFINITY));

        let state = CalibrationState::new(
            CalibratedModel::Lwci {
                point: constant(0.0),
                variance: lookup(&[1.0, 3.0]),
            },
            scores,
            alpha,
        )
        .unwrap();
        let a = lwci_interval(&state, &FeatureVector(vec![0.0])).unwrap();
        let b = lwci_interval(&state, &FeatureVector(vec![1.0])).unwrap();
        assert!((b.width() / a.width() - 3.0).abs() < 1e-12);
        assert_eq!(a.lower + a.upper, 0.0);
    }

    #[test]
    fn cqi_calibration_examples() {
        let stump = TreeParams {
            max_depth: 0,
            n_trees: 1,
            bootstrap: false,
            ..TreeParams::qrf()
        };
        let x = [FeatureVector(vec![0.0])];
        let band = |lo: f64, hi: f64| {
            let a = fit_quantile(QuantileKind::Qrf, &x, &[lo], 0.5, &stump, 0).unwrap();
            let b = fit_quantile(QuantileKind::Qrf, &x, &[hi], 0.5, &stump, 0).unwrap();
            (a, b)
        };
        let phi = 10.0;
        let (lo, hi) = band(phi - 3.0, phi + 2.0);
        let s = cqi_calibrate(&lo, &hi, (0.1, 0.9), &x, &[phi]).unwrap();
        assert_eq!(s.scores(), &[-2.0]);
        let (lo, hi) = band(7.0, 10.0);
        assert_eq!(
            cqi_calibrate(&lo, &hi, (0.1, 0.9), &x, &[10.0])
                .unwrap()
                .scores(),
            &[0.0]
        );
        assert_eq!(
            cqi_calibrate(&lo, &hi, (0.1, 0.9), &x, &[11.5])
                .unwrap()
                .scores(),
            &[1.5]
        );
    }

    #[test]
    fn cqi_band_adjustment() {
        let i = adjust_band(1.0, 3.0, 0.5);
        assert_eq!((i.lower, i.upper), (0.5, 3.5));
        let i = adjust_band(1.0, 3.0, -0.2);
        assert!((i.lower - 1.2).abs() < 1e-12 && (i.upper - 2.8).abs() < 1e-12);
        let i = adjust_band(1.0, 1.1, -0.3);
        assert!((i.lower - 1.05).abs() < 1e-12);
        assert_eq!(i.lower, i.upper);
        let i = adjust_band(1.0, 1.1, f64::NEG_INFINITY);
        assert!((i.lower - 1.05).abs() < 1e-12);
        let i = adjust_band(1.0, 1.1, f64::INFINITY);
        assert_eq!((i.lower, i.upper), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn breach_examples() {
        let i = Interval::new(0.0, 1.0);
        assert!(!breach_indicator(&i, 0.5));
        assert!(!breach_indicator(&i, 1.0));
        assert!(breach_indicator(&i, 1.01));
        assert!(breach_indicator(&i, -0.01));
    }

    #[test]
    fn adaptive_examples() {
        let s = AdaptiveAlphaState::new(0.8, 0.1).unwrap();
        assert!((adaptive_update(&s, true).alpha_t() - 0.78).abs() < 1e-12);
        assert!((adaptive_update(&s, false).alpha_t() - 0.88).abs() < 1e-12);
        assert_eq!(adaptive_update(&s, true).history(), &[true]);
        assert_eq!(s.alpha_t(), 0.8);
    }

    #[test]
    fn adaptive_stream_converges() {
        // calibration scores from |N(0,1)|, stream residuals from a wider law
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rng = rng_from(17);
        let cal: Vec<f64> = (0..200).map(|_| f64::abs(noise.sample(&mut rng))).collect();
        let scores = nonneg(&cal);
        let alpha = 0.2;
        let mut state = AdaptiveAlphaState::new(alpha, 0.05).unwrap();
        for _ in 0..1000 {
            let q = finite_sample_quantile(&scores, state.coverage_level()).unwrap();
            let y = 1.7 * noise.sample(&mut rng);
            let breach = breach_indicator(&symmetric(0.0, q), y);
            state = adaptive_update(&state, breach);
        }
        let rate = state.breach_rate().unwrap();
        assert!((rate - alpha).abs() <= 0.05, "rate {rate}");
    }

    proptest! {
        #[test]
        fn quantile_matches_oracle(
            scores in proptest::collection::vec(-10.0f64..10.0, 1..=8),
            step in 0usize..=100,
            signed_scores in any::<bool>(),
        ) {
            let level = step as f64 / 100.0;
            let scores: Vec<f64> = if signed_scores { scores } else { scores.iter().map(|s| s.abs()).collect() };
            let fw = if signed_scores { Framework::Cqi } else { Framework::Lwci };
            let s = NonconformityScores::new(scores.clone(), fw).unwrap();
            prop_assert_eq!(finite_sample_quantile(&s, level).unwrap(), oracle(&scores, level, signed_scores));
        }

        #[test]
        fn width_monotone_in_level(
            scores in proptest::collection::vec(0.0f64..10.0, 1..20),
            a in -0.5f64..1.5,
            b in -0.5f64..1.5,
        ) {
            let s = nonneg(&scores);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let wl = split_interval(0.0, &s, lo).unwrap().width();
            let wh = split_interval(0.0, &s, hi).unwrap().width();
            prop_assert!(wl <= wh);
        }

        #[test]
        fn adaptive_updates_are_linear(
            breaches in proptest::collection::vec(any::<bool>(), 0..50),
            alpha in 0.01f64..0.99,
            gamma in 0.0f64..0.5,
        ) {
            let start = AdaptiveAlphaState::new(alpha, gamma).unwrap();
            let end = breaches.iter().fold(start.clone(), |s, &b| adaptive_update(&s, b));
            let k = breaches.len() as f64;
            let sum = breaches.iter().filter(|&&b| b).count() as f64;
            let want = alpha + gamma * (k * alpha - sum);
            prop_assert!((end.alpha_t() - want).abs() < 1e-9);
        }

        #[test]
        fn split_intervals_symmetric(pred in -100.0f64..100.0, scores in proptest::collection::vec(0.0f64..5.0, 1..10), level in 0.0f64..0.9) {
            let i = split_interval(pred, &nonneg(&scores), level).unwrap();
            if i.width().is_finite() {
                prop_assert!(((i.lower + i.upper) / 2.0 - pred).abs() < 1e-9);
            } else {
                prop_assert!(i.lower == f64::NEG_INFINITY && i.upper == f64::INFINITY);
            }
        }
    }
}
