//! Conformal search driver and the random-search baseline.
//!
//! A run starts with `n_init` uniformly drawn configurations. Every later
//! step reshuffles the history into train/validation parts, refits the
//! surrogates from scratch, calibrates their scores, and evaluates the
//! unsampled configuration with the highest interval upper bound. The
//! breach of that configuration's pre-evaluation interval drives the
//! adaptive alpha update.

use std::time::{Duration, Instant};

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    adaptive_update, breach_indicator, cqi_calibrate, lwci_calibrate, AdaptiveAlphaState,
    CalibratedModel, CalibrationState, Interval,
};
use crate::error::{Error, Result};
use crate::rng::{derive_path, derive_seed, rng_from, stream};
use crate::space::{random_order, ConfigSpace, Configuration, FeatureVector};
use crate::surrogate::{
    fit_point, fit_quantile, pinball_loss, PointKind, QuantileEstimator, QuantileKind, TreeParams,
};

/// Anything that scores a configuration, larger is better.
pub trait Objective: Sync {
    fn evaluate(&self, config: &Configuration) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&Configuration) -> Result<f64> + Sync,
{
    fn evaluate(&self, config: &Configuration) -> Result<f64> {
        self(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "framework", rename_all = "lowercase")]
pub enum SearchFramework {
    /// Locally weighted intervals from a point and a spread estimator.
    Lwci {
        point: PointKind,
        variance: PointKind,
    },
    /// Conformalized quantile intervals.
    Cqi {
        quantile: QuantileKind,
    },
    Random,
}

pub const DEFAULT_N_INIT: usize = 20;
pub const DEFAULT_GAMMA: f64 = 0.05;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
pub const DEFAULT_INNER_FRACTION: f64 = 0.5;
/// Random draws used when surrogate tuning is switched on.
pub const TUNING_DRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub framework: SearchFramework,
    /// Target miss-coverage; intervals aim at coverage `1 - alpha`.
    pub alpha: f64,
    pub gamma: f64,
    pub n_init: usize,
    /// Total number of evaluated configurations, random phase included.
    pub budget: usize,
    pub adaptive: bool,
    pub train_fraction: f64,
    /// Share of the training part used to fit the point estimator
    /// (locally weighted intervals only).
    pub inner_fraction: f64,
    pub seed: u64,
    pub point_params: Option<TreeParams>,
    pub variance_params: Option<TreeParams>,
    pub quantile_params: Option<TreeParams>,
    pub tune_surrogates: bool,
}

impl SearchParams {
    pub fn new(framework: SearchFramework, alpha: f64, budget: usize, seed: u64) -> Self {
        Self {
            framework,
            alpha,
            gamma: DEFAULT_GAMMA,
            n_init: DEFAULT_N_INIT,
            budget,
            adaptive: true,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            inner_fraction: DEFAULT_INNER_FRACTION,
            seed,
            point_params: None,
            variance_params: None,
            quantile_params: None,
            tune_surrogates: false,
        }
    }

    pub fn validate(&self, space_len: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.budget > space_len {
            return Err(Error::BudgetExceedsSpace {
                budget: self.budget,
                size: space_len,
            });
        }
        if self.budget == 0 {
            return Err(Error::InvalidCount {
                what: "budget",
                value: 0,
            });
        }
        if self.framework != SearchFramework::Random {
            if self.n_init == 0 || self.n_init >= self.budget {
                return bad(format!(
                    "n_init must satisfy 1 <= n_init < budget, got n_init={} budget={}",
                    self.n_init, self.budget
                ));
            }
            if !(self.alpha > 0.0 && self.alpha < 1.0) {
                return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
            }
            if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
                return bad(format!(
                    "gamma must be finite and nonnegative, got {}",
                    self.gamma
                ));
            }
            if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
                return bad(format!(
                    "train_fraction must lie in (0, 1), got {}",
                    self.train_fraction
                ));
            }
            if !(self.inner_fraction > 0.0 && self.inner_fraction < 1.0) {
                return bad(format!(
                    "inner_fraction must lie in (0, 1), got {}",
                    self.inner_fraction
                ));
            }
        }
        for p in [
            &self.point_params,
            &self.variance_params,
            &self.quantile_params,
        ]
        .into_iter()
        .flatten()
        {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// 1-based position in the search.
    pub step: usize,
    pub config_id: usize,
    pub phi: f64,
    /// Pre-evaluation interval; absent for random draws.
    pub interval: Option<Interval>,
    pub breach: Option<bool>,
    /// Working alpha when the configuration was chosen.
    pub alpha_t: Option<f64>,
    pub elapsed: Duration,
}

impl Trial {
    pub fn is_conformal(&self) -> bool {
        self.breach.is_some()
    }
}

/// Ordered trial log with running best and cumulative breach rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    trials: Vec<Trial>,
    best_phi: f64,
    best_config_id: Option<usize>,
    best_curve: Vec<f64>,
    cumulative_breach_rate: Vec<Option<f64>>,
    breaches: usize,
    conformal_trials: usize,
}

impl Default for SearchTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl SearchTrace {
    pub fn new() -> Self {
        Self {
            trials: Vec::new(),
            best_phi: f64::NEG_INFINITY,
            best_config_id: None,
            best_curve: Vec::new(),
            cumulative_breach_rate: Vec::new(),
            breaches: 0,
            conformal_trials: 0,
        }
    }

    /// Rebuilds a trace from its trials, checking step order and id
    /// uniqueness.
    pub fn from_trials(trials: Vec<Trial>) -> Result<Self> {
        let mut trace = Self::new();
        let mut seen = std::collections::HashSet::new();
        for t in trials {
            if !seen.insert(t.config_id) {
                return Err(Error::InvalidParams(format!(
                    "configuration {} appears twice",
                    t.config_id
                )));
            }
            if t.step != trace.trials.len() + 1 {
                return Err(Error::InvalidParams(format!(
                    "expected step {}, found {}",
                    trace.trials.len() + 1,
                    t.step
                )));
            }
            trace.push(t);
        }
        Ok(trace)
    }

    fn push(&mut self, trial: Trial) {
        if trial.phi > self.best_phi || self.best_config_id.is_none() {
            self.best_phi = trial.phi;
            self.best_config_id = Some(trial.config_id);
        }
        if let Some(b) = trial.breach {
            self.conformal_trials += 1;
            self.breaches += usize::from(b);
        }
        self.best_curve.push(self.best_phi);
        self.cumulative_breach_rate.push(
            (self.conformal_trials > 0)
                .then(|| self.breaches as f64 / self.conformal_trials as f64),
        );
        self.trials.push(trial);
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn best_phi(&self) -> f64 {
        self.best_phi
    }

    pub fn best_config_id(&self) -> Option<usize> {
        self.best_config_id
    }

    /// Best phi after each step.
    pub fn best_curve(&self) -> &[f64] {
        &self.best_curve
    }

    /// Breach rate over conformal trials up to each step; `None` until the
    /// first conformal trial.
    pub fn cumulative_breach_rate(&self) -> &[Option<f64>] {
        &self.cumulative_breach_rate
    }

    pub fn final_breach_rate(&self) -> Option<f64> {
        self.cumulative_breach_rate.last().copied().flatten()
    }

    /// Equality ignoring wall-clock fields.
    pub fn same_outcome(&self, other: &SearchTrace) -> bool {
        self.trials.len() == other.trials.len()
            && self.trials.iter().zip(&other.trials).all(|(a, b)| {
                a.step == b.step
                    && a.config_id == b.config_id
                    && a.phi.to_bits() == b.phi.to_bits()
                    && a.interval == b.interval
                    && a.breach == b.breach
                    && a.alpha_t == b.alpha_t
            })
    }
}

/// Uniform random search over `budget` distinct configurations.
pub fn run_random_search(
    objective: &dyn Objective,
    space: &ConfigSpace,
    budget: usize,
    seed: u64,
) -> Result<SearchTrace> {
    if budget > space.len() {
        return Err(Error::BudgetExceedsSpace {
            budget,
            size: space.len(),
        });
    }
    if budget == 0 {
        return Err(Error::InvalidCount {
            what: "budget",
            value: 0,
        });
    }
    let start = Instant::now();
    let mut trace = SearchTrace::new();
    for (i, id) in random_order(space.len(), seed)
        .into_iter()
        .take(budget)
        .enumerate()
    {
        let phi = objective.evaluate(space.config(id)?)?;
        trace.push(Trial {
            step: i + 1,
            config_id: id,
            phi,
            interval: None,
            breach: None,
            alpha_t: None,
            elapsed: start.elapsed(),
        });
    }
    Ok(trace)
}

/// Index partition of a history into train/validation parts; locally
/// weighted search further splits train into `train_inner` (point fit) and
/// `val_inner` (spread fit).
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub inner: Option<(Vec<usize>, Vec<usize>)>,
}

/// Shuffles `0..n` and cuts it at `floor(train_fraction * n)` (and the
/// training part at `floor(inner_fraction * |train|)`), keeping every part
/// non-empty.
pub fn split_history(
    n: usize,
    train_fraction: f64,
    inner_fraction: Option<f64>,
    seed: u64,
) -> Result<HistorySplit> {
    let min_n = if inner_fraction.is_some() { 3 } else { 2 };
    if n < min_n.max(4) {
        return Err(Error::HistoryTooSmall(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(derive_seed(seed, stream::SPLIT));
    idx.shuffle(&mut rng);
    let min_train = if inner_fraction.is_some() { 2 } else { 1 };
    let n_train = ((train_fraction * n as f64).floor() as usize).clamp(min_train, n - 1);
    let val = idx.split_off(n_train);
    let train = idx;
    let inner = inner_fraction.map(|f| {
        let k = ((f * n_train as f64).floor() as usize).clamp(1, n_train - 1);
        (train[..k].to_vec(), train[k..].to_vec())
    });
    Ok(HistorySplit { train, val, inner })
}

/// Result of scoring the candidate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub config_id: usize,
    pub interval: Interval,
}

/// Picks the unsampled configuration with the largest interval upper bound;
/// ties go to the lowest id. Candidates are scored in parallel.
pub fn acquire_next<F>(n_configs: usize, sampled: &[bool], interval_fn: F) -> Result<Acquisition>
where
    F: Fn(usize) -> Result<Interval> + Sync,
{
    let scored = (0..n_configs)
        .into_par_iter()
        .filter(|&i| !sampled.get(i).copied().unwrap_or(false))
        .map(|i| interval_fn(i).map(|iv| (i, iv)))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, Interval, f64)> = None;
    for (i, iv) in scored {
        let ub = if iv.upper.is_nan() {
            f64::NEG_INFINITY
        } else {
            iv.upper
        };
        if best.as_ref().is_none_or(|b| ub > b.2) {
            best = Some((i, iv, ub));
        }
    }
    best.map(|(config_id, interval, _)| Acquisition {
        config_id,
        interval,
    })
    .ok_or(Error::SpaceExhausted)
}

/// Quantile levels `(alpha_t / 2, 1 - alpha_t / 2)`, each clamped to
/// `[0.001, 0.999]`. If clamping leaves them crossed (alpha_t > 1), the
/// upper level is raised to the lower one.
pub fn quantile_levels_for(alpha_t: f64) -> (f64, f64) {
    let lo = (alpha_t / 2.0).clamp(0.001, 0.999);
    let hi = (1.0 - alpha_t / 2.0).clamp(0.001, 0.999);
    (lo, hi.max(lo))
}

#[derive(Debug, Clone)]
struct ResolvedParams {
    point: TreeParams,
    variance: TreeParams,
    quantile: TreeParams,
}

fn gather<T: Clone>(src: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| src[i].clone()).collect()
}

struct History<'a> {
    x: &'a [FeatureVector],
    y: &'a [f64],
}

fn calibrate_step(
    framework: SearchFramework,
    hist: &History<'_>,
    alpha: &AdaptiveAlphaState,
    params: &SearchParams,
    tree: &ResolvedParams,
    step_seed: u64,
) -> Result<CalibrationState> {
    match framework {
        SearchFramework::Lwci { point, variance } => {
            let split = split_history(
                hist.x.len(),
                params.train_fraction,
                Some(params.inner_fraction),
                step_seed,
            )?;
            let (inner_train, inner_val) = split.inner.expect("nested split");
            let point_model = fit_point(
                point,
                &gather(hist.x, &inner_train),
                &gather(hist.y, &inner_train),
                &tree.point,
                derive_seed(step_seed, 1),
            )?;
            let x_spread = gather(hist.x, &inner_val);
            let residuals = x_spread
                .iter()
                .zip(gather(hist.y, &inner_val))
                .map(|(x, y)| Ok((y - point_model.predict(x.as_slice())?).abs()))
                .collect::<Result<Vec<_>>>()?;
            let spread_model = fit_point(
                variance,
                &x_spread,
                &residuals,
                &tree.variance,
                derive_seed(step_seed, 2),
            )?;
            let scores = lwci_calibrate(
                &point_model,
                &spread_model,
                &gather(hist.x, &split.val),
                &gather(hist.y, &split.val),
            )?;
            CalibrationState::new(
                CalibratedModel::Lwci {
                    point: point_model,
                    variance: spread_model,
                },
                scores,
                alpha.clone(),
            )
        }
        SearchFramework::Cqi { quantile } => {
            let split = split_history(hist.x.len(), params.train_fraction, None, step_seed)?;
            let levels = quantile_levels_for(alpha.alpha_t());
            let (lower, upper) = fit_quantile_pair(
                quantile,
                &gather(hist.x, &split.train),
                &gather(hist.y, &split.train),
                levels,
                &tree.quantile,
                step_seed,
            )?;
            let scores = cqi_calibrate(
                &lower,
                &upper,
                levels,
                &gather(hist.x, &split.val),
                &gather(hist.y, &split.val),
            )?;
            CalibrationState::new(
                CalibratedModel::Cqi {
                    lower,
                    upper,
                    levels,
                },
                scores,
                alpha.clone(),
            )
        }
        SearchFramework::Random => unreachable!("random search has no calibration"),
    }
}

fn fit_quantile_pair(
    kind: QuantileKind,
    x: &[FeatureVector],
    y: &[f64],
    levels: (f64, f64),
    params: &TreeParams,
    seed: u64,
) -> Result<(QuantileEstimator, QuantileEstimator)> {
    match kind {
        QuantileKind::Qrf => {
            let forest = fit_quantile(kind, x, y, levels.0, params, derive_seed(seed, 1))?;
            Ok((forest.clone(), forest))
        }
        QuantileKind::Gbm => Ok((
            fit_quantile(kind, x, y, levels.0, params, derive_seed(seed, 1))?,
            fit_quantile(kind, x, y, levels.1, params, derive_seed(seed, 2))?,
        )),
    }
}

fn random_tree_params(base: &TreeParams, rng: &mut crate::rng::Rng) -> TreeParams {
    const DEPTHS: [usize; 4] = [2, 3, 4, 6];
    const TREES: [usize; 4] = [25, 50, 100, 200];
    const RATES: [f64; 3] = [0.05, 0.1, 0.2];
    const LEAVES: [usize; 3] = [1, 2, 3];
    const KS: [usize; 5] = [1, 3, 5, 7, 10];
    TreeParams {
        max_depth: DEPTHS[rng.random_range(0..DEPTHS.len())],
        n_trees: TREES[rng.random_range(0..TREES.len())],
        learning_rate: RATES[rng.random_range(0..RATES.len())],
        min_samples_leaf: LEAVES[rng.random_range(0..LEAVES.len())],
        k: KS[rng.random_range(0..KS.len())],
        ..*base
    }
}

/// Random search over surrogate capacities, scored on one held-out split
/// of the initial history. Point models are scored by squared error,
/// quantile models by mean pinball loss at both band levels.
fn tune_surrogates(
    framework: SearchFramework,
    hist: &History<'_>,
    alpha_t: f64,
    base: ResolvedParams,
    params: &SearchParams,
) -> Result<ResolvedParams> {
    let seed = derive_seed(params.seed, stream::TUNE);
    let split = match split_history(hist.x.len(), params.train_fraction, None, seed) {
        Ok(s) => s,
        Err(Error::HistoryTooSmall(_)) => return Ok(base),
        Err(e) => return Err(e),
    };
    let (xt, yt) = (gather(hist.x, &split.train), gather(hist.y, &split.train));
    let (xv, yv) = (gather(hist.x, &split.val), gather(hist.y, &split.val));
    let mut rng = rng_from(seed);
    let mut out = base.clone();
    match framework {
        SearchFramework::Lwci { point, variance } => {
            let mut best = (f64::INFINITY, base.point);
            for draw in 0..TUNING_DRAWS {
                let cand = random_tree_params(&base.point, &mut rng);
                let m = fit_point(point, &xt, &yt, &cand, derive_seed(seed, draw as u64))?;
                let mut loss = 0.0;
                for (x, y) in xv.iter().zip(&yv) {
                    loss += (m.predict(x.as_slice())? - y).powi(2);
                }
                if loss < best.0 {
                    best = (loss, cand);
                }
            }
            if variance == point {
                out.variance = best.1;
            }
            out.point = best.1;
        }
        SearchFramework::Cqi { quantile } => {
            let levels = quantile_levels_for(alpha_t);
            let mut best = (f64::INFINITY, base.quantile);
            for draw in 0..TUNING_DRAWS {
                let cand = random_tree_params(&base.quantile, &mut rng);
                let (lo, hi) = fit_quantile_pair(
                    quantile,
                    &xt,
                    &yt,
                    levels,
                    &cand,
                    derive_seed(seed, draw as u64),
                )?;
                let mut loss = 0.0;
                for (x, y) in xv.iter().zip(&yv) {
                    let ql = lo.predict(x.as_slice(), levels.0)?;
                    let qh = hi.predict(x.as_slice(), levels.1)?;
                    loss += pinball_loss(y - ql, levels.0)? + pinball_loss(y - qh, levels.1)?;
                }
                if loss < best.0 {
                    best = (loss, cand);
                }
            }
            out.quantile = best.1;
        }
        SearchFramework::Random => {}
    }
    Ok(out)
}

/// Runs a full conformal search (or delegates to random search for
/// [`SearchFramework::Random`]).
pub fn run_acho(
    objective: &dyn Objective,
    space: &ConfigSpace,
    params: &SearchParams,
) -> Result<SearchTrace> {
    params.validate(space.len())?;
    if params.framework == SearchFramework::Random {
        return run_random_search(objective, space, params.budget, params.seed);
    }
    let start = Instant::now();
    let m = space.len();
    let mut trace = SearchTrace::new();
    let mut sampled = vec![false; m];
    let mut hist_x: Vec<FeatureVector> = Vec::with_capacity(params.budget);
    let mut hist_y: Vec<f64> = Vec::with_capacity(params.budget);

    let initial = crate::space::sample_initial(space, params.n_init, params.seed)?;
    for id in initial {
        let phi = objective.evaluate(space.config(id)?)?;
        sampled[id] = true;
        hist_x.push(space.features(id)?.clone());
        hist_y.push(phi);
        trace.push(Trial {
            step: trace.len() + 1,
            config_id: id,
            phi,
            interval: None,
            breach: None,
            alpha_t: None,
            elapsed: start.elapsed(),
        });
    }

    let (point_kind, variance_kind, quantile_kind) = match params.framework {
        SearchFramework::Lwci { point, variance } => (point, variance, QuantileKind::Qrf),
        SearchFramework::Cqi { quantile } => (PointKind::Gbm, PointKind::Gbm, quantile),
        SearchFramework::Random => unreachable!(),
    };
    let mut tree = ResolvedParams {
        point: params
            .point_params
            .unwrap_or_else(|| TreeParams::for_point(point_kind)),
        variance: params
            .variance_params
            .unwrap_or_else(|| TreeParams::for_point(variance_kind)),
        quantile: params
            .quantile_params
            .unwrap_or_else(|| TreeParams::for_quantile(quantile_kind)),
    };
    let mut alpha = AdaptiveAlphaState::new(params.alpha, params.gamma)?;
    let mut tuned = !params.tune_surrogates;

    for step in params.n_init + 1..=params.budget {
        let step_seed = derive_path(params.seed, &[stream::FIT, step as u64]);
        let hist = History {
            x: &hist_x,
            y: &hist_y,
        };
        if !tuned {
            tree = tune_surrogates(params.framework, &hist, alpha.alpha_t(), tree, params)?;
            tuned = true;
        }
        let (id, interval) =
            match calibrate_step(params.framework, &hist, &alpha, params, &tree, step_seed) {
                Ok(state) => {
                    let acq = acquire_next(m, &sampled, |i| state.interval(space.features(i)?))?;
                    (acq.config_id, Some(acq.interval))
                }
                Err(Error::HistoryTooSmall(_)) => {
                    let open: Vec<usize> = (0..m).filter(|&i| !sampled[i]).collect();
                    if open.is_empty() {
                        return Err(Error::SpaceExhausted);
                    }
                    let mut rng =
                        rng_from(derive_path(params.seed, &[stream::FALLBACK, step as u64]));
                    let pick = index::sample(&mut rng, open.len(), 1).index(0);
                    (open[pick], None)
                }
                Err(e) => return Err(e),
            };
        let phi = objective.evaluate(space.config(id)?)?;
        let breach = interval.map(|iv| breach_indicator(&iv, phi));
        let alpha_t = interval.map(|_| alpha.alpha_t());
        if let (Some(b), true) = (breach, params.adaptive) {
            alpha = adaptive_update(&alpha, b);
        }
        sampled[id] = true;
        hist_x.push(space.features(id)?.clone());
        hist_y.push(phi);
        trace.push(Trial {
            step,
            config_id: id,
            phi,
            interval,
            breach,
            alpha_t,
            elapsed: start.elapsed(),
        });
    }
    Ok(trace)
}
