//! Experiment runner: declarative specs, trace CSVs and seed-averaged
//! summaries.
//!
//! An experiment spec is a TOML file:
//!
//! ```toml
//! seeds = [0, 1, 2]
//! output_dir = "out"          # optional, default "acho-out"
//! record_wall_time = false    # optional, fills elapsed_ms when true
//! tune_surrogates = false     # optional
//!
//! [objective]
//! kind = "friedman"           # or "hypercube"
//! variant = 1                 # friedman only
//! n = 2000
//! noise_sd = 1.0              # friedman only
//! seed = 1234
//! # hypercube: d_informative = 5, d_redundant = 5, class_sep = 5.0
//!
//! [space]
//! preset = "random_forest"    # or an explicit list of [[space.domains]]
//! m = 1000
//! seed = 7
//!
//! [[runs]]
//! name = "cqi-qrf"
//! framework = "cqi"           # "lwci", "cqi" or "random"
//! quantile = "qrf"            # cqi: "qrf" or "gbm"
//! alpha = 0.8                 # target miss-coverage
//! budget = 120
//! ```
//!
//! Optional run keys: `point`, `variance` (lwci: `"gbm"` or `"knn"`),
//! `gamma`, `adaptive`, `n_init`, `train_fraction`, `inner_fraction`,
//! `point_params`, `variance_params`, `quantile_params`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::Interval;
use crate::error::{Error, Result};
use crate::objectives::{gen_friedman, gen_hypercube, FriedmanVariant, RandomForestObjective};
use crate::searcher::{
    run_acho, SearchFramework, SearchParams, SearchTrace, Trial, DEFAULT_GAMMA,
    DEFAULT_INNER_FRACTION, DEFAULT_N_INIT, DEFAULT_TRAIN_FRACTION,
};
use crate::space::{
    build_space, random_forest_domains, ConfigSpace, DomainKind, ParamDomain, ParamValue,
};
use crate::surrogate::{PointKind, QuantileKind, TreeParams};

pub const TRACE_HEADER: [&str; 9] = [
    "step",
    "elapsed_ms",
    "config_id",
    "phi",
    "lower",
    "upper",
    "breach",
    "alpha_t",
    "best_phi",
];
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_DIR: &str = "traces";
const DEFAULT_OUTPUT_DIR: &str = "acho-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Friedman {
        variant: u8,
        n: usize,
        #[serde(default = "one")]
        noise_sd: f64,
        seed: u64,
    },
    Hypercube {
        n: usize,
        #[serde(default = "five")]
        d_informative: usize,
        #[serde(default = "five")]
        d_redundant: usize,
        #[serde(default = "five_f")]
        class_sep: f64,
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn five() -> usize {
    5
}

fn five_f() -> f64 {
    5.0
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<RandomForestObjective> {
        let (dataset, seed) = match *self {
            ObjectiveSpec::Friedman {
                variant,
                n,
                noise_sd,
                seed,
            } => {
                let v = FriedmanVariant::from_number(variant).ok_or_else(|| {
                    Error::spec(
                        "objective.variant",
                        format!("expected 1, 2 or 3, got {variant}"),
                    )
                })?;
                (gen_friedman(v, n, noise_sd, seed)?, seed)
            }
            ObjectiveSpec::Hypercube {
                n,
                d_informative,
                d_redundant,
                class_sep,
                seed,
            } => (
                gen_hypercube(n, d_informative, d_redundant, class_sep, seed)?,
                seed,
            ),
        };
        Ok(RandomForestObjective::new(dataset, seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub values: Vec<ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub domains: Vec<DomainSpec>,
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<ConfigSpace> {
        let domains = match (self.preset.as_deref(), self.domains.is_empty()) {
            (Some("random_forest"), true) => random_forest_domains(),
            (Some(other), true) => {
                return Err(Error::spec(
                    "space.preset",
                    format!("unknown preset `{other}`"),
                ));
            }
            (Some(_), false) => {
                return Err(Error::spec(
                    "space",
                    "give either `preset` or `domains`, not both",
                ));
            }
            (None, true) => return Err(Error::spec("space", "missing `preset` or `domains`")),
            (None, false) => self
                .domains
                .iter()
                .map(|d| {
                    let kind = if d.values.iter().all(|v| matches!(v, ParamValue::Num(_))) {
                        DomainKind::Numeric
                    } else {
                        DomainKind::Categorical
                    };
                    ParamDomain::new(d.name.clone(), kind, d.values.clone())
                })
                .collect::<Result<_>>()?,
        };
        build_space(domains, self.m, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub framework: String,
    #[serde(default)]
    pub point: Option<PointKind>,
    #[serde(default)]
    pub variance: Option<PointKind>,
    #[serde(default)]
    pub quantile: Option<QuantileKind>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "yes")]
    pub adaptive: bool,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    pub budget: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_inner_fraction")]
    pub inner_fraction: f64,
    #[serde(default)]
    pub point_params: Option<TreeParams>,
    #[serde(default)]
    pub variance_params: Option<TreeParams>,
    #[serde(default)]
    pub quantile_params: Option<TreeParams>,
}

fn default_alpha() -> f64 {
    0.8
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn yes() -> bool {
    true
}

fn default_n_init() -> usize {
    DEFAULT_N_INIT
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

fn default_inner_fraction() -> f64 {
    DEFAULT_INNER_FRACTION
}

impl RunSpec {
    fn framework(&self, at: &str) -> Result<SearchFramework> {
        let field = |f: &str| format!("{at}.{f}");
        match self.framework.as_str() {
            "lwci" => Ok(SearchFramework::Lwci {
                point: self.point.unwrap_or(PointKind::Gbm),
                variance: self.variance.unwrap_or(PointKind::Gbm),
            }),
            "cqi" => Ok(SearchFramework::Cqi {
                quantile: self.quantile.unwrap_or(QuantileKind::Qrf),
            }),
            "random" => Ok(SearchFramework::Random),
            other => Err(Error::spec(
                field("framework"),
                format!("expected `lwci`, `cqi` or `random`, got `{other}`"),
            )),
        }
    }

    /// Search parameters for one replication seed.
    pub fn params(&self, at: &str, seed: u64, tune_surrogates: bool) -> Result<SearchParams> {
        let mut p = SearchParams::new(self.framework(at)?, self.alpha, self.budget, seed);
        p.gamma = self.gamma;
        p.adaptive = self.adaptive;
        p.n_init = self.n_init;
        p.train_fraction = self.train_fraction;
        p.inner_fraction = self.inner_fraction;
        p.point_params = self.point_params;
        p.variance_params = self.variance_params;
        p.quantile_params = self.quantile_params;
        p.tune_surrogates = tune_surrogates;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub objective: ObjectiveSpec,
    pub space: SpaceSpec,
    pub runs: Vec<RunSpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub tune_surrogates: bool,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| {
            let field = e.message().split('`').nth(1).unwrap_or("spec").to_string();
            Error::spec(field, e.message().trim().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Checks the structural invariants. Parameter ranges are checked again
    /// by the searcher.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::spec("seeds", "seed list must not be empty"));
        }
        if self.runs.is_empty() {
            return Err(Error::spec("runs", "at least one run is required"));
        }
        let mut names = std::collections::HashSet::new();
        for (i, run) in self.runs.iter().enumerate() {
            let at = format!("runs[{i}]");
            if run.name.is_empty() || run.name.contains(['/', '\\']) || run.name.starts_with('.') {
                return Err(Error::spec(
                    format!("{at}.name"),
                    format!("invalid run name `{}`", run.name),
                ));
            }
            if !names.insert(run.name.as_str()) {
                return Err(Error::spec(
                    format!("{at}.name"),
                    format!("duplicate run name `{}`", run.name),
                ));
            }
            if run.budget > self.space.m {
                return Err(Error::spec(
                    format!("{at}.budget"),
                    format!("budget {} exceeds space size {}", run.budget, self.space.m),
                ));
            }
            run.params(&at, self.seeds[0], self.tune_surrogates)?
                .validate(self.space.m)
                .map_err(|e| Error::spec(at.clone(), e.to_string()))?;
        }
        Ok(())
    }
}

/// Seed-aggregated results of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub n_traces: usize,
    pub mean_final_best_phi: f64,
    pub median_final_best_phi: f64,
    /// Mean over traces that have conformal trials.
    pub mean_final_breach_rate: Option<f64>,
    pub n_breach_traces: usize,
    /// Mean best phi after each step, over traces reaching that step.
    pub mean_best_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
}

impl Summary {
    pub fn run(&self, name: &str) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.name == name)
    }
}

// sorted before summing so the result ignores input order
fn mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn summarize_run(name: &str, traces: &[SearchTrace]) -> Result<RunSummary> {
    let traces: Vec<&SearchTrace> = traces.iter().filter(|t| !t.is_empty()).collect();
    if traces.is_empty() {
        return Err(Error::EmptyTraceSet);
    }
    let finals: Vec<f64> = traces.iter().map(|t| t.best_phi()).collect();
    let breaches: Vec<f64> = traces
        .iter()
        .filter_map(|t| t.final_breach_rate())
        .collect();
    let steps = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mean_best_curve = (0..steps)
        .map(|s| {
            mean(
                traces
                    .iter()
                    .filter_map(|t| t.best_curve().get(s).copied())
                    .collect(),
            )
        })
        .collect();
    Ok(RunSummary {
        name: name.to_string(),
        n_traces: traces.len(),
        mean_final_best_phi: mean(finals.clone()),
        median_final_best_phi: median(finals),
        n_breach_traces: breaches.len(),
        mean_final_breach_rate: (!breaches.is_empty()).then(|| mean(breaches)),
        mean_best_curve,
    })
}

/// Aggregates traces grouped by run name; runs keep their first-seen order.
pub fn summarize(traces: &[(String, SearchTrace)]) -> Result<Summary> {
    if traces.is_empty() {
        return Err(Error::EmptyTraceSet);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<SearchTrace>> = BTreeMap::new();
    for (name, trace) in traces {
        let g = groups.entry(name.as_str()).or_insert_with(|| {
            order.push(name.as_str());
            Vec::new()
        });
        g.push(trace.clone());
    }
    let runs = order
        .into_iter()
        .map(|name| summarize_run(name, &groups[name]))
        .collect::<Result<_>>()?;
    Ok(Summary { runs })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders a trace as CSV. `elapsed_ms` is left empty unless
/// `with_wall_time`.
pub fn trace_csv(trace: &SearchTrace, with_wall_time: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::InvalidParams(format!("csv encoding failed: {e}"));
    w.write_record(TRACE_HEADER).map_err(to_err)?;
    for (t, best) in trace.trials().iter().zip(trace.best_curve()) {
        let elapsed = with_wall_time.then_some(t.elapsed.as_secs_f64() * 1000.0);
        w.write_record([
            t.step.to_string(),
            opt(elapsed),
            t.config_id.to_string(),
            t.phi.to_string(),
            opt(t.interval.map(|i| i.lower)),
            opt(t.interval.map(|i| i.upper)),
            opt(t.breach.map(u8::from)),
            opt(t.alpha_t),
            best.to_string(),
        ])
        .map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidParams(format!("csv encoding failed: {e}")))
}

pub fn emit_trace_csv(trace: &SearchTrace, path: &Path, with_wall_time: bool) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, trace_csv(trace, with_wall_time)?).map_err(|e| Error::io(path, e))
}

/// Parses a trace CSV back into a trace.
pub fn read_trace_csv(path: &Path) -> Result<SearchTrace> {
    let bad = |message: String| Error::MalformedTrace {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => bad(format!("{other:?}")),
    })?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut trials = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<Option<&str>> {
            let s = rec
                .get(i)
                .ok_or_else(|| bad(format!("row {}: missing column", line + 1)))?;
            Ok((!s.is_empty()).then_some(s))
        };
        fn num<T: std::str::FromStr>(
            s: Option<&str>,
            col: &str,
            err: &dyn Fn(String) -> Error,
        ) -> Result<Option<T>> {
            s.map(|s| {
                s.parse::<T>()
                    .map_err(|_| err(format!("bad {col} value `{s}`")))
            })
            .transpose()
        }
        let need = |v: Option<usize>, col: &str| v.ok_or_else(|| bad(format!("missing {col}")));
        let step = need(num(field(0)?, "step", &bad)?, "step")?;
        let elapsed_ms: Option<f64> = num(field(1)?, "elapsed_ms", &bad)?;
        let config_id = need(num(field(2)?, "config_id", &bad)?, "config_id")?;
        let phi: f64 = num(field(3)?, "phi", &bad)?.ok_or_else(|| bad("missing phi".into()))?;
        let lower: Option<f64> = num(field(4)?, "lower", &bad)?;
        let upper: Option<f64> = num(field(5)?, "upper", &bad)?;
        let breach: Option<u8> = num(field(6)?, "breach", &bad)?;
        let alpha_t: Option<f64> = num(field(7)?, "alpha_t", &bad)?;
        let interval = match (lower, upper) {
            (Some(lower), Some(upper)) => Some(Interval { lower, upper }),
            (None, None) => None,
            _ => return Err(bad(format!("row {}: half-open interval", line + 1))),
        };
        trials.push(Trial {
            step,
            config_id,
            phi,
            interval,
            breach: breach.map(|b| b != 0),
            alpha_t,
            elapsed: std::time::Duration::from_secs_f64(
                elapsed_ms.unwrap_or(0.0).max(0.0) / 1000.0,
            ),
        });
    }
    SearchTrace::from_trials(trials).map_err(|e| bad(e.to_string()))
}

/// Trace file path of one (run, seed) execution.
pub fn trace_path(out: &Path, run: &str, seed: u64) -> PathBuf {
    out.join(TRACE_DIR)
        .join(run)
        .join(format!("seed_{seed}.csv"))
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub summary: Summary,
    pub trace_files: Vec<PathBuf>,
    pub traces: Vec<(String, u64, SearchTrace)>,
}

/// Runs every (run, seed) pair, writes one trace CSV per pair and a summary
/// JSON. `out` overrides the spec's output directory.
pub fn run_experiment(spec: &ExperimentSpec, out: Option<&Path>) -> Result<ExperimentReport> {
    spec.validate()?;
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let objective = spec.objective.build()?;
    let space = spec.space.build()?;
    let jobs: Vec<(usize, u64)> = (0..spec.runs.len())
        .flat_map(|r| spec.seeds.iter().map(move |&s| (r, s)))
        .collect();
    let traces: Vec<(String, u64, SearchTrace)> = jobs
        .par_iter()
        .map(|&(r, seed)| {
            let run = &spec.runs[r];
            let params = run.params(&format!("runs[{r}]"), seed, spec.tune_surrogates)?;
            let trace = run_acho(&objective, &space, &params)?;
            emit_trace_csv(
                &trace,
                &trace_path(&out, &run.name, seed),
                spec.record_wall_time,
            )?;
            Ok((run.name.clone(), seed, trace))
        })
        .collect::<Result<_>>()?;
    let grouped: Vec<(String, SearchTrace)> = traces
        .iter()
        .map(|(n, _, t)| (n.clone(), t.clone()))
        .collect();
    let summary = summarize(&grouped)?;
    write_summary(&summary, &out.join(SUMMARY_FILE))?;
    Ok(ExperimentReport {
        trace_files: traces
            .iter()
            .map(|(n, s, _)| trace_path(&out, n, *s))
            .collect(),
        summary,
        traces,
    })
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::InvalidParams(format!("summary encoding failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads every `traces/<run>/seed_*.csv` under `dir` and summarizes them.
pub fn summarize_dir(dir: &Path) -> Result<Summary> {
    let root = dir.join(TRACE_DIR);
    let list = |p: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(p, err)))
            .collect::<Result<_>>()?;
        v.sort();
        Ok(v)
    };
    let mut traces = Vec::new();
    for run_dir in list(&root)?.into_iter().filter(|p| p.is_dir()) {
        let name = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for file in list(&run_dir)? {
            if file.extension().is_some_and(|e| e == "csv") {
                traces.push((name.clone(), read_trace_csv(&file)?));
            }
        }
    }
    summarize(&traces)
}

/// Plain-text table of a summary.
pub fn render_summary(summary: &Summary) -> String {
    let mut s = format!(
        "{:<20} {:>6} {:>16} {:>16} {:>12}\n",
        "run", "seeds", "mean best phi", "median best phi", "breach rate"
    );
    for r in &summary.runs {
        s.push_str(&format!(
            "{:<20} {:>6} {:>16.6} {:>16.6} {:>12}\n",
            r.name,
            r.n_traces,
            r.mean_final_best_phi,
            r.median_final_best_phi,
            r.mean_final_breach_rate
                .map_or("-".into(), |b| format!("{b:.4}")),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn trial(step: usize, phi: f64, breach: Option<bool>) -> Trial {
        Trial {
            step,
            config_id: step * 3,
            phi,
            interval: breach.map(|_| Interval {
                lower: phi - 1.0,
                upper: phi + 0.5,
            }),
            breach,
            alpha_t: breach.map(|_| 0.8),
            elapsed: Duration::from_millis(step as u64),
        }
    }

    fn trace(phis: &[f64], breaches: &[bool]) -> SearchTrace {
        let mut trials = Vec::new();
        for (i, &p) in phis.iter().enumerate() {
            trials.push(trial(i + 1, p, None));
        }
        for (i, &b) in breaches.iter().enumerate() {
            trials.push(trial(phis.len() + i + 1, -10.0, Some(b)));
        }
        SearchTrace::from_trials(trials).unwrap()
    }

    #[test]
    fn summary_of_one_trace_is_its_finals() {
        let t = trace(&[0.1, 0.3, 0.2], &[true, false]);
        let s = summarize_run("r", std::slice::from_ref(&t)).unwrap();
        assert_eq!(s.mean_final_best_phi, 0.3);
        assert_eq!(s.median_final_best_phi, 0.3);
        assert_eq!(s.mean_final_breach_rate, Some(0.5));
        assert_eq!(s.mean_best_curve, t.best_curve());
    }

    #[test]
    fn mean_and_median_of_two() {
        let s = summarize_run("r", &[trace(&[0.4], &[]), trace(&[0.6], &[])]).unwrap();
        assert!((s.mean_final_best_phi - 0.5).abs() < 1e-15);
        assert!((s.median_final_best_phi - 0.5).abs() < 1e-15);
        assert_eq!(s.mean_final_breach_rate, None);
    }

    #[test]
    fn planted_breach_sequences() {
        let mut traces = Vec::new();
        let mut expected = 0.0;
        for k in 0..10 {
            // k breaches among 10 conformal trials
            let seq: Vec<bool> = (0..10).map(|i| i < k).collect();
            expected += k as f64 / 10.0;
            traces.push(("r".to_string(), trace(&[0.0, 1.0], &seq)));
        }
        expected /= 10.0;
        let s = summarize(&traces).unwrap();
        assert!((s.runs[0].mean_final_breach_rate.unwrap() - expected).abs() < 1e-12);
        assert_eq!(s.runs[0].n_breach_traces, 10);

        let mut reversed = traces.clone();
        reversed.reverse();
        assert_eq!(summarize(&reversed).unwrap(), s);
    }

    #[test]
    fn empty_trace_set() {
        assert!(matches!(summarize(&[]), Err(Error::EmptyTraceSet)));
        assert!(matches!(summarize_run("r", &[]), Err(Error::EmptyTraceSet)));
    }

    #[test]
    fn csv_phase_structure_and_round_trip() {
        let phis: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64 / 3.0).collect();
        let t = trace(&phis, &[true, false, false, true, false]);
        let text = String::from_utf8(trace_csv(&t, false).unwrap()).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER.join(","));
        assert_eq!(lines.len(), 26);
        for l in &lines[1..21] {
            let cols: Vec<&str> = l.split(',').collect();
            assert!(cols[4..8].iter().all(|c| c.is_empty()), "{l}");
        }
        let best: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(best.windows(2).all(|w| w[0] <= w[1]));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        emit_trace_csv(&t, &p, true).unwrap();
        let back = read_trace_csv(&p).unwrap();
        assert!(back.same_outcome(&t));
        assert_eq!(back.cumulative_breach_rate(), t.cumulative_breach_rate());
    }

    #[test]
    fn malformed_trace_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        fs::write(&p, "step,phi\n1,2\n").unwrap();
        assert!(matches!(
            read_trace_csv(&p),
            Err(Error::MalformedTrace { .. })
        ));
    }

    const SPEC: &str = r#"
seeds = [1, 2]

[objective]
kind = "friedman"
variant = 1
n = 200
seed = 3

[space]
preset = "random_forest"
m = 40
seed = 4

[[runs]]
name = "cqi-qrf"
framework = "cqi"
quantile = "qrf"
n_init = 5
budget = 8
quantile_params = { n_trees = 10 }

[[runs]]
name = "random"
framework = "random"
budget = 8
"#;

    #[test]
    fn spec_parses_with_defaults() {
        let spec = ExperimentSpec::from_toml_str(SPEC).unwrap();
        assert_eq!(spec.runs[0].alpha, 0.8);
        assert!(spec.runs[0].adaptive);
        assert_eq!(spec.runs[0].quantile_params.unwrap().n_trees, 10);
        assert_eq!(spec.space.build().unwrap().len(), 40);
    }

    #[test]
    fn spec_errors_name_the_field() {
        let empty = SPEC.replace("seeds = [1, 2]", "seeds = []");
        match ExperimentSpec::from_toml_str(&empty) {
            Err(Error::SpecParse { field, .. }) => assert_eq!(field, "seeds"),
            other => panic!("{other:?}"),
        }
        let big = SPEC.replace(
            "budget = 8\nquantile_params",
            "budget = 80\nquantile_params",
        );
        match ExperimentSpec::from_toml_str(&big) {
            Err(Error::SpecParse { field, .. }) => assert_eq!(field, "runs[0].budget"),
            other => panic!("{other:?}"),
        }
        let missing = SPEC.replace("m = 40\n", "");
        match ExperimentSpec::from_toml_str(&missing) {
            Err(Error::SpecParse { field, .. }) => assert_eq!(field, "m"),
            other => panic!("{other:?}"),
        }
        let unknown = SPEC.replace("framework = \"random\"", "framework = \"grid\"");
        match ExperimentSpec::from_toml_str(&unknown) {
            Err(Error::SpecParse { field, .. }) => assert_eq!(field, "runs[1].framework"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_domains() {
        let text = SPEC.replace(
            "preset = \"random_forest\"",
            "domains = [{ name = \"n_estimators\", values = [10, 20] }, { name = \"min_samples_split\", values = [0.1, 0.2] }, { name = \"min_samples_leaf\", values = [0.1, 0.2] }, { name = \"max_features\", values = [0.5, 1.0] }]\n",
        )
        .replace("m = 40", "m = 16");
        let spec = ExperimentSpec::from_toml_str(&text).unwrap();
        assert_eq!(spec.space.build().unwrap().len(), 16);
    }

    #[test]
    fn experiment_writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::from_toml_str(SPEC).unwrap();
        let report = run_experiment(&spec, Some(dir.path())).unwrap();
        assert_eq!(report.trace_files.len(), 4);
        assert!(report.trace_files.iter().all(|p| p.exists()));
        assert!(dir.path().join(SUMMARY_FILE).exists());
        assert_eq!(report.summary.runs.len(), 2);
        assert!(report.summary.runs.iter().all(|r| r.n_traces == 2));
        let again = summarize_dir(dir.path()).unwrap();
        assert_eq!(again.runs.len(), 2);
        for r in &report.summary.runs {
            let a = again.run(&r.name).unwrap();
            assert_eq!(a.mean_final_best_phi, r.mean_final_best_phi);
            assert_eq!(a.mean_final_breach_rate, r.mean_final_breach_rate);
        }
    }
}
