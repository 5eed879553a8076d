//! Python bindings for the `acho` crate.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use acho::conformal::{self, AdaptiveAlphaState, Framework, NonconformityScores};
use acho::harness;
use acho::objectives::{self, FriedmanVariant, RandomForestObjective};
use acho::searcher::{self, SearchFramework, SearchParams};
use acho::space::{self, DomainKind, ParamDomain, ParamValue};
use acho::surrogate::{self, PointKind, QuantileKind};
use acho::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::EmptyTraceSet | Error::MalformedTrace { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &ParamValue) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        ParamValue::Num(x) => x.into_pyobject(py)?.into_any(),
        ParamValue::Cat(s) => s.into_pyobject(py)?.into_any(),
    })
}

/// A finite, seeded set of candidate configurations.
#[pyclass(name = "ConfigSpace", module = "acho_py", frozen)]
struct PyConfigSpace {
    inner: space::ConfigSpace,
}

#[pymethods]
impl PyConfigSpace {
    /// The random-forest search space with `m` distinct configurations.
    #[staticmethod]
    #[pyo3(signature = (m, seed = 0))]
    fn random_forest(m: usize, seed: u64) -> PyResult<Self> {
        let inner = space::build_space(space::random_forest_domains(), m, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Builds a space from `{name: [values...]}`. Lists of numbers are
    /// numeric domains, lists of strings categorical.
    #[staticmethod]
    #[pyo3(signature = (domains, m, seed = 0))]
    fn from_domains(
        domains: BTreeMap<String, Bound<'_, PyAny>>,
        m: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let mut built = Vec::with_capacity(domains.len());
        for (name, values) in domains {
            let domain = if let Ok(nums) = values.extract::<Vec<f64>>() {
                ParamDomain::numeric(name, nums)
            } else {
                let cats: Vec<String> = values.extract()?;
                let cats = cats.into_iter().map(ParamValue::Cat).collect();
                ParamDomain::new(name, DomainKind::Categorical, cats)
            };
            built.push(domain.map_err(to_py)?);
        }
        let inner = space::build_space(built, m, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Assignment of configuration `id` as a dict.
    fn config<'py>(&self, py: Python<'py>, id: usize) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.config(id).map_err(to_py)?;
        let d = PyDict::new(py);
        for (name, v) in c.assignment() {
            d.set_item(name, value_to_py(py, v)?)?;
        }
        Ok(d)
    }

    /// Numeric encoding of configuration `id`.
    fn features(&self, id: usize) -> PyResult<Vec<f64>> {
        Ok(self.inner.features(id).map_err(to_py)?.0.clone())
    }
}

/// Validation score of a random forest trained on a synthetic dataset.
#[pyclass(name = "Objective", module = "acho_py", frozen)]
struct PyObjective {
    inner: RandomForestObjective,
}

#[pymethods]
impl PyObjective {
    #[staticmethod]
    #[pyo3(signature = (variant, n, noise_sd = 1.0, seed = 0))]
    fn friedman(variant: u8, n: usize, noise_sd: f64, seed: u64) -> PyResult<Self> {
        let v = FriedmanVariant::from_number(variant).ok_or_else(|| {
            PyValueError::new_err(format!("variant must be 1, 2 or 3, got {variant}"))
        })?;
        let data = objectives::gen_friedman(v, n, noise_sd, seed).map_err(to_py)?;
        Ok(Self {
            inner: RandomForestObjective::new(data, seed),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d_informative = 5, d_redundant = 5, class_sep = 5.0, seed = 0))]
    fn hypercube(
        n: usize,
        d_informative: usize,
        d_redundant: usize,
        class_sep: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let data = objectives::gen_hypercube(n, d_informative, d_redundant, class_sep, seed)
            .map_err(to_py)?;
        Ok(Self {
            inner: RandomForestObjective::new(data, seed),
        })
    }

    /// Score of configuration `id` of `space`; larger is better.
    fn evaluate(&self, py: Python<'_>, space: &PyConfigSpace, id: usize) -> PyResult<f64> {
        let config = space.inner.config(id).map_err(to_py)?;
        py.detach(|| searcher::Objective::evaluate(&self.inner, config))
            .map_err(to_py)
    }
}

/// Per-trial log of a search.
#[pyclass(name = "SearchTrace", module = "acho_py", frozen)]
struct PySearchTrace {
    inner: searcher::SearchTrace,
}

#[pymethods]
impl PySearchTrace {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn best_phi(&self) -> f64 {
        self.inner.best_phi()
    }

    #[getter]
    fn best_config_id(&self) -> Option<usize> {
        self.inner.best_config_id()
    }

    #[getter]
    fn best_curve(&self) -> Vec<f64> {
        self.inner.best_curve().to_vec()
    }

    #[getter]
    fn cumulative_breach_rate(&self) -> Vec<Option<f64>> {
        self.inner.cumulative_breach_rate().to_vec()
    }

    #[getter]
    fn config_ids(&self) -> Vec<usize> {
        self.inner.trials().iter().map(|t| t.config_id).collect()
    }

    #[getter]
    fn phis(&self) -> Vec<f64> {
        self.inner.trials().iter().map(|t| t.phi).collect()
    }

    /// Pre-evaluation intervals; `None` for random draws.
    #[getter]
    fn intervals(&self) -> Vec<Option<(f64, f64)>> {
        self.inner
            .trials()
            .iter()
            .map(|t| t.interval.map(|i| (i.lower, i.upper)))
            .collect()
    }

    /// The trace in the harness CSV format.
    #[pyo3(signature = (wall_time = false))]
    fn to_csv(&self, wall_time: bool) -> PyResult<String> {
        let bytes = harness::trace_csv(&self.inner, wall_time).map_err(to_py)?;
        String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

fn framework(name: &str, point: &str, variance: &str, quantile: &str) -> PyResult<SearchFramework> {
    let pk = |s: &str| match s {
        "gbm" => Ok(PointKind::Gbm),
        "knn" => Ok(PointKind::Knn),
        _ => Err(PyValueError::new_err(format!(
            "unknown point estimator `{s}`"
        ))),
    };
    Ok(match name {
        "lwci" => SearchFramework::Lwci {
            point: pk(point)?,
            variance: pk(variance)?,
        },
        "cqi" => SearchFramework::Cqi {
            quantile: match quantile {
                "qrf" => QuantileKind::Qrf,
                "gbm" => QuantileKind::Gbm,
                _ => {
                    return Err(PyValueError::new_err(format!(
                        "unknown quantile estimator `{quantile}`"
                    )))
                }
            },
        },
        "random" => SearchFramework::Random,
        _ => return Err(PyValueError::new_err(format!("unknown framework `{name}`"))),
    })
}

/// Conformal hyperparameter search. `alpha` is the target miss-coverage.
#[pyfunction]
#[pyo3(signature = (
    objective, space, budget, seed = 0, framework_name = "cqi", alpha = 0.8, gamma = searcher::DEFAULT_GAMMA,
    adaptive = true, n_init = searcher::DEFAULT_N_INIT, point = "gbm", variance = "gbm", quantile = "qrf",
    tune_surrogates = false
))]
#[allow(clippy::too_many_arguments)]
fn run_acho(
    py: Python<'_>,
    objective: &PyObjective,
    space: &PyConfigSpace,
    budget: usize,
    seed: u64,
    framework_name: &str,
    alpha: f64,
    gamma: f64,
    adaptive: bool,
    n_init: usize,
    point: &str,
    variance: &str,
    quantile: &str,
    tune_surrogates: bool,
) -> PyResult<PySearchTrace> {
    let mut params = SearchParams::new(
        framework(framework_name, point, variance, quantile)?,
        alpha,
        budget,
        seed,
    );
    params.gamma = gamma;
    params.adaptive = adaptive;
    params.n_init = n_init;
    params.tune_surrogates = tune_surrogates;
    let inner = py
        .detach(|| searcher::run_acho(&objective.inner, &space.inner, &params))
        .map_err(to_py)?;
    Ok(PySearchTrace { inner })
}

#[pyfunction]
#[pyo3(signature = (objective, space, budget, seed = 0))]
fn run_random_search(
    py: Python<'_>,
    objective: &PyObjective,
    space: &PyConfigSpace,
    budget: usize,
    seed: u64,
) -> PyResult<PySearchTrace> {
    let inner = py
        .detach(|| searcher::run_random_search(&objective.inner, &space.inner, budget, seed))
        .map_err(to_py)?;
    Ok(PySearchTrace { inner })
}

/// Runs an experiment spec (TOML text) and returns the summary as JSON.
#[pyfunction]
#[pyo3(signature = (spec, out = None))]
fn run_experiment(py: Python<'_>, spec: &str, out: Option<PathBuf>) -> PyResult<String> {
    let spec = harness::ExperimentSpec::from_toml_str(spec).map_err(to_py)?;
    let report = py
        .detach(|| harness::run_experiment(&spec, out.as_deref()))
        .map_err(to_py)?;
    serde_json::to_string(&report.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Finite-sample conformal quantile. `signed` selects signed (CQI) scores.
#[pyfunction]
#[pyo3(signature = (scores, level, signed = false))]
fn finite_sample_quantile(scores: Vec<f64>, level: f64, signed: bool) -> PyResult<f64> {
    let fw = if signed {
        Framework::Cqi
    } else {
        Framework::Split
    };
    let s = NonconformityScores::new(scores, fw).map_err(to_py)?;
    conformal::finite_sample_quantile(&s, level).map_err(to_py)
}

/// Working alpha after each breach indicator, starting from `alpha`.
#[pyfunction]
fn adaptive_alpha_path(alpha: f64, gamma: f64, breaches: Vec<bool>) -> PyResult<Vec<f64>> {
    let mut state = AdaptiveAlphaState::new(alpha, gamma).map_err(to_py)?;
    let mut path = Vec::with_capacity(breaches.len());
    for b in breaches {
        state = conformal::adaptive_update(&state, b);
        path.push(state.alpha_t());
    }
    Ok(path)
}

#[pyfunction]
fn pinball_loss(residual: f64, beta: f64) -> PyResult<f64> {
    surrogate::pinball_loss(residual, beta).map_err(to_py)
}

#[pyfunction]
fn empirical_quantile(values: Vec<f64>, beta: f64) -> PyResult<f64> {
    if values.is_empty() {
        return Err(PyValueError::new_err("values must not be empty"));
    }
    Ok(surrogate::empirical_quantile(&values, beta))
}

/// Friedman dataset as `(rows, targets)`.
#[pyfunction]
#[pyo3(signature = (variant, n, noise_sd = 1.0, seed = 0))]
fn gen_friedman(
    variant: u8,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let v = FriedmanVariant::from_number(variant).ok_or_else(|| {
        PyValueError::new_err(format!("variant must be 1, 2 or 3, got {variant}"))
    })?;
    let d = objectives::gen_friedman(v, n, noise_sd, seed).map_err(to_py)?;
    Ok((
        d.features().rows().map(<[f64]>::to_vec).collect(),
        d.targets().to_vec(),
    ))
}

#[pymodule]
fn acho_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfigSpace>()?;
    m.add_class::<PyObjective>()?;
    m.add_class::<PySearchTrace>()?;
    m.add_function(wrap_pyfunction!(run_acho, m)?)?;
    m.add_function(wrap_pyfunction!(run_random_search, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(finite_sample_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_alpha_path, m)?)?;
    m.add_function(wrap_pyfunction!(pinball_loss, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(gen_friedman, m)?)?;
    Ok(())
}
