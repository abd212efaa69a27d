//! Python bindings. Community indices are 0-based on this side.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mode_quest::algorithms::run_trial_observed;
use mode_quest::bench::{bench as run_bench, builtin_instance as lookup, BenchConfig};
use mode_quest::bounds::bound_ratio_check;
use mode_quest::{ib, iless, Algorithm, Observation, PriorSpec, RunConfig};

fn err(e: mode_quest::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A partitioned population with a unique largest community.
#[pyclass(name = "Instance", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: mode_quest::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(sizes: Vec<u64>) -> PyResult<Self> {
        Ok(Self {
            inner: mode_quest::Instance::new(sizes).map_err(err)?,
        })
    }

    /// A built-in instance (`I1`, `I2`, `I3`, `dataset1`..`dataset3`) scaled by `omega`.
    #[staticmethod]
    #[pyo3(signature = (name, omega = 1))]
    fn builtin(name: &str, omega: u64) -> PyResult<Self> {
        Ok(Self {
            inner: lookup(name, omega).map_err(err)?,
        })
    }

    #[getter]
    fn sizes(&self) -> Vec<u64> {
        self.inner.sizes().to_vec()
    }

    #[getter]
    fn mode(&self) -> usize {
        self.inner.mode()
    }

    #[getter]
    fn population(&self) -> u64 {
        self.inner.population()
    }

    fn proportions(&self) -> Vec<f64> {
        self.inner.proportions()
    }

    fn __repr__(&self) -> String {
        format!("Instance({:?})", self.inner.sizes())
    }
}

/// Running counts `N_i(t)` and distinct counts `S_j(t)`.
#[pyclass(name = "ObservationState")]
struct PyObservationState {
    inner: mode_quest::ObservationState,
}

#[pymethods]
impl PyObservationState {
    #[new]
    fn new(k: usize) -> Self {
        Self {
            inner: mode_quest::ObservationState::new(k),
        }
    }

    /// Records one draw; `fresh` is `None` under identityless sampling.
    #[pyo3(signature = (community, fresh = None))]
    fn record(&mut self, community: usize, fresh: Option<bool>) -> PyResult<()> {
        if community >= self.inner.k() {
            return Err(PyValueError::new_err("community index out of range"));
        }
        if fresh == Some(false) && self.inner.distinct()[community] == 0 {
            return Err(PyValueError::new_err(
                "repeat draw before any new individual",
            ));
        }
        self.inner.record(&Observation { community, fresh });
        Ok(())
    }

    #[getter]
    fn t(&self) -> u64 {
        self.inner.t()
    }

    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts().to_vec()
    }

    #[getter]
    fn distinct(&self) -> Vec<u64> {
        self.inner.distinct().to_vec()
    }

    fn identity_active(&self) -> bool {
        self.inner.identity_active()
    }
}

#[pyfunction]
fn threshold_beta(k: usize, delta: f64) -> f64 {
    mode_quest::threshold_beta(k, delta)
}

#[pyfunction]
fn z_ab(counts: Vec<u64>, a: usize, b: usize) -> PyResult<f64> {
    iless::z_ab(&counts, a, b).map_err(err)
}

#[pyfunction]
fn z_tilde_ab(counts: Vec<u64>, a: usize, b: usize) -> PyResult<f64> {
    iless::z_tilde_ab(&counts, a, b).map_err(err)
}

#[pyfunction]
fn constrained_mle(counts: Vec<u64>, a: usize, b: usize) -> PyResult<Vec<f64>> {
    iless::constrained_mle(&counts, a, b).map_err(err)
}

/// `Z(t)`, `Z̃(t)` and the top pair for a count vector.
#[pyfunction]
fn z_stat<'py>(py: Python<'py>, counts: Vec<u64>) -> PyResult<Bound<'py, PyDict>> {
    let r = iless::iless_report(&counts).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("z", r.z)?;
    out.set_item("z_tilde", r.z_tilde)?;
    out.set_item("a_hat", r.a_hat)?;
    out.set_item("b_hat", r.b_hat)?;
    Ok(out)
}

#[pyfunction]
fn log_integral_term(d: f64, s: u64) -> PyResult<f64> {
    ib::log_integral_term(d, s).map_err(err)
}

#[pyfunction]
fn r_of_gamma(s_a: u64, s_b: u64, gamma: f64) -> f64 {
    ib::r_of_gamma(s_a, s_b, gamma)
}

#[pyfunction]
fn solve_gamma0<'py>(
    py: Python<'py>,
    distinct: Vec<u64>,
    t: u64,
    a: usize,
    b: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let s = ib::solve_gamma0(&distinct, t, a, b).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("gamma0", s.gamma0)?;
    out.set_item("g_value", s.g_value)?;
    out.set_item("iterations", s.iterations)?;
    out.set_item("d_star", s.d_star)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (distinct, t, alpha = 1, q = 0.1))]
fn t1_box_sum(distinct: Vec<u64>, t: u64, alpha: u32, q: f64) -> PyResult<f64> {
    let prior = PriorSpec::geometric(q).map_err(err)?;
    ib::t1_box_sum(&distinct, t, alpha, &prior).map_err(err)
}

/// The identity-based statistic `Y(t)`; `y` is `None` while inactive.
#[pyfunction]
#[pyo3(signature = (distinct, t, alpha = 1, q = 0.1))]
fn y_stat<'py>(
    py: Python<'py>,
    distinct: Vec<u64>,
    t: u64,
    alpha: u32,
    q: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let prior = PriorSpec::geometric(q).map_err(err)?;
    let r = ib::y_stat(&distinct, t, alpha, &prior).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("active", r.active)?;
    out.set_item("y", r.y)?;
    out.set_item("a_tilde", r.a_tilde)?;
    out.set_item("b_tilde", r.b_tilde)?;
    out.set_item("gamma0", r.gamma0)?;
    out.set_item("box_size", r.box_size)?;
    Ok(out)
}

/// One seeded trial; returns the trial result and optionally its trace.
#[pyfunction]
#[pyo3(signature = (instance, algorithm, delta = 0.1, alpha = 1, q = 0.1, seed = 0, trial = 0,
                    max_epochs = mode_quest::model::DEFAULT_MAX_EPOCHS, with_trace = false))]
#[allow(clippy::too_many_arguments)]
fn run_trial<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    algorithm: &str,
    delta: f64,
    alpha: u32,
    q: f64,
    seed: u64,
    trial: u64,
    max_epochs: u64,
    with_trace: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let algorithm: Algorithm = algorithm.parse().map_err(err)?;
    let config = RunConfig::new(algorithm, delta)
        .with_alpha(alpha)
        .with_prior(PriorSpec::geometric(q).map_err(err)?)
        .with_seed(seed)
        .with_max_epochs(max_epochs);
    let mut trace: Vec<Observation> = Vec::new();
    let r = py
        .detach(|| run_trial_observed(&instance.inner, &config, trial, &mut trace))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("stopping_time", r.stopping_time)?;
    out.set_item("declared_mode", r.declared_mode)?;
    out.set_item("rule_fired", format!("{:?}", r.rule_fired))?;
    out.set_item("error", r.error)?;
    out.set_item("trace_len_distinct", r.trace_len_distinct)?;
    if with_trace {
        let rows: Vec<(usize, Option<bool>)> =
            trace.iter().map(|o| (o.community, o.fresh)).collect();
        out.set_item("trace", rows)?;
    }
    Ok(out)
}

/// Lower bounds and their ratio for an instance, as a JSON string.
#[pyfunction]
#[pyo3(signature = (instance, delta = 0.1))]
fn bounds(instance: &PyInstance, delta: f64) -> PyResult<String> {
    let report = bound_ratio_check(&instance.inner, delta).map_err(err)?;
    serde_json(&report)
}

/// Runs a benchmark from a JSON config; returns the summary as JSON.
#[pyfunction]
#[pyo3(name = "bench", signature = (config_json, jobs = 0))]
fn run_benchmark(py: Python<'_>, config_json: &str, jobs: usize) -> PyResult<String> {
    let config: BenchConfig = serde_json_parse(config_json)?;
    let output = py.detach(|| run_bench(&config, jobs)).map_err(err)?;
    serde_json(&output.summary)
}

fn serde_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn serde_json_parse<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn mode_quest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyObservationState>()?;
    m.add_function(wrap_pyfunction!(threshold_beta, m)?)?;
    m.add_function(wrap_pyfunction!(z_ab, m)?)?;
    m.add_function(wrap_pyfunction!(z_tilde_ab, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_mle, m)?)?;
    m.add_function(wrap_pyfunction!(z_stat, m)?)?;
    m.add_function(wrap_pyfunction!(log_integral_term, m)?)?;
    m.add_function(wrap_pyfunction!(r_of_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gamma0, m)?)?;
    m.add_function(wrap_pyfunction!(t1_box_sum, m)?)?;
    m.add_function(wrap_pyfunction!(y_stat, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
