//! Python bindings for the `weakdisc` simulator.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use weakdisc::discriminate::{self, DiscriminationPair, Hypothesis, SuccessCurve};
use weakdisc::experiment::{self, ExperimentSpec, RunError};
use weakdisc::stats::{self, RngStream};
use weakdisc::tsvf::{self, MomentReport, TsvfSetup};
use weakdisc::walk::{self, CollapseLabel, PointerModel, WalkBoundaries};

fn err(e: weakdisc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: RunError) -> PyErr {
    match e {
        RunError::Io { .. } => PyOSError::new_err(e.to_json().to_string()),
        _ => PyValueError::new_err(e.to_json().to_string()),
    }
}

fn label_str(l: CollapseLabel) -> &'static str {
    match l {
        CollapseLabel::Zero => "zero",
        CollapseLabel::One => "one",
        CollapseLabel::MaxedOut => "maxed_out",
    }
}

fn parse_hypothesis(s: &str) -> PyResult<Hypothesis> {
    match s {
        "psi1" => Ok(Hypothesis::Psi1),
        "psi2" => Ok(Hypothesis::Psi2),
        _ => Err(PyValueError::new_err(format!("hypothesis must be 'psi1' or 'psi2', got {s:?}"))),
    }
}

/// Real qubit state `alpha|0> + beta|1>`.
#[pyclass(name = "QubitState", frozen)]
struct PyQubitState(weakdisc::QubitState);

#[pymethods]
impl PyQubitState {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        weakdisc::QubitState::new(alpha, beta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_angle(degrees: f64) -> Self {
        Self(weakdisc::state_from_angle(degrees))
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    /// Angle from `|0>` in degrees.
    fn angle(&self) -> f64 {
        self.0.angle().degrees()
    }

    fn born_probabilities(&self) -> (f64, f64) {
        self.0.born_probabilities()
    }

    fn overlap(&self, other: PyRef<'_, PyQubitState>) -> f64 {
        self.0.overlap(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("QubitState(alpha={}, beta={})", self.0.alpha(), self.0.beta())
    }
}

#[pyfunction]
fn helstrom_bound(theta_deg: f64) -> f64 {
    weakdisc::helstrom_bound(theta_deg)
}

/// The pair at `45 +- theta/2` degrees.
#[pyfunction]
fn make_discrimination_pair(theta_deg: f64) -> PyResult<(PyQubitState, PyQubitState)> {
    let (a, b) = weakdisc::make_discrimination_pair(theta_deg).map_err(err)?;
    Ok((PyQubitState(a), PyQubitState(b)))
}

/// One walk from `start`; returns `steps`, `label`, the final amplitudes and
/// the readings.
#[pyfunction]
#[pyo3(signature = (start, sigma, boundaries, seed, trial=0, max_steps=None, g=1.0))]
#[allow(clippy::too_many_arguments)]
fn run_walk<'py>(
    py: Python<'py>,
    start: PyRef<'_, PyQubitState>,
    sigma: f64,
    boundaries: (f64, f64),
    seed: u64,
    trial: u64,
    max_steps: Option<u64>,
    g: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pm = PointerModel::with_coupling(sigma, g).map_err(err)?;
    let wb = WalkBoundaries::new(boundaries.0, boundaries.1).map_err(err)?;
    let mut rng = RngStream::new(seed, trial);
    let out = walk::run_walk(&start.0, &pm, &wb, max_steps.unwrap_or_else(|| pm.default_max_steps()), &mut rng)
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("steps", out.steps)?;
    d.set_item("label", label_str(out.label))?;
    d.set_item("alpha", out.final_state.alpha())?;
    d.set_item("beta", out.final_state.beta())?;
    d.set_item("readings", out.readings)?;
    Ok(d)
}

/// Step counts and labels of `trials` walks, run in parallel.
#[pyfunction]
#[pyo3(signature = (start, sigma, boundaries, trials, seed, max_steps=None))]
fn run_ensemble(
    start: PyRef<'_, PyQubitState>,
    sigma: f64,
    boundaries: (f64, f64),
    trials: u64,
    seed: u64,
    max_steps: Option<u64>,
) -> PyResult<Vec<(u64, &'static str)>> {
    let pointer = PointerModel::new(sigma).map_err(err)?;
    let spec = walk::EnsembleSpec {
        start: start.0,
        pointer,
        boundaries: WalkBoundaries::new(boundaries.0, boundaries.1).map_err(err)?,
        max_steps: max_steps.unwrap_or_else(|| pointer.default_max_steps()),
    };
    let runs = walk::run_ensemble(&spec, trials, seed).map_err(err)?;
    Ok(runs.iter().map(|w| (w.steps, label_str(w.label))).collect())
}

/// Probability of the `+g` branch after `readings`, starting from the
/// equal superposition with unit coupling.
#[pyfunction]
fn posterior(readings: Vec<f64>, sigma: f64) -> f64 {
    walk::mixture_posterior(&readings, sigma)
}

fn curve_dict<'py>(py: Python<'py>, c: &SuccessCurve) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("theta_deg", c.theta_grid.clone())?;
    d.set_item("success", c.success.clone())?;
    d.set_item("stderr", c.stderr.clone())?;
    d.set_item("helstrom", c.helstrom.clone())?;
    Ok(d)
}

/// Fraction of walks from `psi1` ending at the boundary near `|1>`.
#[pyfunction]
#[pyo3(signature = (theta_grid, sigma, boundaries, trials, seed, max_steps=None))]
fn weak_process_curve<'py>(
    py: Python<'py>,
    theta_grid: Vec<f64>,
    sigma: f64,
    boundaries: (f64, f64),
    trials: u64,
    seed: u64,
    max_steps: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let pm = PointerModel::new(sigma).map_err(err)?;
    let wb = WalkBoundaries::new(boundaries.0, boundaries.1).map_err(err)?;
    let ms = max_steps.unwrap_or_else(|| pm.default_max_steps());
    let c = py
        .detach(|| discriminate::weak_process_curve(&theta_grid, &wb, &pm, ms, trials, seed))
        .map_err(err)?;
    curve_dict(py, &c)
}

/// Sign-test success with `m` weak readings per trial.
#[pyfunction]
fn hypothesis_success_curve<'py>(
    py: Python<'py>,
    theta_grid: Vec<f64>,
    m: u32,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let pm = PointerModel::new(sigma).map_err(err)?;
    let c = py
        .detach(|| discriminate::hypothesis_success_curve(&theta_grid, m, &pm, trials, seed))
        .map_err(err)?;
    curve_dict(py, &c)
}

/// Sorted mean readings of `m`-step runs started from one state of the
/// `theta_deg` pair.
#[pyfunction]
#[pyo3(signature = (theta_deg, m, sigma, trials, seed, hypothesis="psi2"))]
fn average_readings(theta_deg: f64, m: u32, sigma: f64, trials: u64, seed: u64, hypothesis: &str) -> PyResult<Vec<f64>> {
    let pair = DiscriminationPair::new(theta_deg).map_err(err)?;
    let pm = PointerModel::new(sigma).map_err(err)?;
    let cdf = discriminate::average_cdf(&pair.state(parse_hypothesis(hypothesis)?), m, &pm, trials, seed).map_err(err)?;
    Ok(cdf.values)
}

/// `(mu, sigma, r_squared, degenerate)` of the log-normal MLE fit.
#[pyfunction]
fn fit_lognormal(samples: Vec<f64>) -> PyResult<(f64, f64, f64, bool)> {
    let f = stats::fit_lognormal(&samples).map_err(err)?;
    Ok((f.mu_tilde, f.sigma_tilde, f.r_squared, f.degenerate))
}

fn moments_dict<'py>(py: Python<'py>, m: &MomentReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", m.mean)?;
    d.set_item("second_moment", m.second_moment)?;
    d.set_item("variance", m.variance)?;
    d.set_item("postselect_prob", m.postselect_prob)?;
    d.set_item("acceptance_prob", m.acceptance_prob)?;
    Ok(d)
}

/// Post-selected pointer with preparation angle `eta`, coupling `g` and
/// pointer width `sigma`.
#[pyclass(name = "TsvfSetup", frozen)]
struct PyTsvfSetup(TsvfSetup);

#[pymethods]
impl PyTsvfSetup {
    #[new]
    fn new(eta: f64, g: f64, sigma: f64) -> PyResult<Self> {
        TsvfSetup::new(eta, g, sigma).map(Self).map_err(err)
    }

    fn mean(&self) -> f64 {
        tsvf::mean_fin(&self.0)
    }

    fn second_moment(&self) -> f64 {
        tsvf::second_moment_fin(&self.0)
    }

    fn analytic_moments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        moments_dict(py, &tsvf::analytic_moments(&self.0))
    }

    fn quadrature_moments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        moments_dict(py, &tsvf::quadrature_moments(&self.0).map_err(err)?)
    }

    /// Accepted needle positions out of `draws` rejection-sampling attempts.
    fn sample(&self, draws: u64, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..draws).filter_map(|_| tsvf::rejection_sample_run(&self.0, &mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("TsvfSetup(eta={}, g={}, sigma={})", self.0.eta(), self.0.g(), self.0.sigma())
    }
}

/// `(eta, mean)` maximizing the post-selected mean shift.
#[pyfunction]
fn optimal_eta(g: f64, sigma: f64) -> PyResult<(f64, f64)> {
    tsvf::optimal_eta(g, sigma).map_err(err)
}

#[pyfunction]
fn separation_report<'py>(py: Python<'py>, eta1: f64, eta2: f64, g: f64, sigma: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = tsvf::separation_report(eta1, eta2, g, sigma).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("eta1", r.eta1)?;
    d.set_item("eta2", r.eta2)?;
    d.set_item("first", moments_dict(py, &r.first)?)?;
    d.set_item("second", moments_dict(py, &r.second)?)?;
    d.set_item("mean_gap", r.mean_gap)?;
    d.set_item("bayes_error", r.bayes_error)?;
    Ok(d)
}

/// Runs an experiment from its JSON spec and returns the summary as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec = ExperimentSpec::from_json(spec_json).map_err(run_err)?;
    let summary = py.detach(|| experiment::run(&spec)).map_err(run_err)?;
    serde_json::to_string(&summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Validation errors for a JSON spec; empty when valid.
#[pyfunction]
fn validate_experiment(spec_json: &str) -> PyResult<Vec<String>> {
    match ExperimentSpec::from_json(spec_json) {
        Ok(spec) => Ok(experiment::validate(&spec)),
        Err(RunError::Invalid(errs)) => Ok(errs),
        Err(e) => Err(run_err(e)),
    }
}

#[pymodule]
fn weakdisc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", experiment::VERSION)?;
    m.add("PRNG", stats::PRNG_ID)?;
    m.add_class::<PyQubitState>()?;
    m.add_class::<PyTsvfSetup>()?;
    m.add_function(wrap_pyfunction!(helstrom_bound, m)?)?;
    m.add_function(wrap_pyfunction!(make_discrimination_pair, m)?)?;
    m.add_function(wrap_pyfunction!(run_walk, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(posterior, m)?)?;
    m.add_function(wrap_pyfunction!(weak_process_curve, m)?)?;
    m.add_function(wrap_pyfunction!(hypothesis_success_curve, m)?)?;
    m.add_function(wrap_pyfunction!(average_readings, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lognormal, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_eta, m)?)?;
    m.add_function(wrap_pyfunction!(separation_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(validate_experiment, m)?)?;
    Ok(())
}
