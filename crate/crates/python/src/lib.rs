//! Python bindings: `import supjcir`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use supjcir_core::estimation::{fit_series, TimeSeries, DEFAULT_MAX_LAG};
use supjcir_core::io::{read_series_csv, ModelFile};
use supjcir_core::orlicz::{normalized_disutility, stationary_log_disutility};
use supjcir_core::validation::{builtin_models, run_checks};
use supjcir_core::{
    Bound as RiskBound, Error as CoreError, JumpMeasure, MixingMeasure, OrliczFunction, RiskQuery,
    SupJcirModel,
};

create_exception!(
    supjcir,
    InadmissibleError,
    PyValueError,
    "The risk query cannot be evaluated."
);
create_exception!(supjcir, FitError, PyRuntimeError, "Model fitting failed.");

fn to_py(e: CoreError) -> PyErr {
    match e {
        CoreError::Inadmissible(_)
        | CoreError::Divergent(_)
        | CoreError::ParameterOutOfRange(_) => InadmissibleError::new_err(e.to_string()),
        CoreError::FitFailed(_) | CoreError::DegenerateEmpirical(_) | CoreError::ZeroVariance => {
            FitError::new_err(e.to_string())
        }
        CoreError::NonConvergent(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn jumps_from(
    mu: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
) -> PyResult<JumpMeasure> {
    match (mu, beta, gamma, alpha) {
        (None, None, None, None) => Ok(JumpMeasure::None),
        (Some(mu), Some(beta), None, None) => JumpMeasure::exponential(mu, beta).map_err(to_py),
        (None, Some(beta), Some(gamma), Some(alpha)) => {
            JumpMeasure::tempered_stable(gamma, beta, alpha).map_err(to_py)
        }
        _ => Err(PyValueError::new_err(
            "jumps need (mu, beta) for exponential or (gamma, beta, alpha) for tempered stable",
        )),
    }
}

/// A supJCIR model: drift level `a`, diffusion scale `sigma`, an optional
/// jump measure and a mixing measure over reversion speeds.
#[pyclass(module = "supjcir", name = "Model", from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: SupJcirModel,
}

#[pymethods]
impl PyModel {
    /// Gamma mixing with shape `omega` and scale `theta`.
    #[new]
    #[pyo3(signature = (a, sigma, omega, theta, mu=None, beta=None, gamma=None, alpha=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        a: f64,
        sigma: f64,
        omega: f64,
        theta: f64,
        mu: Option<f64>,
        beta: Option<f64>,
        gamma: Option<f64>,
        alpha: Option<f64>,
    ) -> PyResult<Self> {
        let jumps = jumps_from(mu, beta, gamma, alpha)?;
        let mixing = MixingMeasure::gamma(omega, theta).map_err(to_py)?;
        let inner = SupJcirModel::new(a, sigma, jumps, mixing).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Finitely many reversion speeds `rates` with probabilities `weights`.
    #[staticmethod]
    #[pyo3(signature = (a, sigma, weights, rates, mu=None, beta=None, gamma=None, alpha=None))]
    #[allow(clippy::too_many_arguments)]
    fn discrete(
        a: f64,
        sigma: f64,
        weights: Vec<f64>,
        rates: Vec<f64>,
        mu: Option<f64>,
        beta: Option<f64>,
        gamma: Option<f64>,
        alpha: Option<f64>,
    ) -> PyResult<Self> {
        if weights.len() != rates.len() {
            return Err(PyValueError::new_err("weights and rates differ in length"));
        }
        let pairs: Vec<(f64, f64)> = weights.into_iter().zip(rates).collect();
        let jumps = jumps_from(mu, beta, gamma, alpha)?;
        let mixing = MixingMeasure::from_pairs(&pairs).map_err(to_py)?;
        let inner = SupJcirModel::new(a, sigma, jumps, mixing).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = ModelFile::read(&path).map_err(to_py)?;
        Ok(Self { inner: file.model })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let file = ModelFile::parse(text).map_err(to_py)?;
        Ok(Self { inner: file.model })
    }

    fn to_text(&self) -> String {
        ModelFile::new(self.inner.clone()).to_text()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        ModelFile::new(self.inner.clone())
            .write(&path)
            .map_err(to_py)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    /// R = E[1/r] under the mixing measure.
    #[getter]
    fn inverse_moment(&self) -> f64 {
        self.inner.inverse_moment()
    }

    /// Upper end of the log-MGF domain.
    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max()
    }

    fn log_mgf(&self, p: f64) -> PyResult<f64> {
        self.inner.log_mgf(p).map_err(to_py)
    }

    fn acf(&self, h: f64) -> f64 {
        self.inner.acf(h)
    }

    /// Stationary mean, variance and skewness.
    fn moments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.inner.stationary_moments().map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("mean", m.mean)?;
        d.set_item("variance", m.variance)?;
        d.set_item("skewness", m.skewness)?;
        Ok(d)
    }

    /// The same model with a Gamma mixing replaced by `n` quantile atoms.
    fn discretized(&self, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.discretized(n).map_err(to_py)?,
        })
    }

    /// Stationary log-disutility bound.
    #[pyo3(signature = (p, q, bound, phi="identity", lambda_diff=0.0, lambda_jump=0.0))]
    fn log_disutility(
        &self,
        p: f64,
        q: f64,
        bound: &str,
        phi: &str,
        lambda_diff: f64,
        lambda_jump: f64,
    ) -> PyResult<f64> {
        let query = build_query(p, q, bound, phi, lambda_diff, lambda_jump)?;
        stationary_log_disutility(&self.inner, &query).map_err(to_py)
    }

    /// Normalized bound U with the worst-case diagnostics, as a dict.
    #[pyo3(signature = (p, q, bound, phi="identity", lambda_diff=0.0, lambda_jump=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn risk<'py>(
        &self,
        py: Python<'py>,
        p: f64,
        q: f64,
        bound: &str,
        phi: &str,
        lambda_diff: f64,
        lambda_jump: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let query = build_query(p, q, bound, phi, lambda_diff, lambda_jump)?;
        let r = normalized_disutility(&self.inner, &query).map_err(to_py)?;
        let theta_eff = match r.distorted_mixing {
            Some(MixingMeasure::Gamma { theta, .. }) => Some(theta),
            _ => None,
        };
        let d = PyDict::new(py);
        d.set_item("disutility", r.disutility)?;
        d.set_item("baseline", r.baseline_disutility())?;
        d.set_item("log_disutility", r.log_disutility)?;
        d.set_item("U", r.normalized_u)?;
        d.set_item("xi", r.xi)?;
        d.set_item("acf_theta_eff", theta_eff)?;
        d.set_item("A", r.normalized_a)?;
        d.set_item("V", r.normalized_v)?;
        d.set_item("entropy_diff", r.entropy.map(|e| e.diff_rate))?;
        d.set_item("entropy_jump", r.entropy.map(|e| e.jump_rate))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let text = self.to_text();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        format!("Model({})", body.join("; "))
    }
}

fn build_query(
    p: f64,
    q: f64,
    bound: &str,
    phi: &str,
    lambda_diff: f64,
    lambda_jump: f64,
) -> PyResult<RiskQuery> {
    let phi: OrliczFunction = phi.parse().map_err(to_py)?;
    let bound: RiskBound = bound.parse().map_err(to_py)?;
    RiskQuery::new(p, phi, q, lambda_diff, lambda_jump, bound).map_err(to_py)
}

/// Two-step fit of a series. Returns `(model, report)`.
#[pyfunction]
#[pyo3(signature = (times, values, y, include_skew=true, max_lag=DEFAULT_MAX_LAG))]
fn fit<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    y: f64,
    include_skew: bool,
    max_lag: usize,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let series = TimeSeries::new(times, values, "series").map_err(to_py)?;
    let (stats, acf, fitted) = fit_series(&series, y, include_skew, max_lag).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("theta", acf.theta)?;
    d.set_item("omega", acf.omega)?;
    d.set_item("acf_residual", acf.residual)?;
    d.set_item("error_metric", fitted.error_metric)?;
    d.set_item("empirical_mean", stats.mean)?;
    d.set_item("empirical_variance", stats.variance)?;
    d.set_item("empirical_skewness", stats.skewness)?;
    for (k, v) in &fitted.diagnostics {
        d.set_item(k, v)?;
    }
    Ok((
        PyModel {
            inner: fitted.model,
        },
        d,
    ))
}

/// Read a `day,value` CSV into `(times, values)`.
#[pyfunction]
fn read_series(path: PathBuf) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = read_series_csv(&path).map_err(to_py)?;
    Ok((s.times, s.values))
}

/// Numerical cross-checks as `(name, max_error, tolerance, passed)` tuples.
#[pyfunction]
#[pyo3(signature = (model=None, tol=None))]
fn validate(model: Option<PyModel>, tol: Option<f64>) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let models = model.map_or_else(builtin_models, |m| vec![m.inner]);
    let results = run_checks(&models, tol).map_err(to_py)?;
    Ok(results
        .into_iter()
        .map(|r| (r.name.to_string(), r.max_error, r.tolerance, r.passed))
        .collect())
}

#[pymodule]
fn supjcir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(read_series, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add("InadmissibleError", m.py().get_type::<InadmissibleError>())?;
    m.add("FitError", m.py().get_type::<FitError>())?;
    Ok(())
}
