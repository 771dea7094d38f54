use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use critsense::models::{self, CriticalModel};
use critsense::openquantum::{self, NoiseSpec};
use critsense::protocols::{self, BosonState, ProtocolPoint};
use critsense::runner::{self, Experiment, ExperimentConfig};
use critsense::truncation::CutoffPolicy;
use critsense::{qfi, Error};
use num_complex::Complex64;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::InvalidState(_)
        | Error::CutoffTooSmall { .. }
        | Error::ImaginaryGap { .. }
        | Error::IsotropicLmg
        | Error::NoClosedFormGap(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn policy(cutoff: usize, cutoff_max: Option<usize>) -> PyResult<CutoffPolicy> {
    match cutoff_max {
        Some(max) => CutoffPolicy::new(cutoff, max).map_err(py_err),
        None => Ok(CutoffPolicy::fixed(cutoff)),
    }
}

fn point_dict<'py>(py: Python<'py>, p: &ProtocolPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("model", p.model.name())?;
    d.set_item("param", p.param)?;
    d.set_item("delta", p.delta)?;
    d.set_item("eta", p.eta)?;
    d.set_item("time", p.time)?;
    d.set_item("n", p.n)?;
    d.set_item("mean", p.mean)?;
    d.set_item("variance", p.variance)?;
    d.set_item("chi", p.chi)?;
    d.set_item("inv_var", p.inverted_variance)?;
    d.set_item("closed_form", p.closed_form)?;
    d.set_item("qfi", p.qfi_reference)?;
    d.set_item("cutoff", p.cutoff)?;
    d.set_item("converged", p.converged)?;
    Ok(d)
}

/// A critical model at fixed parameters and Fock cutoff.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: CriticalModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (g, cutoff, omega = 1.0))]
    fn qrm_effective(g: f64, cutoff: usize, omega: f64) -> PyResult<Self> {
        Ok(Self { inner: models::build_qrm_effective(omega, g, cutoff).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (g, eta, cutoff, omega = 1.0))]
    fn qrm_full(g: f64, eta: f64, cutoff: usize, omega: f64) -> PyResult<Self> {
        Ok(Self { inner: models::build_qrm_full(omega, eta, g, cutoff).map_err(py_err)? })
    }

    #[staticmethod]
    fn opo(omega: f64, kappa: f64, cutoff: usize) -> PyResult<Self> {
        Ok(Self { inner: models::build_opo(omega, kappa, cutoff).map_err(py_err)? })
    }

    #[staticmethod]
    fn lmg(gamma: f64, lam: f64, cutoff: usize) -> PyResult<Self> {
        Ok(Self { inner: models::build_lmg(gamma, lam, cutoff).map_err(py_err)? })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn physical(&self) -> f64 {
        self.inner.physical()
    }

    #[getter]
    fn cutoff(&self) -> usize {
        self.inner.cutoff()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.space().dim()
    }

    #[getter]
    fn delta(&self) -> PyResult<f64> {
        self.inner.delta().map_err(py_err)
    }

    /// Dense Hamiltonian as nested lists of complex numbers.
    fn hamiltonian(&self) -> Vec<Vec<Complex64>> {
        let h = self.inner.hamiltonian();
        (0..h.dim()).map(|i| (0..h.dim()).map(|j| h.get(i, j)).collect()).collect()
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        let e = critsense::hilbert::Eigensystem::new(&self.inner.hamiltonian()).map_err(py_err)?;
        let mut v = e.eigenvalues();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    #[pyo3(signature = (interior_fraction = 0.3))]
    fn commutator_residual(&self, interior_fraction: f64) -> PyResult<f64> {
        models::commutator_residual(&self.inner, interior_fraction).map_err(py_err)
    }

    /// QFI of the canonical initial state after time `t`; `method` is one of
    /// `analytic`, `generator`, `fidelity`.
    #[pyo3(signature = (t, method = "generator"))]
    fn qfi(&self, py: Python<'_>, t: f64, method: &str) -> PyResult<f64> {
        let m = &self.inner;
        py.detach(|| {
            let psi = protocols::canonical_initial_state(m.space())?;
            match method {
                "analytic" => qfi::qfi_analytic(m, &psi, t),
                "generator" => qfi::qfi_generator_full(m, &psi, t),
                "fidelity" => qfi::qfi_fidelity_exact(m, &psi, t, None),
                other => Err(Error::InvalidParameter(format!("unknown QFI method '{other}'"))),
            }
            .map(|r| r.value)
        })
        .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Model({}, physical={}, cutoff={})", self.inner.name(), self.inner.physical(), self.inner.cutoff())
    }
}

#[pyfunction]
fn delta_g(g: f64) -> f64 {
    protocols::delta_g(g)
}

#[pyfunction]
#[pyo3(signature = (g, n, omega = 1.0))]
fn tau_n(g: f64, n: usize, omega: f64) -> PyResult<f64> {
    protocols::tau_n(g, omega, n).map_err(py_err)
}

/// `(mean, variance)` of the X quadrature at time `t`.
#[pyfunction]
#[pyo3(signature = (g, t, omega = 1.0))]
fn quadrature_closed_form(g: f64, t: f64, omega: f64) -> PyResult<(f64, f64)> {
    let s = protocols::quadrature_closed_form(g, omega, t).map_err(py_err)?;
    Ok((s.mean_x, s.var_x))
}

#[pyfunction]
fn inverted_variance_closed_form(g: f64, n: usize) -> PyResult<f64> {
    protocols::inverted_variance_closed_form(g, n).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (g, n = 1, omega = 1.0, cutoff = 32, cutoff_max = Some(512)))]
fn inverted_variance<'py>(
    py: Python<'py>,
    g: f64,
    n: usize,
    omega: f64,
    cutoff: usize,
    cutoff_max: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let pol = policy(cutoff, cutoff_max)?;
    let p = py
        .detach(|| protocols::inverted_variance_quadrature(g, omega, n, &BosonState::Canonical, pol))
        .map_err(py_err)?;
    point_dict(py, &p)
}

#[pyfunction]
#[pyo3(signature = (g, eta, n = 1, omega = 1.0, cutoff = 32, cutoff_max = Some(256)))]
fn inverted_variance_full<'py>(
    py: Python<'py>,
    g: f64,
    eta: f64,
    n: usize,
    omega: f64,
    cutoff: usize,
    cutoff_max: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let pol = policy(cutoff, cutoff_max)?;
    let p = py.detach(|| protocols::inverted_variance_full(g, omega, eta, n, pol)).map_err(py_err)?;
    point_dict(py, &p)
}

/// Homodyne protocol on the full Rabi model with dephasing rate `gamma`
/// and decay/heating rates `gamma / 2`.
#[pyfunction]
#[pyo3(signature = (g, eta, gamma, n = 1, omega = 1.0, cutoff = 48))]
fn noisy_inverted_variance<'py>(
    py: Python<'py>,
    g: f64,
    eta: f64,
    gamma: f64,
    n: usize,
    omega: f64,
    cutoff: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let noise = NoiseSpec::from_dephasing(gamma).map_err(py_err)?;
    let p = py
        .detach(|| openquantum::noisy_inverted_variance(g, omega, eta, &noise, n, CutoffPolicy::fixed(cutoff)))
        .map_err(py_err)?;
    point_dict(py, &p)
}

/// Qubit-readout protocol; returns the protocol point and the complex
/// Loschmidt amplitude.
#[pyfunction]
#[pyo3(signature = (g, t, c_up = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), c_down = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), fock = 0, omega = 1.0, cutoff = 32, cutoff_max = Some(512)))]
#[allow(clippy::too_many_arguments)]
fn loschmidt<'py>(
    py: Python<'py>,
    g: f64,
    t: f64,
    c_up: Complex64,
    c_down: Complex64,
    fock: usize,
    omega: f64,
    cutoff: usize,
    cutoff_max: Option<usize>,
) -> PyResult<(Bound<'py, PyDict>, Complex64)> {
    let pol = policy(cutoff, cutoff_max)?;
    let r = py
        .detach(|| protocols::loschmidt(g, omega, &BosonState::Fock(fock), c_up, c_down, t, pol))
        .map_err(py_err)?;
    Ok((point_dict(py, &r.point)?, r.amplitude))
}

/// `[(m, g_o, tau)]` for `m = 1..=m_max`.
#[pyfunction]
#[pyo3(signature = (m_max, omega = 1.0))]
fn working_points(m_max: usize, omega: f64) -> Vec<(usize, f64, f64)> {
    protocols::working_points(m_max, omega).into_iter().map(|w| (w.m, w.g_o, w.tau)).collect()
}

/// `(g_o, delta, F)` of the first local maximum of F at finite `eta`.
#[pyfunction]
#[pyo3(signature = (eta, n = 1, omega = 1.0, cutoff = 200))]
fn optimal_working_point(py: Python<'_>, eta: f64, n: usize, omega: f64, cutoff: usize) -> PyResult<(f64, f64, f64)> {
    let o = py
        .detach(|| runner::optimal_working_point(eta, omega, n, CutoffPolicy::fixed(cutoff)))
        .map_err(py_err)?;
    Ok((o.g_o, o.delta, o.inv_var))
}

/// `(exponent, intercept, r_squared)` of a log-log least-squares fit.
#[pyfunction]
fn fit_powerlaw(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let f = runner::fit_powerlaw(&points).map_err(py_err)?;
    Ok((f.exponent, f.intercept, f.r_squared))
}

/// `[(name, passed, detail)]` for every invariant check.
#[pyfunction]
fn validate(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(runner::validate).into_iter().map(|c| (c.name.to_string(), c.passed, c.detail)).collect()
}

/// Runs an experiment from TOML text; returns its records as CSV text.
#[pyfunction]
#[pyo3(signature = (experiment, config = ""))]
fn run(py: Python<'_>, experiment: &str, config: &str) -> PyResult<String> {
    let exp: Experiment = experiment.parse().map_err(py_err)?;
    let cfg = if config.is_empty() {
        ExperimentConfig::defaults(exp)
    } else {
        ExperimentConfig::from_toml(config, Some(exp)).map_err(py_err)?
    };
    let out = py.detach(|| runner::run(&cfg)).map_err(py_err)?;
    if let Some(f) = out.failures.first() {
        return Err(PyRuntimeError::new_err(format!("grid point {} failed: {}", f.index, f.message)));
    }
    let mut buf = Vec::new();
    runner::write_records(&out.records, runner::OutputFormat::Csv, &mut buf).map_err(py_err)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule(name = "critsense")]
fn critsense_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(delta_g, m)?)?;
    m.add_function(wrap_pyfunction!(tau_n, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(inverted_variance_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(inverted_variance, m)?)?;
    m.add_function(wrap_pyfunction!(inverted_variance_full, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_inverted_variance, m)?)?;
    m.add_function(wrap_pyfunction!(loschmidt, m)?)?;
    m.add_function(wrap_pyfunction!(working_points, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_working_point, m)?)?;
    m.add_function(wrap_pyfunction!(fit_powerlaw, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("COLUMNS", runner::COLUMNS.to_vec())?;
    Ok(())
}
