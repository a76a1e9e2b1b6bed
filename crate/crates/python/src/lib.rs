//! Python bindings for `optoent_core`.

use nalgebra::{Matrix4, Matrix6};
use optoent_core::dynamics::{evolve_with, lyapunov_steady_state, thermal_initial_state};
use optoent_core::matrices::{diffusion, DriftMode, DriftModel};
use optoent_core::measures::{self, bogoliubov_occupations, entanglement_report, ReducedCovariance};
use optoent_core::model::{direct_couplings, SystemParams};
use optoent_core::stability::{self, FloquetResult};
use optoent_core::sweep::{self as core_sweep, MeasureSet, SweepAxis, SweepSpec};
use optoent_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(optoent, UnstableError, PyRuntimeError, "The model has no stable steady state.");
create_exception!(optoent, NumericalError, PyRuntimeError, "A numerical routine failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Unstable(_) => UnstableError::new_err(e.to_string()),
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<DriftMode> {
    match mode {
        "rwa" => Ok(DriftMode::Rwa),
        "full" => Ok(DriftMode::Full),
        other => Err(PyValueError::new_err(format!("mode must be \"rwa\" or \"full\", got {other:?}"))),
    }
}

fn rows6(m: &Matrix6<f64>) -> Vec<Vec<f64>> {
    (0..6).map(|i| (0..6).map(|j| m[(i, j)]).collect()).collect()
}

fn matrix4(rows: Vec<Vec<f64>>) -> PyResult<Matrix4<f64>> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("expected a 4x4 nested list"));
    }
    Ok(Matrix4::from_fn(|i, j| rows[i][j]))
}

#[pyclass(name = "SystemParams", module = "optoent", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    inner: SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (*, omega1=0.0, omega2=0.0, delta=0.0, kappa=0.0, gamma2=0.0, nbar_d=0.0, nbar_1=0.0, nbar_2=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(omega1: f64, omega2: f64, delta: f64, kappa: f64, gamma2: f64, nbar_d: f64, nbar_1: f64, nbar_2: f64) -> PyResult<Self> {
        let inner = SystemParams { omega1, omega2, delta, kappa, gamma2, nbar_d, nbar_1, nbar_2, ..Default::default() };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega1(&self) -> f64 {
        self.inner.omega1
    }
    #[getter]
    fn omega2(&self) -> f64 {
        self.inner.omega2
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn gamma1(&self) -> f64 {
        self.inner.gamma1
    }
    #[getter]
    fn gamma2(&self) -> f64 {
        self.inner.gamma2
    }
    #[getter]
    fn nbar_d(&self) -> f64 {
        self.inner.nbar_d
    }
    #[getter]
    fn nbar_1(&self) -> f64 {
        self.inner.nbar_1
    }
    #[getter]
    fn nbar_2(&self) -> f64 {
        self.inner.nbar_2
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(omega1={}, omega2={}, delta={}, kappa={}, gamma2={}, nbar_d={}, nbar_1={}, nbar_2={})",
            p.omega1, p.omega2, p.delta, p.kappa, p.gamma2, p.nbar_d, p.nbar_1, p.nbar_2
        )
    }
}

/// Drift model built from `G-` and `G+` directly.
#[pyclass(name = "Model", module = "optoent", frozen, skip_from_py_object)]
struct PyModel {
    inner: DriftModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (params, g_minus, g_plus, mode="rwa"))]
    fn new(params: PyRef<'_, PySystemParams>, g_minus: f64, g_plus: f64, mode: &str) -> PyResult<Self> {
        let couplings = direct_couplings(g_plus, g_minus).map_err(|e| match e {
            Error::Unstable(msg) => PyValueError::new_err(msg),
            e => to_py(e),
        })?;
        Ok(Self { inner: DriftModel::new(params.inner, couplings, parse_mode(mode)?) })
    }

    #[getter]
    fn params(&self) -> PySystemParams {
        PySystemParams { inner: self.inner.params }
    }
    #[getter]
    fn g_minus(&self) -> f64 {
        self.inner.couplings.g_minus
    }
    #[getter]
    fn g_plus(&self) -> f64 {
        self.inner.couplings.g_plus
    }
    /// Two-mode squeezing parameter `atanh(G+/G-)`.
    #[getter]
    fn squeezing(&self) -> f64 {
        self.inner.couplings.squeezing
    }
    #[getter]
    fn bogoliubov_coupling(&self) -> f64 {
        self.inner.couplings.bogoliubov_coupling
    }
    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode {
            DriftMode::Rwa => "rwa",
            DriftMode::Full => "full",
        }
    }

    fn with_mode(&self, mode: &str) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_mode(parse_mode(mode)?) })
    }

    #[pyo3(signature = (t=0.0))]
    fn drift(&self, t: f64) -> Vec<Vec<f64>> {
        rows6(&self.inner.drift(t))
    }

    fn diffusion(&self) -> Vec<f64> {
        diffusion(&self.inner.params).diagonal().iter().copied().collect()
    }

    /// Common period of the full drift, or `None`.
    fn period(&self) -> Option<f64> {
        self.inner.period()
    }

    fn is_hurwitz(&self) -> PyResult<bool> {
        stability::is_hurwitz(&self.inner.drift(0.0)).map_err(to_py)
    }

    /// Steady-state record of the RWA model.
    fn steady_state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let model = self.inner;
        let (state, report) = py
            .detach(move || {
                let state = lyapunov_steady_state(&model, &diffusion(&model.params))?;
                let report = entanglement_report(&state.reduced())?;
                Ok::<_, Error>((state, report))
            })
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("E_N", report.log_negativity)?;
        d.set_item("mu", report.purity)?;
        d.set_item("eta", report.eta)?;
        d.set_item("sigma", rows6(&state.sigma))?;
        d.set_item("symplectic_eigenvalues", [report.symplectic_eigenvalues.0, report.symplectic_eigenvalues.1])?;
        d.set_item("bogoliubov_occupations", bogoliubov_occupations(&state, model.couplings.squeezing))?;
        Ok(d)
    }

    /// Trajectory from the thermal state, sampled every `dt_out`.
    #[pyo3(signature = (t_end, dt_out, keep_sigma=false))]
    fn evolve<'py>(&self, py: Python<'py>, t_end: f64, dt_out: f64, keep_sigma: bool) -> PyResult<Bound<'py, PyDict>> {
        let model = self.inner;
        type Columns = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<Vec<Vec<f64>>>);
        let (t, e_n, mu, nu, sigma) = py
            .detach(move || -> Result<Columns, Error> {
                let mut cols: Columns = Default::default();
                let mut failure = None;
                let p = model.params;
                evolve_with(&model, &diffusion(&p), &thermal_initial_state(&p), t_end, dt_out, |s| {
                    let rc = s.reduced();
                    let row = measures::log_negativity(&rc)
                        .and_then(|n| Ok((n.log_negativity, measures::purity(&rc)?, s.min_symplectic_eigenvalue()?)));
                    match row {
                        Ok((e, m, n)) => {
                            cols.0.push(s.t);
                            cols.1.push(e);
                            cols.2.push(m);
                            cols.3.push(n);
                            if keep_sigma {
                                cols.4.push(rows6(&s.sigma));
                            }
                        }
                        Err(e) => {
                            failure.get_or_insert(e);
                        }
                    }
                })?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(cols),
                }
            })
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("t", t)?;
        d.set_item("E_N", e_n)?;
        d.set_item("mu", mu)?;
        d.set_item("nu_min", nu)?;
        if keep_sigma {
            d.set_item("sigma", sigma)?;
        }
        Ok(d)
    }

    /// Floquet multipliers; `period` is required for the constant RWA drift.
    #[pyo3(signature = (period=None))]
    fn floquet<'py>(&self, py: Python<'py>, period: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let model = self.inner;
        if model.mode == DriftMode::Full && period.is_some() {
            return Err(PyValueError::new_err("the full model's period is fixed by its frequencies"));
        }
        let result: FloquetResult = match (model.mode, period) {
            (DriftMode::Full, None) => py.detach(move || stability::floquet(&model)),
            (_, Some(t)) => py.detach(move || stability::floquet_constant(&model.drift(0.0), t)),
            (DriftMode::Rwa, None) => return Err(PyValueError::new_err("period is required in rwa mode")),
        }
        .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("period", result.period)?;
        d.set_item("multipliers", result.multipliers.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>())?;
        d.set_item("max_modulus", result.max_modulus)?;
        d.set_item("stable", result.stable)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Model(g_minus={}, g_plus={}, mode={:?})", self.g_minus(), self.g_plus(), self.mode())
    }
}

/// Steady-state sweep over `"coupling_ratio"` or `"detuning"`.
#[pyfunction]
#[pyo3(signature = (params, g_minus, axis, grid=None, g_plus=0.0, refine=false))]
fn sweep<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    g_minus: f64,
    axis: &str,
    grid: Option<Vec<f64>>,
    g_plus: f64,
    refine: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let axis = match axis {
        "coupling_ratio" => SweepAxis::CouplingRatio,
        "detuning" => SweepAxis::Detuning,
        other => return Err(PyValueError::new_err(format!("unknown axis {other:?}"))),
    };
    let spec = SweepSpec {
        params: params.inner,
        g_minus,
        g_plus,
        axis,
        grid: grid.unwrap_or_else(|| axis.default_grid()),
        measures: MeasureSet { purity: true, occupations: false },
    };
    let (result, refined) = py
        .detach(|| {
            let result = core_sweep::run_sweep(&spec)?;
            let refined = match refine && !result.all_unstable {
                true => match core_sweep::refine_optimum(&spec, &result) {
                    Ok(r) => Some(r),
                    Err(Error::EndpointOptimum) => None,
                    Err(e) => return Err(e),
                },
                false => None,
            };
            Ok((result, refined))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("axis", axis.name())?;
    d.set_item("value", result.rows.iter().map(|r| r.value).collect::<Vec<_>>())?;
    d.set_item("E_N", result.rows.iter().map(|r| r.log_negativity).collect::<Vec<_>>())?;
    d.set_item("mu", result.rows.iter().map(|r| r.purity).collect::<Vec<_>>())?;
    d.set_item("stable", result.rows.iter().map(|r| r.stable).collect::<Vec<_>>())?;
    d.set_item("optimum", result.optimum)?;
    d.set_item("refined", refined)?;
    Ok(d)
}

/// Logarithmic negativity of a two-mode covariance matrix `[Q1, P1, Q2, P2]`.
#[pyfunction]
fn log_negativity(cov: Vec<Vec<f64>>) -> PyResult<f64> {
    let rc = ReducedCovariance(matrix4(cov)?);
    Ok(measures::log_negativity(&rc).map_err(to_py)?.log_negativity)
}

#[pyfunction]
fn purity(cov: Vec<Vec<f64>>) -> PyResult<f64> {
    measures::purity(&ReducedCovariance(matrix4(cov)?)).map_err(to_py)
}

#[pyfunction]
fn symplectic_eigenvalues(cov: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    Ok(measures::symplectic_eigenvalues(&ReducedCovariance(matrix4(cov)?)))
}

/// Covariance of the two-mode squeezed vacuum with squeezing `r`.
#[pyfunction]
fn two_mode_squeezed_vacuum(r: f64) -> Vec<Vec<f64>> {
    let m = ReducedCovariance::two_mode_squeezed_vacuum(r).0;
    (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
}

#[pymodule]
fn optoent(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(log_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(two_mode_squeezed_vacuum, m)?)?;
    m.add("UnstableError", m.py().get_type::<UnstableError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
