use std::sync::Arc;

use fieldlab_core::functionals;
use fieldlab_core::nonlinearity::{self, KirchhoffFunction, SamplingGrid};
use fieldlab_core::shooter::{self, RadialProfile, ShootingOptions};
use fieldlab_core::transfer::{self, TransferOptions};
use fieldlab_core::FieldlabError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: FieldlabError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Nonlinearity", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNonlinearity {
    inner: Arc<nonlinearity::Nonlinearity>,
}

#[pymethods]
impl PyNonlinearity {
    /// f(t) = -mu t + |t|^(p-1) t, validated for dimension N.
    #[staticmethod]
    fn power(mu: f64, p: f64, dimension: usize) -> PyResult<Self> {
        let f = nonlinearity::make_power_nonlinearity(mu, p, dimension).map_err(to_py)?;
        Ok(Self { inner: Arc::new(f) })
    }

    #[staticmethod]
    #[pyo3(signature = (t, f, omega=None))]
    fn tabulated(t: Vec<f64>, f: Vec<f64>, omega: Option<f64>) -> PyResult<Self> {
        let f = nonlinearity::Nonlinearity::tabulated(t, f, omega).map_err(to_py)?;
        Ok(Self { inner: Arc::new(f) })
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn antideriv(&self, t: f64) -> f64 {
        self.inner.antideriv(t)
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn decay_rate(&self) -> f64 {
        self.inner.decay_rate()
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor().to_string()
    }

    fn check_conditions(&self, dimension: usize) -> PyResult<Vec<(String, String)>> {
        let reports = nonlinearity::check_f_conditions(&self.inner, dimension, &SamplingGrid::default())
            .map_err(to_py)?;
        Ok(reports
            .into_iter()
            .map(|r| (format!("{:?}", r.condition_id), format!("{:?}", r.verdict)))
            .collect())
    }
}

#[pyclass(name = "Kirchhoff", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKirchhoff {
    inner: KirchhoffFunction,
}

#[pymethods]
impl PyKirchhoff {
    #[staticmethod]
    fn unit() -> Self {
        Self { inner: KirchhoffFunction::unit() }
    }

    /// M(t) = a + b t
    #[staticmethod]
    fn affine(a: f64, b: f64) -> PyResult<Self> {
        Ok(Self { inner: KirchhoffFunction::affine(a, b).map_err(to_py)? })
    }

    /// M(t) = m0 + q t^s
    #[staticmethod]
    fn power_m(m0: f64, q: f64, s: f64) -> PyResult<Self> {
        Ok(Self { inner: KirchhoffFunction::power_m(m0, q, s).map_err(to_py)? })
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn antideriv(&self, t: f64) -> f64 {
        self.inner.antideriv(t)
    }

    fn with_q(&self, q: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_q(q).map_err(to_py)? })
    }
}

#[pyclass(name = "RadialProfile", frozen)]
struct PyProfile {
    inner: RadialProfile,
}

#[pymethods]
impl PyProfile {
    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count
    }

    #[getter]
    fn shoot_height(&self) -> f64 {
        self.inner.shoot_height
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii.clone()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn derivs(&self) -> Vec<f64> {
        self.inner.derivs.clone()
    }

    #[getter]
    fn grad_norm_sq(&self) -> PyResult<f64> {
        self.inner.grad_norm_sq().map_err(to_py)
    }

    /// Value at radius r, using the exponential tail beyond the samples.
    fn __call__(&self, r: f64) -> f64 {
        self.inner.value_at(r)
    }

    /// u(.) = v(t .)
    fn rescaled(&self, t: f64) -> PyResult<Self> {
        Ok(Self { inner: transfer::build_kt_solution(&self.inner, t).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "RadialProfile(dimension={}, node_count={}, shoot_height={})",
            self.inner.dimension, self.inner.node_count, self.inner.shoot_height
        )
    }
}

#[pyfunction]
fn find_bound_state(py: Python<'_>, f: &PyNonlinearity, dimension: usize, nodes: usize, lo: f64, hi: f64) -> PyResult<PyProfile> {
    let f = f.inner.clone();
    let p = py
        .detach(|| shooter::find_bound_state(f, dimension, nodes, (lo, hi), &ShootingOptions::default()))
        .map_err(to_py)?;
    Ok(PyProfile { inner: p })
}

#[pyfunction]
fn solution_family(py: Python<'_>, f: &PyNonlinearity, dimension: usize, n_max: usize) -> PyResult<Vec<PyProfile>> {
    let f = f.inner.clone();
    let fam = py
        .detach(|| shooter::solution_family(f, dimension, n_max, &ShootingOptions::default()))
        .map_err(to_py)?;
    Ok(fam.profiles.into_iter().map(|inner| PyProfile { inner }).collect())
}

#[pyfunction]
#[pyo3(signature = (profile, m=None))]
fn functional_report<'py>(py: Python<'py>, profile: &PyProfile, m: Option<&PyKirchhoff>) -> PyResult<Bound<'py, PyDict>> {
    let m = m.map_or_else(KirchhoffFunction::unit, |m| m.inner.clone());
    let r = functionals::functional_report(&profile.inner, &m).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("grad_norm_sq", r.grad_norm_sq)?;
    d.set_item("l2_norm_sq", r.l2_norm_sq)?;
    d.set_item("integral_F", r.integral_f)?;
    d.set_item("energy", r.energy)?;
    d.set_item("pohozaev_residual", r.pohozaev_residual)?;
    d.set_item("nehari_residual", r.nehari_residual)?;
    d.set_item("strong_residual_sup", r.strong_residual_sup)?;
    d.set_item("quadrature_tol", r.quadrature_tol)?;
    Ok(d)
}

#[pyfunction]
fn transfer_map(profile: &PyProfile, m: &PyKirchhoff, t: f64) -> PyResult<f64> {
    transfer::transfer_map(&profile.inner, &m.inner, t).map_err(to_py)
}

/// Roots t of h(v, t) = 1 with the transferred profiles.
#[pyfunction]
fn solve_transfer(profile: &PyProfile, m: &PyKirchhoff) -> PyResult<Vec<(f64, PyProfile)>> {
    let res = transfer::solve_transfer(&profile.inner, &m.inner, &TransferOptions::default()).map_err(to_py)?;
    Ok(res.roots.into_iter().zip(res.profiles).map(|(t, inner)| (t, PyProfile { inner })).collect())
}

#[pyfunction]
fn q_threshold(family: &PyKirchhoff, profiles: Vec<PyRef<'_, PyProfile>>, n: usize) -> PyResult<f64> {
    let ps: Vec<RadialProfile> = profiles.iter().map(|p| p.inner.clone()).collect();
    Ok(transfer::q_threshold(&family.inner, &ps, n).map_err(to_py)?.q_n)
}

#[pymodule]
fn fieldlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNonlinearity>()?;
    m.add_class::<PyKirchhoff>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(find_bound_state, m)?)?;
    m.add_function(wrap_pyfunction!(solution_family, m)?)?;
    m.add_function(wrap_pyfunction!(functional_report, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_map, m)?)?;
    m.add_function(wrap_pyfunction!(solve_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(q_threshold, m)?)?;
    Ok(())
}
