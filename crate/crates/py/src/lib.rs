//! Python bindings. Angles are radians; caps are centred at the north pole
//! unless `pole="south"` is given.

use capnodal_core as cn;
use cn::error::Error;
use cn::field::SphericalPoint;
use cn::nodal::{CapDomain, Pole};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py_err(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn cap(radius: f64, pole: &str) -> PyResult<CapDomain> {
    let pole = match pole {
        "north" => Pole::North,
        "south" => Pole::South,
        other => return Err(PyValueError::new_err(format!("pole must be 'north' or 'south', got {other:?}"))),
    };
    CapDomain::at(pole, radius).map_err(to_py_err)
}

/// Convert any serializable value to plain Python objects.
fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// One realization of the degree-`ell` Gaussian spherical harmonic field.
#[pyclass(name = "HarmonicField", module = "capnodal", frozen)]
struct PyHarmonicField {
    inner: cn::field::HarmonicField,
}

#[pymethods]
impl PyHarmonicField {
    /// Field from `2 ell + 1` coefficients ordered `m = -ell..ell`.
    #[new]
    fn new(ell: u32, coefficients: Vec<f64>) -> PyResult<Self> {
        let inner = cn::field::HarmonicField::from_coefficients(ell, coefficients).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Draw a field from `seed` (and generator stream `stream`).
    #[staticmethod]
    #[pyo3(signature = (ell, seed, stream = 0))]
    fn sample(ell: u32, seed: u64, stream: u64) -> PyResult<Self> {
        let inner = cn::field::sample_field_stream(ell, seed, stream).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn ell(&self) -> u32 {
        self.inner.ell()
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    fn eval(&self, theta: f64, phi: f64) -> PyResult<f64> {
        self.inner.eval(SphericalPoint::new(theta, phi)).map_err(to_py_err)
    }

    /// `(d/dtheta, (1/sin theta) d/dphi)`.
    fn gradient(&self, theta: f64, phi: f64) -> PyResult<(f64, f64)> {
        let g = self.inner.gradient(SphericalPoint::new(theta, phi)).map_err(to_py_err)?;
        Ok((g[0], g[1]))
    }

    fn __repr__(&self) -> String {
        let (seed, stream) = self.inner.seed_tag();
        format!("HarmonicField(ell={}, seed={seed}, stream={stream})", self.inner.ell())
    }
}

/// `(P, P', P'')` of the Legendre polynomial at `t`.
#[pyfunction]
fn eval_legendre(ell: u32, t: f64) -> PyResult<(f64, f64, f64)> {
    let e = cn::legendre::eval_legendre(ell, t).map_err(to_py_err)?;
    Ok((e.value, e.d1, e.d2))
}

/// Nodal length inside a cap; returns `(length, polylines)` when `segments` is true.
#[pyfunction]
#[pyo3(signature = (field, radius, grid_n = None, pole = "north", segments = false))]
fn nodal_length_cap<'py>(
    py: Python<'py>,
    field: &PyHarmonicField,
    radius: f64,
    grid_n: Option<usize>,
    pole: &str,
    segments: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let c = cap(radius, pole)?;
    if segments {
        let res = cn::nodal::nodal_length_cap(&field.inner, &c, grid_n).map_err(to_py_err)?;
        let lines: Vec<Vec<(f64, f64)>> =
            res.segments.iter().map(|l| l.iter().map(|p| (p.theta, p.phi)).collect()).collect();
        Ok((res.total_length, lines).into_pyobject(py)?.into_any())
    } else {
        let v = cn::nodal::nodal_length_cap_value(&field.inner, &c, grid_n).map_err(to_py_err)?;
        Ok(v.into_pyobject(py)?.into_any())
    }
}

/// Nodal length of the whole sphere.
#[pyfunction]
#[pyo3(signature = (field, grid_n = None))]
fn nodal_length_global(field: &PyHarmonicField, grid_n: Option<usize>) -> PyResult<f64> {
    cn::nodal::nodal_length_global_value(&field.inner, grid_n).map_err(to_py_err)
}

/// `(h4, m_local)`: integral of `H_4(T)` over the cap and the trispectrum term.
#[pyfunction]
#[pyo3(signature = (field, radius, quad_n = None, pole = "north"))]
fn local_trispectrum(field: &PyHarmonicField, radius: f64, quad_n: Option<usize>, pole: &str) -> PyResult<(f64, f64)> {
    let s = cn::chaos::local_trispectrum(&field.inner, &cap(radius, pole)?, quad_n).map_err(to_py_err)?;
    Ok((s.h4, s.m_local))
}

#[pyfunction]
#[pyo3(signature = (field, radius, n_nodes = None, pole = "north"))]
fn second_chaos_projection(field: &PyHarmonicField, radius: f64, n_nodes: Option<usize>, pole: &str) -> PyResult<f64> {
    cn::chaos::second_chaos_projection(&field.inner, &cap(radius, pole)?, n_nodes).map_err(to_py_err)
}

#[pyfunction]
fn predict_mean_local(ell: u32, r: f64) -> PyResult<f64> {
    cn::theory::predict_mean_local(ell, r).map_err(to_py_err)
}

#[pyfunction]
fn predict_var_local(ell: u32, r: f64) -> PyResult<f64> {
    cn::theory::predict_var_local(ell, r).map_err(to_py_err)
}

#[pyfunction]
fn kac_rice_variance(ell: u32, r: f64) -> PyResult<f64> {
    cn::theory::kac_rice_variance(ell, r).map_err(to_py_err)
}

#[pyfunction]
fn kac_rice_second_moment(ell: u32, r: f64) -> PyResult<f64> {
    cn::theory::kac_rice_second_moment(ell, r).map_err(to_py_err)
}

#[pyfunction]
fn k_exact(ell: u32, psi: f64) -> PyResult<f64> {
    cn::theory::k_exact(ell, psi).map_err(to_py_err)
}

#[pyfunction]
fn k_expansion(ell: u32, psi: f64) -> PyResult<f64> {
    cn::theory::k_expansion(ell, psi).map_err(to_py_err)
}

/// All predictions for `(ell, r)` as a dict.
#[pyfunction]
#[pyo3(signature = (ell, r, var_global = None, quadrature = false))]
fn theory_report<'py>(
    py: Python<'py>,
    ell: u32,
    r: f64,
    var_global: Option<f64>,
    quadrature: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = cn::theory::theory_report(ell, r, var_global, quadrature).map_err(to_py_err)?;
    to_python(py, &rep)
}

/// Monte Carlo experiment; returns `{"records": [...], "estimates": {...}}`.
#[pyfunction]
#[pyo3(signature = (ell, radius, reps, seed = 1, grid_n = None, with_global = false, extrapolate = false, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    ell: u32,
    radius: f64,
    reps: usize,
    seed: u64,
    grid_n: Option<usize>,
    with_global: bool,
    extrapolate: bool,
    threads: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = cn::mc::ExperimentConfig {
        ell,
        radius,
        reps,
        seed,
        grid_n,
        with_global,
        extrapolate,
        threads,
        ..Default::default()
    };
    let out = py.detach(|| cn::mc::run_experiment(&cfg)).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("records", to_python(py, &out.records)?)?;
    dict.set_item("estimates", to_python(py, &out.estimates)?)?;
    Ok(dict.into_any())
}

/// Kolmogorov-Smirnov test of standardized samples against the normal law:
/// `(statistic, threshold, passed)`.
#[pyfunction]
#[pyo3(signature = (samples, threshold = None))]
fn clt_check(samples: Vec<f64>, threshold: Option<f64>) -> PyResult<(f64, f64, bool)> {
    let r = cn::mc::clt_check(&samples, threshold).map_err(to_py_err)?;
    Ok((r.statistic, r.threshold, r.pass))
}

#[pyfunction]
fn standardize(samples: Vec<f64>) -> Vec<f64> {
    cn::mc::standardize(&samples)
}

#[pymodule]
fn capnodal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHarmonicField>()?;
    m.add_function(wrap_pyfunction!(eval_legendre, m)?)?;
    m.add_function(wrap_pyfunction!(nodal_length_cap, m)?)?;
    m.add_function(wrap_pyfunction!(nodal_length_global, m)?)?;
    m.add_function(wrap_pyfunction!(local_trispectrum, m)?)?;
    m.add_function(wrap_pyfunction!(second_chaos_projection, m)?)?;
    m.add_function(wrap_pyfunction!(predict_mean_local, m)?)?;
    m.add_function(wrap_pyfunction!(predict_var_local, m)?)?;
    m.add_function(wrap_pyfunction!(kac_rice_variance, m)?)?;
    m.add_function(wrap_pyfunction!(kac_rice_second_moment, m)?)?;
    m.add_function(wrap_pyfunction!(k_exact, m)?)?;
    m.add_function(wrap_pyfunction!(k_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(theory_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(clt_check, m)?)?;
    m.add_function(wrap_pyfunction!(standardize, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
