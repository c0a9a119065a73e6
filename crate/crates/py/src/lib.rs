//! Python bindings for the `btq` library, importable as `pybtq`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use btq::config::{CheckId, GeometrySpec, RunConfig, SymbolSpec};
use btq::geometry::{Geometry, Symbol};
use btq::quantum_space::{build_space, SpaceOptions};
use btq::toeplitz;

fn to_py(e: btq::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Round-trips a Python object through `json.dumps` into a serde value.
fn from_python<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>, what: &str) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn geometry(name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Geometry> {
    let mut spec = GeometrySpec { name: name.to_string(), params: Default::default() };
    if let Some(d) = params {
        for (k, v) in d.iter() {
            spec.params.insert(k.extract()?, v.extract()?);
        }
    }
    spec.build().map_err(to_py)
}

fn symbol(py: Python<'_>, obj: &Bound<'_, PyAny>, name: &str) -> PyResult<Symbol> {
    let spec: SymbolSpec = from_python(py, obj, name)?;
    spec.build(name).map_err(to_py)
}

#[pyfunction]
fn list_checks() -> Vec<String> {
    CheckId::ALL.iter().map(|c| c.to_string()).collect()
}

#[pyfunction]
fn describe(id: &str) -> PyResult<String> {
    Ok(id.parse::<CheckId>().map_err(to_py)?.describe().to_string())
}

/// `P_p(x, y)` from the quadrature-built orthonormal basis.
#[pyfunction]
#[pyo3(signature = (geometry_name, p, x, y, params=None))]
fn bergman_kernel(geometry_name: &str, p: u32, x: Complex64, y: Complex64, params: Option<&Bound<'_, PyDict>>) -> PyResult<Complex64> {
    let geom = geometry(geometry_name, params)?;
    let space = build_space(&geom, p, &SpaceOptions::with_radius(x.norm().max(y.norm()))).map_err(to_py)?;
    space.bergman_kernel(x, y).map_err(to_py)
}

/// Closed-form kernel, or `None` where no closed form is known.
#[pyfunction]
#[pyo3(signature = (geometry_name, p, x, y, params=None))]
fn reference_kernel(geometry_name: &str, p: u32, x: Complex64, y: Complex64, params: Option<&Bound<'_, PyDict>>) -> PyResult<Option<Complex64>> {
    Ok(geometry(geometry_name, params)?.reference_kernel(p, x, y))
}

/// `(p, dim, e0, e1)` rows of the product expansion defect.
#[pyfunction]
#[pyo3(signature = (geometry_name, f, g, p_list, params=None))]
fn product_defect(
    py: Python<'_>,
    geometry_name: &str,
    f: &Bound<'_, PyAny>,
    g: &Bound<'_, PyAny>,
    p_list: Vec<u32>,
    params: Option<&Bound<'_, PyDict>>,
) -> PyResult<Vec<(u32, usize, f64, f64)>> {
    let geom = geometry(geometry_name, params)?;
    let (f, g) = (symbol(py, f, "f")?, symbol(py, g, "g")?);
    let rows = py.detach(|| toeplitz::product_defect(&geom, &f, &g, &p_list, None)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.p, r.dim, r.e0, r.e1)).collect())
}

/// Operator norm of `T_{f,p}` and the sup norm of `f`.
#[pyfunction]
#[pyo3(signature = (geometry_name, f, p, params=None))]
fn toeplitz_norm(py: Python<'_>, geometry_name: &str, f: &Bound<'_, PyAny>, p: u32, params: Option<&Bound<'_, PyDict>>) -> PyResult<(f64, f64)> {
    let geom = geometry(geometry_name, params)?;
    let f = symbol(py, f, "f")?;
    let space = build_space(&geom, p, &SpaceOptions::for_symbols(&[&f])).map_err(to_py)?;
    let norm = toeplitz::assemble_toeplitz(&space, &f).and_then(|t| t.norm()).map_err(to_py)?;
    Ok((norm, f.sup_norm()))
}

/// Runs a config (a dict or a path to a JSON file); returns `(exit_code, summary_json)`.
#[pyfunction]
#[pyo3(signature = (config, out, checks=None, seed=None))]
fn run(py: Python<'_>, config: &Bound<'_, PyAny>, out: PathBuf, checks: Option<Vec<String>>, seed: Option<u64>) -> PyResult<(i32, String)> {
    let mut cfg = if let Ok(path) = config.extract::<PathBuf>() {
        RunConfig::load(&path).map_err(to_py)?
    } else {
        let cfg: RunConfig = from_python(py, config, "config")?;
        cfg.validate().map_err(to_py)?;
        cfg
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let only = checks
        .map(|v| v.iter().map(|s| s.parse::<CheckId>()).collect::<btq::Result<Vec<_>>>())
        .transpose()
        .map_err(to_py)?;
    let report = py.detach(|| btq::runner::run(&cfg, only.as_deref(), &out)).map_err(to_py)?;
    let summary = std::fs::read_to_string(out.join("summary.json")).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((report.exit_code(), summary))
}

type Comparisons = Vec<(String, f64, f64, bool)>;

/// One acceptance criterion: `(passed, [(name, measured, reference, passed)])`.
#[pyfunction]
#[pyo3(signature = (n, seed=20240601))]
fn criterion(py: Python<'_>, n: usize, seed: u64) -> PyResult<(bool, Comparisons)> {
    let out = py.detach(|| btq::suite::criterion(n, seed)).map_err(to_py)?;
    let rows: Vec<_> = out.measurements.iter().map(|m| (m.name.clone(), m.measured, m.reference, m.passed)).collect();
    Ok((rows.iter().all(|r| r.3), rows))
}

#[pymodule]
fn pybtq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(list_checks, m)?)?;
    m.add_function(wrap_pyfunction!(describe, m)?)?;
    m.add_function(wrap_pyfunction!(bergman_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(reference_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(product_defect, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_norm, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(criterion, m)?)?;
    Ok(())
}
