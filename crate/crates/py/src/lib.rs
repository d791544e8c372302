//! Python bindings: evaluate the potential and its derivatives, run the
//! residual suites, inspect metric/curvature data and the symmetry tests.
//!
//! Parameters travel as JSON strings with the same schema the CLI configs
//! use; reports come back as JSON strings as well, so the Python side can
//! `json.loads` them directly.

use heavenly_core::error::Error as CoreError;
use heavenly_core::geometry::{self, CurvatureMethod, MetricPath};
use heavenly_core::residuals;
use heavenly_core::solution::{self, certify_regularity};
use heavenly_core::symmetry;
use heavenly_core::{Box4, FlatPotential, Params, Point4, SolutionField};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: CoreError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_params(json: &str) -> PyResult<Params> {
    let p: Params =
        serde_json::from_str(json).map_err(|e| PyValueError::new_err(format!("params: {e}")))?;
    p.validate().map_err(err)?;
    Ok(p)
}

fn parse_box(bounds: [[f64; 2]; 4]) -> PyResult<Box4> {
    let bx = Box4::new(bounds[0], bounds[1], bounds[2], bounds[3]);
    if !bx.is_valid() {
        return Err(PyValueError::new_err(
            "box intervals must be nonempty and finite",
        ));
    }
    Ok(bx)
}

/// JSON for the canonical parameter set.
#[pyfunction]
fn canonical_params() -> PyResult<String> {
    serde_json::to_string_pretty(&Params::canonical())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// The coordinate box certified for the canonical parameters.
#[pyfunction]
fn canonical_box() -> [[f64; 2]; 4] {
    let bx = Params::canonical_box();
    [bx.t, bx.x, bx.y, bx.z]
}

/// Value of the potential u at a point.
#[pyfunction]
fn u_value(params_json: &str, t: f64, x: f64, y: f64, z: f64) -> PyResult<f64> {
    let p = parse_params(params_json)?;
    Ok(solution::u_eval(&p, Point4::new(t, x, y, z), 0)
        .map_err(err)?
        .value())
}

/// Value of v = u_t at a point.
#[pyfunction]
fn v_value(params_json: &str, t: f64, x: f64, y: f64, z: f64) -> PyResult<f64> {
    let p = parse_params(params_json)?;
    Ok(solution::v_eval(&p, Point4::new(t, x, y, z), 0)
        .map_err(err)?
        .value())
}

/// Partial derivative of u for a multi-index (it, ix, iy, iz), |index| <= 4.
#[pyfunction]
fn u_partial(
    params_json: &str,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    index: [usize; 4],
) -> PyResult<f64> {
    let p = parse_params(params_json)?;
    let order = index.iter().sum::<usize>();
    let jet = solution::u_eval(&p, Point4::new(t, x, y, z), order.min(4)).map_err(err)?;
    jet.partial(index).map_err(err)
}

/// Relative residuals (u_t - v, v_t + u_xx - Q) of the evolution system.
#[pyfunction]
fn cma_relative(params_json: &str, t: f64, x: f64, y: f64, z: f64) -> PyResult<(f64, f64)> {
    let p = parse_params(params_json)?;
    let field = SolutionField::new(&p);
    let [r1, r2] = residuals::cma_residual(&field, Point4::new(t, x, y, z)).map_err(err)?;
    Ok((r1.relative, r2.relative))
}

/// Relative residuals of the two expanded nonlocal-invariance conditions.
#[pyfunction]
fn invariance_relative(params_json: &str, t: f64, x: f64, y: f64, z: f64) -> PyResult<(f64, f64)> {
    let p = parse_params(params_json)?;
    let field = SolutionField::new(&p);
    let [r1, r2] = residuals::invariance_residual(&field, Point4::new(t, x, y, z)).map_err(err)?;
    Ok((r1.relative, r2.relative))
}

/// Worst relative residual over the chain identity suite, with its name.
#[pyfunction]
fn chain_worst(params_json: &str, t: f64, x: f64, y: f64, z: f64) -> PyResult<(String, f64)> {
    let p = parse_params(params_json)?;
    let reports = residuals::chain_identity_suite(&p, Point4::new(t, x, y, z)).map_err(err)?;
    let worst = reports
        .into_iter()
        .max_by(|a, b| a.relative.total_cmp(&b.relative))
        .expect("suite is nonempty");
    Ok((worst.name, worst.relative))
}

/// Metric coefficients (a, b, c, Q); `closed_form=True` uses the derived
/// scalar expressions instead of jets.
#[pyfunction]
#[pyo3(signature = (params_json, t, x, y, z, closed_form = false))]
fn metric(
    params_json: &str,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    closed_form: bool,
) -> PyResult<(f64, f64, f64, f64)> {
    let p = parse_params(params_json)?;
    let field = SolutionField::new(&p);
    let path = if closed_form {
        MetricPath::ClosedForm
    } else {
        MetricPath::FromJets
    };
    let mc = geometry::metric_components(&field, Point4::new(t, x, y, z), path).map_err(err)?;
    Ok((mc.a, mc.b, mc.c, mc.q))
}

/// Curvature summary: (kretschmann, max |ricci|, duality residual,
/// dual-path disagreement), all in frame components.
#[pyfunction]
fn curvature_summary(
    params_json: &str,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
) -> PyResult<(f64, f64, f64, f64)> {
    let p = parse_params(params_json)?;
    let field = SolutionField::new(&p);
    let pt = Point4::new(t, x, y, z);
    let direct = geometry::riemann(&field, pt, CurvatureMethod::ClosedForm).map_err(err)?;
    let cartan = geometry::riemann(&field, pt, CurvatureMethod::Cartan).map_err(err)?;
    let mut cross = 0.0f64;
    for r in 0..3 {
        for c in 0..6 {
            cross = cross.max((direct.components[r][c] - cartan.components[r][c]).abs());
        }
    }
    cross /= direct.component_scale().max(1e-30);
    Ok((
        cartan.kretschmann,
        cartan.ricci_max(),
        cartan.duality_max(),
        cross,
    ))
}

/// Regularity certification over a box; returns the report as JSON.
#[pyfunction]
fn certify(params_json: &str, bounds: [[f64; 2]; 4], n_probe: usize) -> PyResult<String> {
    let p = parse_params(params_json)?;
    let rep = certify_regularity(&p, &parse_box(bounds)?, n_probe).map_err(err)?;
    serde_json::to_string_pretty(&rep).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Point-symmetry rank test; returns the report as JSON. With `flat=True`
/// the baseline quadratic potential is tested instead of the solution.
#[pyfunction]
#[pyo3(signature = (params_json, bounds, n_points = 400, degree = 4, threshold = 1e-6, seed = 0, flat = false))]
#[allow(clippy::too_many_arguments)]
fn killing_report(
    params_json: &str,
    bounds: [[f64; 2]; 4],
    n_points: usize,
    degree: usize,
    threshold: f64,
    seed: u64,
    flat: bool,
) -> PyResult<String> {
    let p = parse_params(params_json)?;
    let bx = parse_box(bounds)?;
    let rep = if flat {
        symmetry::noninvariance_test(
            &FlatPotential { eps: p.eps },
            &bx,
            n_points,
            degree,
            threshold,
            seed,
        )
    } else {
        symmetry::noninvariance_test(
            &SolutionField::new(&p),
            &bx,
            n_points,
            degree,
            threshold,
            seed,
        )
    }
    .map_err(err)?;
    serde_json::to_string_pretty(&rep).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn heavenly(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(canonical_params, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_box, m)?)?;
    m.add_function(wrap_pyfunction!(u_value, m)?)?;
    m.add_function(wrap_pyfunction!(v_value, m)?)?;
    m.add_function(wrap_pyfunction!(u_partial, m)?)?;
    m.add_function(wrap_pyfunction!(cma_relative, m)?)?;
    m.add_function(wrap_pyfunction!(invariance_relative, m)?)?;
    m.add_function(wrap_pyfunction!(chain_worst, m)?)?;
    m.add_function(wrap_pyfunction!(metric, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_summary, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(killing_report, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
