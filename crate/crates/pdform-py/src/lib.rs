//! Python extension module over the sublevel-volume library.
//!
//! Forms, matrices, and report objects cross the language boundary as JSON
//! strings in the same schemas the command-line tool reads and writes;
//! scalar results come back as plain floats.  Input problems raise
//! `ValueError`, numerical failures raise `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pdform::{Coeff, Error, Form, McConfig, MultiIndex, RatMatrix, SymMatrix};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Input(_)
        | Error::DimensionMismatch { .. }
        | Error::DegreeMismatch(_)
        | Error::OddDegree(_)
        | Error::ZeroPolynomial
        | Error::MissingMoment(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn cfg(samples: u64, seed: u64, shards: Option<usize>) -> McConfig {
    let base = McConfig::new(samples, seed);
    match shards {
        Some(s) => base.with_shards(s),
        None => base,
    }
}

fn form(json: &str) -> PyResult<Form<f64>> {
    Form::<f64>::from_json(json).map_err(py_err)
}

fn exact_form(json: &str) -> PyResult<Form<num_rational::BigRational>> {
    Form::<num_rational::BigRational>::from_json(json).map_err(py_err)
}

fn matrix(json: &str) -> PyResult<SymMatrix> {
    SymMatrix::from_json(json).map_err(py_err)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Monte Carlo estimate of `vol{x : g(x) <= 1}`; returns the estimate report
/// (value, stderr, samples, tail diagnostics, seed, shards) as JSON.
#[pyfunction]
#[pyo3(signature = (form_json, samples=1_000_000, seed=42, shards=None))]
fn volume_mc(form_json: &str, samples: u64, seed: u64, shards: Option<usize>) -> PyResult<String> {
    let g = form(form_json)?;
    let est = pdform::volume_mc(&g, &cfg(samples, seed, shards)).map_err(py_err)?;
    to_json(&est)
}

/// Closed-form volume of `{x : x^T Q x <= 1}` from the matrix JSON.
#[pyfunction]
fn volume_quadratic_closed(matrix_json: &str) -> PyResult<f64> {
    pdform::volume_quadratic_closed(&matrix(matrix_json)?).map_err(py_err)
}

/// Closed-form weighted integral `int_{x^T G x <= 1} x^T H x dx`.
#[pyfunction]
fn hsos_quadratic_closed(g_json: &str, h_json: &str) -> PyResult<f64> {
    pdform::hsos_quadratic_closed(&matrix(g_json)?, &matrix(h_json)?).map_err(py_err)
}

/// The moment scale `sigma_d` for `n` variables.
#[pyfunction]
fn sigma_d(n: usize, d: u32) -> PyResult<f64> {
    pdform::sigma_d(n, d).map_err(py_err)
}

/// Exact rational `sigma_d^d`, rendered as a decimal or `p/q` string.
#[pyfunction]
fn sigma_pow_d_exact(n: usize, d: u32) -> PyResult<String> {
    let s = pdform::sigma_pow_d_exact(n, d).map_err(py_err)?;
    Ok(s.format_coef())
}

/// Degree-`d` Gaussian moment matrix of `Q` (basis, entries, and scale) as JSON.
#[pyfunction]
fn moment_matrix(matrix_json: &str, d: u32) -> PyResult<String> {
    let mm = pdform::moment_matrix(&matrix(matrix_json)?, d).map_err(py_err)?;
    Ok(mm.to_json())
}

/// Float Gram identity residual: `(max coefficient deviation, matrix condition)`.
#[pyfunction]
fn gram_identity_residual(matrix_json: &str, d: u32) -> PyResult<(f64, f64)> {
    let r = pdform::gram_identity_residual(&matrix(matrix_json)?, d).map_err(py_err)?;
    Ok((r.residual, r.condition))
}

/// Exact-rational Gram identity residual for a rational `Q`, as a string
/// (`"0"` exactly when the identity holds).
#[pyfunction]
fn gram_identity_residual_exact(matrix_json: &str, d: u32) -> PyResult<String> {
    let q = RatMatrix::from_json(matrix_json).map_err(py_err)?;
    let r = pdform::gram_identity_residual_exact(&q, d).map_err(py_err)?;
    Ok(r.format_coef())
}

/// Monte Carlo moment of the boundary sphere measure: `(value, stderr, samples)`.
#[pyfunction]
#[pyo3(signature = (matrix_json, d, gamma, samples=1_000_000, seed=42, shards=None))]
fn sphere_measure_moment_mc(
    matrix_json: &str,
    d: u32,
    gamma: Vec<u32>,
    samples: u64,
    seed: u64,
    shards: Option<usize>,
) -> PyResult<(f64, f64, u64)> {
    let q = matrix(matrix_json)?;
    let idx = MultiIndex::new(gamma);
    let est = pdform::sphere_measure_moment_mc(&q, d, &idx, &cfg(samples, seed, shards))
        .map_err(py_err)?;
    Ok((est.value, est.stderr, est.samples))
}

/// The normalization constant `k = 1 / (2 C(d/2 + n - 1, n))`.
#[pyfunction]
fn k_constant(n: usize, d: u32) -> PyResult<f64> {
    pdform::k_constant(n, d).map_err(py_err)
}

/// Closed-form partition integral `int exp(-k (y^T Q y)^{d/2}) dy`.
#[pyfunction]
fn partition_mass(matrix_json: &str, d: u32, k: f64) -> PyResult<f64> {
    pdform::partition_mass(&matrix(matrix_json)?, d, k).map_err(py_err)
}

/// Exact finite/infinite/negative classification of a binary form (rational
/// coefficients), as a JSON report with certified roots and orders.
#[pyfunction]
fn classify_binary(form_json: &str) -> PyResult<String> {
    let g = exact_form(form_json)?;
    let cls = pdform::classify_binary(&g).map_err(py_err)?;
    to_json(&cls)
}

/// Certified quadrature for the volume of a binary form's sublevel set;
/// raises `RuntimeError` when the classification proves divergence.
#[pyfunction]
fn binary_volume_quadrature(form_json: &str) -> PyResult<f64> {
    let g = exact_form(form_json)?;
    pdform::binary_volume_quadrature(&g).map_err(py_err)
}

/// Multi-start search for the projective zeros of a nonnegative form with a
/// genericity verdict, as a JSON report.
#[pyfunction]
#[pyo3(signature = (form_json, starts=None, seed=None, tol_zero=None, tol_pd=None))]
fn generic_check(
    form_json: &str,
    starts: Option<usize>,
    seed: Option<u64>,
    tol_zero: Option<f64>,
    tol_pd: Option<f64>,
) -> PyResult<String> {
    let g = form(form_json)?;
    let mut gc = pdform::GenericConfig::default();
    if let Some(s) = starts {
        gc.starts_per_var = s;
    }
    if let Some(s) = seed {
        gc.seed = s;
    }
    gc.tol_zero = tol_zero.or(gc.tol_zero);
    gc.tol_pd = tol_pd.or(gc.tol_pd);
    let cls = pdform::generic_check(&g, &gc).map_err(py_err)?;
    to_json(&cls)
}

/// Staged sampling diagnostic for finiteness of the sublevel volume, as a
/// JSON report with per-stage tail statistics and a verdict.
#[pyfunction]
#[pyo3(signature = (form_json, samples=400_000, seed=42, shards=None))]
fn finiteness_diagnostic(
    form_json: &str,
    samples: u64,
    seed: u64,
    shards: Option<usize>,
) -> PyResult<String> {
    let g = form(form_json)?;
    let rep = pdform::finiteness_diagnostic(&g, &cfg(samples, seed, shards)).map_err(py_err)?;
    to_json(&rep)
}

/// Expand a Gram matrix over the degree-`d/2` monomial basis into its form;
/// returns the certificate bundle (basis, matrix, form) as JSON.
#[pyfunction]
fn sos_expand(matrix_json: &str, n: usize, d: u32) -> PyResult<String> {
    let m = matrix(matrix_json)?;
    let basis = pdform::monomial_basis(n, d / 2).map_err(py_err)?;
    let gram = pdform::GramForm::new(m, basis).map_err(py_err)?;
    Ok(gram.to_json())
}

/// Volume estimate for the form of a Gram certificate bundle, with a closed
/// form cross-check when the bundle is a perfect power of a quadratic.
#[pyfunction]
#[pyo3(signature = (bundle_json, samples=1_000_000, seed=42, shards=None))]
fn sos_volume(
    bundle_json: &str,
    samples: u64,
    seed: u64,
    shards: Option<usize>,
) -> PyResult<String> {
    let gram = pdform::GramForm::from_json(bundle_json).map_err(py_err)?;
    let est = pdform::sos_volume(&gram, &cfg(samples, seed, shards)).map_err(py_err)?;
    to_json(&est)
}

/// Gram matrix of a strictly positive pseudo-moment functional (the
/// barrier-gradient construction); input and output are JSON.
#[pyfunction]
fn nesterov_gram(moments_json: &str) -> PyResult<String> {
    let pm = pdform::PseudoMomentFunctional::from_json(moments_json).map_err(py_err)?;
    let gram = pdform::nesterov_gram(&pm).map_err(py_err)?;
    Ok(gram.to_json())
}

#[pymodule]
fn pdform_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(volume_mc, m)?)?;
    m.add_function(wrap_pyfunction!(volume_quadratic_closed, m)?)?;
    m.add_function(wrap_pyfunction!(hsos_quadratic_closed, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_d, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_pow_d_exact, m)?)?;
    m.add_function(wrap_pyfunction!(moment_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(gram_identity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(gram_identity_residual_exact, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_measure_moment_mc, m)?)?;
    m.add_function(wrap_pyfunction!(k_constant, m)?)?;
    m.add_function(wrap_pyfunction!(partition_mass, m)?)?;
    m.add_function(wrap_pyfunction!(classify_binary, m)?)?;
    m.add_function(wrap_pyfunction!(binary_volume_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(generic_check, m)?)?;
    m.add_function(wrap_pyfunction!(finiteness_diagnostic, m)?)?;
    m.add_function(wrap_pyfunction!(sos_expand, m)?)?;
    m.add_function(wrap_pyfunction!(sos_volume, m)?)?;
    m.add_function(wrap_pyfunction!(nesterov_gram, m)?)?;
    Ok(())
}
