//! Python bindings exposing the kernel fit, the Mittag-Leffler evaluator,
//! the three solution paths and the cost-model arithmetic.

// `!(x > 0.0)` guards reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use fracheat::baseline::{count_classical_ops, euler_recover, forward_euler_solve};
use fracheat::cost;
use fracheat::kernel::fit_fractional_kernel;
use fracheat::recovery::{combine_solution, discrete_l2_error, SolutionField};
use fracheat::schrod::{solve_schrodingerized, Extension, SchrodOptions};
use fracheat::special;
use fracheat::{LaplacianOperator, LiftedSystem, SpatialGrid};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: fracheat::Error) -> PyErr {
    PyValueError::new_err(format!("{e}"))
}

/// Fitted partial-fraction kernel Σ ω_k/(λ+λ_k) + ω_∞ ≈ λ^{-α}.
#[pyclass]
struct KernelFit {
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    poles: Vec<f64>,
    #[pyo3(get)]
    weights: Vec<f64>,
    #[pyo3(get)]
    omega_inf: f64,
    #[pyo3(get)]
    max_rel_error: f64,
    #[pyo3(get)]
    converged: bool,
}

#[pymethods]
impl KernelFit {
    /// Σ ω_k/(λ+λ_k) + ω_∞ at a point λ > 0.
    fn eval(&self, lam: f64) -> PyResult<f64> {
        if !(lam > 0.0) {
            return Err(PyValueError::new_err("lambda must be positive"));
        }
        let mut s = self.omega_inf;
        for (l, w) in self.poles.iter().zip(&self.weights) {
            s += w / (lam + l);
        }
        Ok(s)
    }

    fn __repr__(&self) -> String {
        format!(
            "KernelFit(alpha={}, m={}, omega_inf={:.3e}, max_rel_error={:.3e})",
            self.alpha,
            self.poles.len(),
            self.omega_inf,
            self.max_rel_error
        )
    }
}

/// Fit λ^{-α} on [1/t_max, 1/tau] with the AAA rational approximation.
#[pyfunction]
#[pyo3(signature = (alpha, t_max=1.0, tau=1e-3, tol=1e-6, candidates=1000, max_degree=60))]
fn fit_kernel(
    alpha: f64,
    t_max: f64,
    tau: f64,
    tol: f64,
    candidates: usize,
    max_degree: usize,
) -> PyResult<KernelFit> {
    let (pf, fit) =
        fit_fractional_kernel(alpha, 1.0 / t_max, 1.0 / tau, tol, candidates, max_degree)
            .map_err(err)?;
    let max_rel_error = pf.kernel_max_error(10_000).map_err(err)?;
    Ok(KernelFit {
        alpha,
        poles: pf.poles,
        weights: pf.weights,
        omega_inf: pf.omega_inf,
        max_rel_error,
        converged: fit.converged,
    })
}

/// E_{α,β}(z) for α in (0,1], z <= 0.
#[pyfunction]
#[pyo3(signature = (alpha, z, beta=1.0))]
fn mittag_leffler(alpha: f64, z: f64, beta: f64) -> PyResult<f64> {
    special::mittag_leffler(alpha, beta, z).map_err(err)
}

/// Exact solution values on the interior grid (lexicographic, axis 0 fastest).
#[pyfunction]
fn exact_solution(alpha: f64, dim: usize, t: f64, nx: usize) -> PyResult<Vec<f64>> {
    let grid = SpatialGrid::new(dim, nx).map_err(err)?;
    Ok(special::exact_heat_solution(alpha, dim, t, &grid)
        .map_err(err)?
        .iter()
        .copied()
        .collect())
}

/// One solver run: numeric and exact interior values plus the ‖·‖_h error.
#[pyclass]
struct SolveResult {
    #[pyo3(get)]
    u_numeric: Vec<f64>,
    #[pyo3(get)]
    u_exact: Vec<f64>,
    #[pyo3(get)]
    err_h: f64,
    #[pyo3(get)]
    method: String,
}

#[pymethods]
impl SolveResult {
    fn __repr__(&self) -> String {
        format!("SolveResult(method={}, err_h={:.3e})", self.method, self.err_h)
    }
}

#[pyfunction]
#[pyo3(signature = (alpha, dim, nx, t_max, method="schrodingerize", n_p=512,
                    extension="exp", kernel_tol=1e-6, tau_kernel=1e-3,
                    tau_safety=0.05))]
#[allow(clippy::too_many_arguments)]
fn solve(
    alpha: f64,
    dim: usize,
    nx: usize,
    t_max: f64,
    method: &str,
    n_p: usize,
    extension: &str,
    kernel_tol: f64,
    tau_kernel: f64,
    tau_safety: f64,
) -> PyResult<SolveResult> {
    let grid = SpatialGrid::new(dim, nx).map_err(err)?;
    let u0 = special::exact_heat_solution(alpha, dim, 0.0, &grid).map_err(err)?;
    let exact_values = special::exact_heat_solution(alpha, dim, t_max, &grid).map_err(err)?;
    let exact = SolutionField::new(grid, t_max, exact_values).map_err(err)?;
    if t_max == 0.0 {
        return Ok(SolveResult {
            u_numeric: u0.iter().copied().collect(),
            u_exact: exact.values.iter().copied().collect(),
            err_h: 0.0,
            method: method.to_string(),
        });
    }
    let (pf, _) = fit_fractional_kernel(
        alpha,
        1.0 / t_max,
        1.0 / tau_kernel,
        kernel_tol,
        1000,
        60,
    )
    .map_err(err)?;
    let lap = LaplacianOperator::new(grid);
    let field = match method {
        "reference" => {
            let sys = LiftedSystem::assemble(pf, lap, u0.clone()).map_err(err)?;
            let u = sys.reference_solve(t_max).map_err(err)?;
            combine_solution(&u0, &u, sys.pf(), sys.lap(), t_max).map_err(err)?
        }
        "schrodingerize" => {
            let sys = LiftedSystem::assemble(pf, lap, u0.clone()).map_err(err)?;
            let opts = SchrodOptions {
                n_p,
                extension: match extension {
                    "exp" => Extension::Exp,
                    "smooth" => Extension::Smooth,
                    other => {
                        return Err(PyValueError::new_err(format!(
                            "unknown extension `{other}` (exp|smooth)"
                        )))
                    }
                },
                ..SchrodOptions::default()
            };
            let sol = solve_schrodingerized(&sys, t_max, &opts).map_err(err)?;
            combine_solution(&u0, &sol.u_lifted, sys.pf(), sys.lap(), t_max).map_err(err)?
        }
        "euler" => {
            let h = 1.0 / nx as f64;
            let tau = tau_safety * h * h / dim as f64;
            let run = forward_euler_solve(&pf, &lap, &u0, tau, t_max, 1e-10, true).map_err(err)?;
            let values = euler_recover(&run, &pf, &lap, &u0).map_err(err)?;
            SolutionField::new(grid, t_max, values).map_err(err)?
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method `{other}` (schrodingerize|reference|euler)"
            )))
        }
    };
    let err_h = discrete_l2_error(&field, &exact).map_err(err)?;
    Ok(SolveResult {
        u_numeric: field.values.iter().copied().collect(),
        u_exact: exact.values.iter().copied().collect(),
        err_h,
        method: method.to_string(),
    })
}

/// (queries, headline) of the constants-1 query-complexity model.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn quantum_query_bound(
    t: f64,
    d: usize,
    h: f64,
    omega_inf: f64,
    lambda_max: f64,
    lambda_min: f64,
    omega_norm: f64,
    u0_norm: f64,
) -> PyResult<(f64, f64)> {
    let q = cost::quantum_query_bound(
        t,
        d,
        h,
        omega_inf,
        lambda_max,
        lambda_min,
        omega_norm,
        u0_norm,
    )
    .map_err(err)?;
    Ok((q.queries, q.headline))
}

/// The classical work model N_t·M·d·h^{-(d+0.5)}.
#[pyfunction]
fn classical_op_count(d: usize, h: f64, t_max: f64, m: usize) -> f64 {
    count_classical_ops(d, h, t_max, m) as f64
}

#[pymodule]
fn fracheat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KernelFit>()?;
    m.add_class::<SolveResult>()?;
    m.add_function(wrap_pyfunction!(fit_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(exact_solution, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_query_bound, m)?)?;
    m.add_function(wrap_pyfunction!(classical_op_count, m)?)?;
    Ok(())
}
