//! Physical-solution recovery, discrete-L² errors, norm-bound envelopes and
//! spatial convergence studies.
//!
//! The lifted state is contracted with S = (ω^{1/2})ᵀ ⊗ I and pushed through
//! the resolvent: (I - ω_∞ L_{h,d}) u_h = u_0 + Σ_k ω_k^{1/2} U_k (with
//! homogeneous boundary data). Errors are measured in
//! ‖v‖_h = h^{d/2} ‖v‖_2.

use crate::error::{Error, Result};
use crate::grid::{LaplacianOperator, SpatialGrid};
use crate::kernel::{fit_fractional_kernel, PartialFractionExpansion};
use crate::lifted::LiftedSystem;
use crate::special::exact_heat_solution;
use nalgebra::DVector;

/// Values over the interior grid points at one time.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub grid: SpatialGrid,
    pub t: f64,
    pub values: DVector<f64>,
}

impl SolutionField {
    pub fn new(grid: SpatialGrid, t: f64, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.n_interior() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_interior(),
                got: values.len(),
            });
        }
        Ok(SolutionField { grid, t, values })
    }

    /// ‖·‖_h = h^{d/2} ‖·‖_2.
    pub fn norm_h(&self) -> f64 {
        self.grid.h().powf(self.grid.dim() as f64 / 2.0) * self.values.norm()
    }
}

/// u_h(t) from the lifted state: the S-contraction followed by the
/// resolvent solve (I - ω_∞ L_{h,d}) u_h = u_0 + Σ_k ω_k^{1/2} U_k.
pub fn combine_solution(
    u0: &DVector<f64>,
    u_lifted: &DVector<f64>,
    pf: &PartialFractionExpansion,
    lap: &LaplacianOperator,
    t: f64,
) -> Result<SolutionField> {
    let n_d = lap.grid().n_interior();
    let m = pf.m();
    if u0.len() != n_d {
        return Err(Error::DimensionMismatch {
            expected: n_d,
            got: u0.len(),
        });
    }
    if u_lifted.len() != m * n_d {
        return Err(Error::DimensionMismatch {
            expected: m * n_d,
            got: u_lifted.len(),
        });
    }
    let mut s = u0.clone();
    for (k, w) in pf.weights.iter().enumerate() {
        let wk = w.sqrt();
        for j in 0..n_d {
            s[j] += wk * u_lifted[k * n_d + j];
        }
    }
    let values = lap.resolvent_apply(pf.omega_inf, &s)?;
    SolutionField::new(*lap.grid(), t, values)
}

/// Discrete-L² distance between two fields on the same grid and time.
pub fn discrete_l2_error(u: &SolutionField, v: &SolutionField) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::InvalidInput("fields live on different grids".into()));
    }
    if u.t != v.t {
        return Err(Error::InvalidInput(format!(
            "fields at different times: {} vs {}",
            u.t, v.t
        )));
    }
    let d = u.grid.dim() as f64;
    Ok(u.grid.h().powf(d / 2.0) * (&u.values - &v.values).norm())
}

/// Two-sided envelope for ‖U_h(T)‖ from the kernel data alone:
/// lower = ‖ω‖^{1/2}‖u0‖ / (‖λ‖_max + ‖ω‖/ω_∞),
/// upper = ‖ω‖^{1/2}‖u0‖ / ‖λ‖_min (hidden constants dropped).
#[derive(Debug, Clone, Copy)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
    /// Set when ω_∞ = 0 and the lower bound degenerates to 0.
    pub omega_inf_zero: bool,
}

pub fn solution_norm_bounds(sys: &LiftedSystem) -> NormBounds {
    let pf = sys.pf();
    let wn = pf.omega_norm();
    let u0n = sys.u0().norm();
    let lam_max = pf.lambda_max();
    let lam_min = pf.lambda_min();
    let (lower, flagged) = if pf.omega_inf > 0.0 {
        (wn.sqrt() * u0n / (lam_max + wn / pf.omega_inf), false)
    } else {
        (0.0, true)
    };
    let upper = if lam_min > 0.0 {
        wn.sqrt() * u0n / lam_min
    } else {
        f64::INFINITY
    };
    NormBounds {
        lower,
        upper,
        omega_inf_zero: flagged,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub n_x: usize,
    pub h: f64,
    pub error: f64,
    /// log₂(e(h) / e(h/2)) against the previous row.
    pub observed_order: Option<f64>,
}

/// Spatial convergence of the reference (Duhamel) path against the exact
/// Mittag-Leffler solution, one row per grid. The kernel is fitted once on
/// [1/t_max, 1/tau_kernel] and reused for every grid.
pub fn convergence_study(
    alpha: f64,
    d: usize,
    t_max: f64,
    n_x_list: &[usize],
    kernel_tol: f64,
    tau_kernel: f64,
) -> Result<Vec<ConvergenceRow>> {
    if n_x_list.is_empty() {
        return Err(Error::InvalidInput("empty grid list".into()));
    }
    for w in n_x_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidInput(
                "grid list must be strictly increasing".into(),
            ));
        }
    }
    if n_x_list[0] < 4 {
        return Err(Error::InvalidInput("grids must have n_x >= 4".into()));
    }
    let (pf, _) = fit_fractional_kernel(alpha, 1.0 / t_max, 1.0 / tau_kernel, kernel_tol, 1000, 60)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_x_list.len());
    for &n_x in n_x_list {
        let grid = SpatialGrid::new(d, n_x)?;
        let lap = LaplacianOperator::new(grid);
        let u0 = exact_heat_solution(alpha, d, 0.0, &grid)?;
        let sys = LiftedSystem::assemble(pf.clone(), lap, u0.clone())?;
        let u_lifted = sys.reference_solve(t_max)?;
        let numeric = combine_solution(&u0, &u_lifted, sys.pf(), sys.lap(), t_max)?;
        let exact = SolutionField::new(grid, t_max, exact_heat_solution(alpha, d, t_max, &grid)?)?;
        let error = discrete_l2_error(&numeric, &exact)?;
        let observed_order = rows
            .last()
            .map(|prev: &ConvergenceRow| (prev.error / error).log2());
        rows.push(ConvergenceRow {
            n_x,
            h: grid.h(),
            error,
            observed_order,
        });
    }
    Ok(rows)
}
