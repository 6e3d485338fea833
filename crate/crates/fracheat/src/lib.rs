//! Classical, desk-scale emulator of a Schrödingerization-based solver for
//! time-fractional heat equations on (0,1)^d with homogeneous Dirichlet
//! boundary conditions.
//!
//! Pipeline: fit the fractional kernel λ^{-α} by a rational (AAA) expansion,
//! assemble the dimension-lifted stable ODE system, evolve it either by the
//! Duhamel closed form or by emulating the warped-phase / Fourier
//! Hamiltonian evolution, recover the physical field, and compare against
//! the analytic Mittag-Leffler solution. Quantum and classical cost models
//! are evaluated as formula arithmetic alongside.

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cost;
pub mod dd;
pub mod error;
pub mod expm;
pub mod grid;
pub mod kernel;
pub mod lifted;
pub mod recovery;
pub mod schrod;
pub mod special;

pub use error::{Error, Result};
pub use grid::{laplacian_1d, LaplacianOperator, SpatialGrid};
pub use kernel::{
    aaa_fit, fit_fractional_kernel, to_partial_fractions, AaaFit, BarycentricRational,
    PartialFractionExpansion,
};
pub use lifted::LiftedSystem;
pub use recovery::{combine_solution, convergence_study, discrete_l2_error, SolutionField};
pub use schrod::{solve_schrodingerized, Extension, SchrodOptions};
pub use special::{exact_heat_solution, mittag_leffler};
