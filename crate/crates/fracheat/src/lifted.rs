//! The dimension-lifted ODE system for the semi-discrete fractional heat
//! equation.
//!
//! Stable form (the one the solver uses):
//!
//!   dU/dt = (-Λ ⊗ I + E_ω ⊗ L_{∞,h}) U + F,   U(0) = 0,
//!
//! with E_ω = ω^{1/2} (ω^{1/2})ᵀ rank one and F = ω^{1/2} ⊗ (L_{∞,h} u_0);
//! the coefficient matrix is symmetric with negative-definite symmetric
//! part, bounded by -min_k λ_k. The pre-transform C-form, with
//! C_{ki} = (1+λ_k) ω_i/(1+λ_i), has an indefinite symmetric part and is
//! kept only as the negative control for stability tests.
//!
//! Everything applies matrix-free: one shared L_{∞,h} reduction per apply,
//! exploiting the rank-one coupling. In the Laplacian eigenbasis the system
//! decouples into an M×M block per spatial eigenvalue, which yields the
//! constant-forcing Duhamel closed form U(t) = A⁻¹(e^{At}-I)F used as the
//! reference oracle.

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::grid::LaplacianOperator;
use crate::kernel::PartialFractionExpansion;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Which lifted coupling the system carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// E_ω ⊗ L_{∞,h}: symmetric, stable.
    Stable,
    /// C ⊗ L_{∞,h} with C = a bᵀ: the unstable pre-transform control.
    UnstableControl,
}

pub struct LiftedSystem {
    pf: PartialFractionExpansion,
    lap: LaplacianOperator,
    u0: DVector<f64>,
    coupling: Coupling,
    forcing: DVector<f64>,
}

/// Per-spatial-eigenvalue diagonalization of the stable system: for each
/// spatial eigenvalue ℓ_s the M×M block A_s = -Λ + ℓ_{∞,s} E_ω with
/// A_s = Q_s diag(rates_s) Q_sᵀ and forcing Q_sᵀ F_s.
pub struct SpectralChannels {
    pub m: usize,
    pub n_d: usize,
    /// ℓ_{∞,s} = ℓ_s / (1 - ω_∞ ℓ_s) per spatial eigenvalue.
    pub linf: Vec<f64>,
    pub u0_hat: DVector<f64>,
    pub rates: Vec<DVector<f64>>,
    pub bases: Vec<DMatrix<f64>>,
    pub f_tilde: Vec<DVector<f64>>,
}

impl LiftedSystem {
    /// Assemble the stable E_ω-form with U(0) = 0 and F = ω^{1/2} ⊗ L_{∞,h}u_0.
    pub fn assemble(
        pf: PartialFractionExpansion,
        lap: LaplacianOperator,
        u0: DVector<f64>,
    ) -> Result<Self> {
        Self::assemble_with(pf, lap, u0, Coupling::Stable)
    }

    /// Assemble the unstable C-form; used only as the negative control.
    pub fn assemble_unstable_control(
        pf: PartialFractionExpansion,
        lap: LaplacianOperator,
        u0: DVector<f64>,
    ) -> Result<Self> {
        Self::assemble_with(pf, lap, u0, Coupling::UnstableControl)
    }

    fn assemble_with(
        pf: PartialFractionExpansion,
        lap: LaplacianOperator,
        u0: DVector<f64>,
        coupling: Coupling,
    ) -> Result<Self> {
        if pf.m() == 0 {
            return Err(Error::InvalidInput("kernel expansion is empty".into()));
        }
        let n_d = lap.grid().n_interior();
        if u0.len() != n_d {
            return Err(Error::DimensionMismatch {
                expected: n_d,
                got: u0.len(),
            });
        }
        let g = lap.linf_apply(pf.omega_inf, &u0)?;
        let m = pf.m();
        let mut forcing = DVector::zeros(m * n_d);
        for (k, coeff) in block_coefficients(&pf, coupling).iter().enumerate() {
            for j in 0..n_d {
                forcing[k * n_d + j] = coeff * g[j];
            }
        }
        Ok(LiftedSystem {
            pf,
            lap,
            u0,
            coupling,
            forcing,
        })
    }

    pub fn pf(&self) -> &PartialFractionExpansion {
        &self.pf
    }

    pub fn lap(&self) -> &LaplacianOperator {
        &self.lap
    }

    pub fn u0(&self) -> &DVector<f64> {
        &self.u0
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn m(&self) -> usize {
        self.pf.m()
    }

    pub fn n_d(&self) -> usize {
        self.lap.grid().n_interior()
    }

    pub fn dim(&self) -> usize {
        self.m() * self.n_d()
    }

    /// The constant forcing vector F (length M·N_d, block k major).
    pub fn forcing(&self) -> &DVector<f64> {
        &self.forcing
    }

    /// Matrix-free A·u with one shared L_{∞,h} reduction.
    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let (m, n_d) = (self.m(), self.n_d());
        if u.len() != m * n_d {
            return Err(Error::DimensionMismatch {
                expected: m * n_d,
                got: u.len(),
            });
        }
        let reduce = reduction_coefficients(&self.pf, self.coupling);
        let mut shared = DVector::zeros(n_d);
        for k in 0..m {
            for j in 0..n_d {
                shared[j] += reduce[k] * u[k * n_d + j];
            }
        }
        let t = self.lap.linf_apply(self.pf.omega_inf, &shared)?;
        let spread = block_coefficients(&self.pf, self.coupling);
        let mut out = DVector::zeros(m * n_d);
        for k in 0..m {
            let lam = self.pf.poles[k];
            for j in 0..n_d {
                out[k * n_d + j] = -lam * u[k * n_d + j] + spread[k] * t[j];
            }
        }
        Ok(out)
    }

    /// Dense assembly of A for eigen-analysis; refuses above `cap` unknowns.
    pub fn dense_matrix(&self, cap: usize) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > cap {
            return Err(Error::DenseCapExceeded { size: dim, cap });
        }
        let mut a = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = 1.0;
            a.set_column(j, &self.apply(&e)?);
        }
        Ok(a)
    }

    /// Extreme eigenvalues of (A + Aᵀ)/2 via a dense symmetric eigensolve.
    pub fn symmetric_part_extreme_eigs(&self, cap: usize) -> Result<(f64, f64)> {
        let a = self.dense_matrix(cap)?;
        let sym = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((min, max))
    }

    /// Diagonalize the stable system per spatial eigenvalue.
    pub fn spectral_channels(&self) -> Result<SpectralChannels> {
        if self.coupling != Coupling::Stable {
            return Err(Error::InvalidInput(
                "spectral channels exist only for the stable E_ω form".into(),
            ));
        }
        let m = self.m();
        let n_d = self.n_d();
        let omega_inf = self.pf.omega_inf;
        let sq: Vec<f64> = self.pf.weights.iter().map(|w| w.sqrt()).collect();
        let ells = self.lap.eigenvalue_sums();
        let u0_hat = self.lap.sine_transform(&self.u0)?;
        let mut linf = Vec::with_capacity(n_d);
        let mut rates = Vec::with_capacity(n_d);
        let mut bases = Vec::with_capacity(n_d);
        let mut f_tilde = Vec::with_capacity(n_d);
        for (s, &ell) in ells.iter().enumerate() {
            let li = ell / (1.0 - omega_inf * ell);
            linf.push(li);
            let mut a = DMatrix::zeros(m, m);
            for k in 0..m {
                for i in 0..m {
                    a[(k, i)] = li * sq[k] * sq[i];
                }
                a[(k, k)] -= self.pf.poles[k];
            }
            let eig = SymmetricEigen::new(a);
            let f_s = DVector::from_fn(m, |k, _| sq[k] * li * u0_hat[s]);
            f_tilde.push(eig.eigenvectors.transpose() * f_s);
            rates.push(eig.eigenvalues);
            bases.push(eig.eigenvectors);
        }
        Ok(SpectralChannels {
            m,
            n_d,
            linf,
            u0_hat,
            rates,
            bases,
            f_tilde,
        })
    }

    /// Duhamel closed form U(t) = A⁻¹(e^{At} - I)F for the constant-forcing
    /// system; blockwise in the Laplacian eigenbasis for the stable form,
    /// dense matrix exponential for the control form.
    pub fn reference_solve(&self, t: f64) -> Result<DVector<f64>> {
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("time must be >= 0, got {t}")));
        }
        let (m, n_d) = (self.m(), self.n_d());
        if t == 0.0 {
            return Ok(DVector::zeros(m * n_d));
        }
        match self.coupling {
            Coupling::Stable => {
                let ch = self.spectral_channels()?;
                // spectral coefficients per block k, then one inverse
                // transform per block
                let mut out = DVector::zeros(m * n_d);
                let mut block_hat = vec![DVector::zeros(n_d); m];
                #[allow(clippy::needless_range_loop)] // s pairs channels with block rows
                for s in 0..n_d {
                    let vals = DVector::from_fn(m, |i, _| {
                        phi_expm1(ch.rates[s][i], t) * ch.f_tilde[s][i]
                    });
                    let phys = &ch.bases[s] * vals;
                    for k in 0..m {
                        block_hat[k][s] = phys[k];
                    }
                }
                for (k, hat) in block_hat.iter().enumerate() {
                    let u_k = self.lap.sine_transform(hat)?;
                    for j in 0..n_d {
                        out[k * n_d + j] = u_k[j];
                    }
                }
                Ok(out)
            }
            Coupling::UnstableControl => {
                let a = self.dense_matrix(4096)?;
                let ac = a.map(|x| Complex64::new(x, 0.0));
                let e = expm(&(ac * Complex64::from(t)));
                let n = a.nrows();
                let rhs = (e - DMatrix::<Complex64>::identity(n, n))
                    * self.forcing.map(|x| Complex64::new(x, 0.0));
                let sol = a
                    .map(|x| Complex64::new(x, 0.0))
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| {
                        Error::Internal("singular lifted matrix in Duhamel solve".into())
                    })?;
                Ok(DVector::from_fn(n, |i, _| sol[i].re))
            }
        }
    }
}

/// (e^{at} - 1)/a, continuous through a = 0.
pub(crate) fn phi_expm1(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        t
    } else {
        f64::exp_m1(a * t) / a
    }
}

/// Per-block spread coefficients of the coupling: ω_k^{1/2} (stable) or
/// 1+λ_k (control).
fn block_coefficients(pf: &PartialFractionExpansion, coupling: Coupling) -> Vec<f64> {
    match coupling {
        Coupling::Stable => pf.weights.iter().map(|w| w.sqrt()).collect(),
        Coupling::UnstableControl => pf.poles.iter().map(|l| 1.0 + l).collect(),
    }
}

/// Coefficients of the shared reduction Σ_i c_i u^{(i)}.
fn reduction_coefficients(pf: &PartialFractionExpansion, coupling: Coupling) -> Vec<f64> {
    match coupling {
        Coupling::Stable => pf.weights.iter().map(|w| w.sqrt()).collect(),
        Coupling::UnstableControl => pf
            .weights
            .iter()
            .zip(&pf.poles)
            .map(|(w, l)| w / (1.0 + l))
            .collect(),
    }
}

/// The C-form rank-one factors a_k = 1+λ_k and b_i = ω_i/(1+λ_i).
pub fn rank_one_factors(pf: &PartialFractionExpansion) -> (DVector<f64>, DVector<f64>) {
    let a = DVector::from_fn(pf.m(), |k, _| 1.0 + pf.poles[k]);
    let b = DVector::from_fn(pf.m(), |i, _| pf.weights[i] / (1.0 + pf.poles[i]));
    (a, b)
}

/// Nonzero eigenvalues (aᵀb ± √((aᵀa)(bᵀb)))/2 of (a bᵀ + b aᵀ)/2.
pub fn rank_two_extreme_eigs(a: &DVector<f64>, b: &DVector<f64>) -> (f64, f64) {
    let ab = a.dot(b);
    let root = (a.dot(a) * b.dot(b)).sqrt();
    ((ab - root) / 2.0, (ab + root) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use approx::assert_abs_diff_eq;

    fn small_pf(m: usize) -> PartialFractionExpansion {
        let poles: Vec<f64> = (0..m).map(|k| 0.5 * 3.0f64.powi(k as i32)).collect();
        let weights: Vec<f64> = (0..m).map(|k| 0.8 + 0.35 * k as f64).collect();
        PartialFractionExpansion::direct(0.5, poles, weights, 0.02, (1.0, 1000.0)).unwrap()
    }

    fn sine_u0(n_x: usize) -> DVector<f64> {
        DVector::from_fn(n_x - 1, |j, _| {
            ((j + 1) as f64 * std::f64::consts::PI / n_x as f64).sin()
        })
    }

    fn system(m: usize, n_x: usize) -> LiftedSystem {
        let lap = LaplacianOperator::new(SpatialGrid::new(1, n_x).unwrap());
        LiftedSystem::assemble(small_pf(m), lap, sine_u0(n_x)).unwrap()
    }

    #[test]
    fn scalar_reduction() {
        // M=1, N_d=1: A = -λ + ω ℓ_inf, F = ω^{1/2} ℓ_inf u0
        let pf =
            PartialFractionExpansion::direct(0.5, vec![1.0], vec![1.0], 0.0, (1.0, 10.0)).unwrap();
        let lap = LaplacianOperator::new(SpatialGrid::new(1, 2).unwrap());
        let sys = LiftedSystem::assemble(pf, lap, DVector::from_element(1, 2.0)).unwrap();
        // ℓ = -8, ω_inf = 0 -> ℓ_inf = -8; A = -1 + (-8) = -9; F = -16
        let a = sys.apply(&DVector::from_element(1, 1.0)).unwrap();
        assert_abs_diff_eq!(a[0], -9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.forcing()[0], -16.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_initial_data_gives_zero_solution() {
        let lap = LaplacianOperator::new(SpatialGrid::new(1, 8).unwrap());
        let sys = LiftedSystem::assemble(small_pf(3), lap, DVector::zeros(7)).unwrap();
        assert_eq!(sys.forcing().amax(), 0.0);
        let u = sys.reference_solve(1.0).unwrap();
        assert_eq!(u.amax(), 0.0);
    }

    #[test]
    fn matrix_free_apply_matches_dense_assembly() {
        for coupling in [Coupling::Stable, Coupling::UnstableControl] {
            let lap = LaplacianOperator::new(SpatialGrid::new(1, 4).unwrap());
            let sys =
                LiftedSystem::assemble_with(small_pf(2), lap, sine_u0(4), coupling).unwrap();
            let a = sys.dense_matrix(64).unwrap();
            let v = DVector::from_fn(6, |i, _| ((i * 7 + 2) % 5) as f64 - 2.0);
            let want = &a * &v;
            let got = sys.apply(&v).unwrap();
            assert!((got - want).norm() <= 1e-11 * a.norm() * v.norm().max(1.0));
        }
    }

    #[test]
    fn block_structure_of_apply() {
        // applying A to e_k ⊗ v gives -λ_k v on block k plus
        // ω_k^{1/2} ω_i^{1/2} L_inf v on every block i
        let sys = system(3, 6);
        let n_d = sys.n_d();
        let v = sine_u0(6);
        let k = 1usize;
        let mut e = DVector::zeros(sys.dim());
        for j in 0..n_d {
            e[k * n_d + j] = v[j];
        }
        let out = sys.apply(&e).unwrap();
        let linf_v = sys.lap().linf_apply(sys.pf().omega_inf, &v).unwrap();
        let sq: Vec<f64> = sys.pf().weights.iter().map(|w| w.sqrt()).collect();
        for i in 0..3 {
            for j in 0..n_d {
                let mut want = sq[i] * sq[k] * linf_v[j];
                if i == k {
                    want -= sys.pf().poles[k] * v[j];
                }
                assert_abs_diff_eq!(out[i * n_d + j], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn stable_form_symmetric_part_bounded() {
        let sys = system(4, 8);
        let (_, max) = sys.symmetric_part_extreme_eigs(4096).unwrap();
        let lam_min = sys.pf().lambda_min();
        assert!(
            max <= -lam_min + 1e-10,
            "stable form max sym eig {max} above -λ_min {}",
            -lam_min
        );
    }

    #[test]
    fn control_form_has_positive_eigenvalue_matching_closed_form() {
        let pf = small_pf(4);
        let lap = LaplacianOperator::new(SpatialGrid::new(1, 8).unwrap());
        let sys = LiftedSystem::assemble_unstable_control(pf.clone(), lap, sine_u0(8)).unwrap();
        let (_, max) = sys.symmetric_part_extreme_eigs(4096).unwrap();
        assert!(max > 0.0, "control form should be unstable, max = {max}");
        // pure rank-2 block: eigenvalues of (a bᵀ + b aᵀ)/2
        let (a, b) = rank_one_factors(&pf);
        let (lo, hi) = rank_two_extreme_eigs(&a, &b);
        let m = pf.m();
        let mut d = DMatrix::zeros(m, m);
        for k in 0..m {
            for i in 0..m {
                d[(k, i)] = 0.5 * (a[k] * b[i] + b[k] * a[i]);
            }
        }
        let eig = SymmetricEigen::new(d);
        let dmax = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(dmax, hi, epsilon = 1e-10 * hi.abs());
        assert_abs_diff_eq!(dmin, lo, epsilon = 1e-10 * hi.abs());
        assert!(lo < 0.0 && hi > 0.0);
    }

    #[test]
    fn scalar_duhamel_closed_form() {
        let pf =
            PartialFractionExpansion::direct(0.5, vec![1.0], vec![1.0], 0.0, (1.0, 10.0)).unwrap();
        let lap = LaplacianOperator::new(SpatialGrid::new(1, 2).unwrap());
        let sys = LiftedSystem::assemble(pf, lap, DVector::from_element(1, 2.0)).unwrap();
        // a = -9, F = -16: U(t) = (e^{at}-1)/a * F
        let t = 0.7;
        let want = f64::exp_m1(-9.0 * t) / -9.0 * -16.0;
        let got = sys.reference_solve(t).unwrap();
        assert_abs_diff_eq!(got[0], want, epsilon = 1e-12 * want.abs());
        assert_eq!(sys.reference_solve(0.0).unwrap().amax(), 0.0);
    }

    #[test]
    fn reference_solve_matches_time_stepping_oracle() {
        // independent oracle: RK4 with tiny steps on the matrix-free apply
        let sys = system(4, 8);
        let t_end = 1.0;
        let n_steps = 4000;
        let dt = t_end / n_steps as f64;
        let mut u = DVector::zeros(sys.dim());
        let f = sys.forcing().clone();
        for _ in 0..n_steps {
            let k1 = sys.apply(&u).unwrap() + &f;
            let k2 = sys.apply(&(&u + 0.5 * dt * &k1)).unwrap() + &f;
            let k3 = sys.apply(&(&u + 0.5 * dt * &k2)).unwrap() + &f;
            let k4 = sys.apply(&(&u + dt * &k3)).unwrap() + &f;
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let want = sys.reference_solve(t_end).unwrap();
        assert!(
            (&u - &want).norm() <= 1e-9 * want.norm().max(1.0),
            "RK4 oracle deviates by {}",
            (&u - &want).norm()
        );
    }

    #[test]
    fn control_and_stable_forms_recover_identical_solutions() {
        // the change of variables is a similarity: recovered u_h agrees
        let pf = small_pf(3);
        let n_x = 6;
        let t = 0.5;
        let lap_a = LaplacianOperator::new(SpatialGrid::new(1, n_x).unwrap());
        let lap_b = LaplacianOperator::new(SpatialGrid::new(1, n_x).unwrap());
        let stable = LiftedSystem::assemble(pf.clone(), lap_a, sine_u0(n_x)).unwrap();
        let control =
            LiftedSystem::assemble_unstable_control(pf.clone(), lap_b, sine_u0(n_x)).unwrap();
        let n_d = stable.n_d();
        let u_stable = stable.reference_solve(t).unwrap();
        let u_control = control.reference_solve(t).unwrap();
        // stable recovery: s = u0 + Σ ω_k^{1/2} U_k; control: s = u0 + Σ ω_i/(1+λ_i) ũ_i
        let mut s_stable = stable.u0().clone();
        let mut s_control = stable.u0().clone();
        for k in 0..pf.m() {
            let wk_s = pf.weights[k].sqrt();
            let wk_c = pf.weights[k] / (1.0 + pf.poles[k]);
            for j in 0..n_d {
                s_stable[j] += wk_s * u_stable[k * n_d + j];
                s_control[j] += wk_c * u_control[k * n_d + j];
            }
        }
        let ua = stable
            .lap()
            .resolvent_apply(pf.omega_inf, &s_stable)
            .unwrap();
        let ub = stable
            .lap()
            .resolvent_apply(pf.omega_inf, &s_control)
            .unwrap();
        assert!(
            (&ua - &ub).norm() <= 1e-8 * ua.norm(),
            "forms disagree by {}",
            (&ua - &ub).norm()
        );
    }

    #[test]
    fn dimension_checks() {
        let lap = LaplacianOperator::new(SpatialGrid::new(1, 8).unwrap());
        assert!(LiftedSystem::assemble(small_pf(2), lap, DVector::zeros(5)).is_err());
        let sys = system(2, 8);
        assert!(sys.apply(&DVector::zeros(3)).is_err());
        assert!(sys.dense_matrix(4).is_err());
    }
}
