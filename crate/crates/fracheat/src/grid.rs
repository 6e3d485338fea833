//! Finite-difference Laplacian on (0,1)^d with homogeneous Dirichlet data.
//!
//! The 1D operator is the tridiagonal stencil (1, -2, 1)/h² on the N_x - 1
//! interior points; in d dimensions it becomes the Kronecker sum applied
//! axis by axis, never materialized. The eigenbasis is the orthonormal
//! discrete sine transform with eigenvalues
//!
//!   d_j = -(4/h²) sin²(jπ / (2 N_x)),  j = 1..N_x-1,
//!
//! which powers resolvent applications (I - ω_∞ L)⁻¹ by componentwise
//! division in the transformed basis. All divisors exceed 1 because the
//! spectrum is strictly negative.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Uniform tensor grid on (0,1)^d: N_x cells per axis, h = 1/N_x,
/// interior points x_j = j h for j = 1..N_x-1, lexicographic with axis 0
/// fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialGrid {
    d: usize,
    n_x: usize,
}

impl SpatialGrid {
    pub fn new(d: usize, n_x: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if n_x < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 cells per axis, got {n_x}"
            )));
        }
        Ok(SpatialGrid { d, n_x })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn interior_per_axis(&self) -> usize {
        self.n_x - 1
    }

    pub fn n_interior(&self) -> usize {
        (self.n_x - 1).pow(self.d as u32)
    }

    /// Coordinates of the interior point with the given lexicographic index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let n = self.interior_per_axis();
        let h = self.h();
        let mut idx = flat;
        (0..self.d)
            .map(|_| {
                let j = idx % n + 1;
                idx /= n;
                j as f64 * h
            })
            .collect()
    }
}

/// Dense 1D second-difference matrix, (N_x-1)×(N_x-1).
pub fn laplacian_1d(n_x: usize) -> Result<DMatrix<f64>> {
    if n_x < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 cells, got {n_x}"
        )));
    }
    let n = n_x - 1;
    let h2 = (n_x as f64) * (n_x as f64);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = -2.0 * h2;
        if i + 1 < n {
            m[(i, i + 1)] = h2;
            m[(i + 1, i)] = h2;
        }
    }
    Ok(m)
}

/// Matrix-free d-dimensional Laplacian with its sine-spectral factorization.
pub struct LaplacianOperator {
    grid: SpatialGrid,
    eigs_1d: DVector<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl LaplacianOperator {
    pub fn new(grid: SpatialGrid) -> Self {
        let n_x = grid.n_x();
        let h2 = (n_x as f64) * (n_x as f64);
        let eigs_1d = DVector::from_fn(n_x - 1, |j, _| {
            let s = ((j + 1) as f64 * std::f64::consts::PI / (2.0 * n_x as f64)).sin();
            -4.0 * h2 * s * s
        });
        let fft = FftPlanner::new().plan_fft_forward(2 * n_x);
        LaplacianOperator { grid, eigs_1d, fft }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn eigenvalues_1d(&self) -> &DVector<f64> {
        &self.eigs_1d
    }

    /// Full Kronecker-sum spectrum in lexicographic order (axis 0 fastest).
    pub fn eigenvalue_sums(&self) -> Vec<f64> {
        let n = self.grid.interior_per_axis();
        let d = self.grid.dim();
        let total = self.grid.n_interior();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut idx = flat;
            let mut sum = 0.0;
            for _ in 0..d {
                sum += self.eigs_1d[idx % n];
                idx /= n;
            }
            out.push(sum);
        }
        out
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.grid.n_interior() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n_interior(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Orthonormal DST-I along one axis, via a complex FFT of length 2 N_x
    /// on the odd extension. The transform is its own inverse.
    fn dst_axis(&self, v: &mut DVector<f64>, axis: usize) {
        let n = self.grid.interior_per_axis();
        let n_x = self.grid.n_x();
        let d = self.grid.dim();
        let stride = n.pow(axis as u32);
        let outer_count = n.pow((d - 1 - axis) as u32);
        let scale = (2.0 / n_x as f64).sqrt() * 0.5;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n_x];
        for outer in 0..outer_count {
            for inner in 0..stride {
                let base = outer * stride * n + inner;
                for (t, b) in buf.iter_mut().enumerate() {
                    *b = Complex64::new(0.0, 0.0);
                    if t >= 1 && t <= n {
                        b.re = v[base + (t - 1) * stride];
                    } else if t > n_x {
                        b.re = -v[base + (2 * n_x - t - 1) * stride];
                    }
                }
                self.fft.process(&mut buf);
                for t in 0..n {
                    // DST-I coefficient k = t+1 is -Im(FFT_k)/2
                    v[base + t * stride] = -buf[t + 1].im * scale;
                }
            }
        }
    }

    /// Full d-dimensional orthonormal sine transform (self-inverse).
    pub fn sine_transform(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v)?;
        let mut out = v.clone();
        for axis in 0..self.grid.dim() {
            self.dst_axis(&mut out, axis);
        }
        Ok(out)
    }

    /// L_{h,d} v computed stencil-wise along each tensor axis.
    pub fn kron_sum_apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v)?;
        let n = self.grid.interior_per_axis();
        let d = self.grid.dim();
        let h2 = (self.grid.n_x() as f64).powi(2);
        let mut out = DVector::zeros(v.len());
        for axis in 0..d {
            let stride = n.pow(axis as u32);
            let outer_count = n.pow((d - 1 - axis) as u32);
            for outer in 0..outer_count {
                for inner in 0..stride {
                    let base = outer * stride * n + inner;
                    for t in 0..n {
                        let c = v[base + t * stride];
                        let l = if t > 0 { v[base + (t - 1) * stride] } else { 0.0 };
                        let r = if t + 1 < n { v[base + (t + 1) * stride] } else { 0.0 };
                        out[base + t * stride] += (l - 2.0 * c + r) * h2;
                    }
                }
            }
        }
        Ok(out)
    }

    fn spectral_scale(
        &self,
        omega_inf: f64,
        v: &DVector<f64>,
        f: impl Fn(f64) -> f64,
    ) -> Result<DVector<f64>> {
        if omega_inf < 0.0 {
            return Err(Error::InvalidInput(format!(
                "omega_inf must be >= 0, got {omega_inf}"
            )));
        }
        self.check_len(v)?;
        let n = self.grid.interior_per_axis();
        let d = self.grid.dim();
        let mut hat = self.sine_transform(v)?;
        for (flat, x) in hat.iter_mut().enumerate() {
            let mut idx = flat;
            let mut ell = 0.0;
            for _ in 0..d {
                ell += self.eigs_1d[idx % n];
                idx /= n;
            }
            *x *= f(ell);
        }
        self.sine_transform(&hat)
    }

    /// (I - ω_∞ L_{h,d})⁻¹ v via the sine-spectral factorization.
    pub fn resolvent_apply(&self, omega_inf: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.spectral_scale(omega_inf, v, |ell| 1.0 / (1.0 - omega_inf * ell))
    }

    /// L_{∞,h} v = L_{h,d} (I - ω_∞ L_{h,d})⁻¹ v.
    pub fn linf_apply(&self, omega_inf: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.spectral_scale(omega_inf, v, |ell| ell / (1.0 - omega_inf * ell))
    }

    /// Dense assembly of L_{h,d}, for oracle tests on small grids.
    pub fn dense_matrix(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n_d = self.grid.n_interior();
        if n_d > cap {
            return Err(Error::DenseCapExceeded { size: n_d, cap });
        }
        let mut m = DMatrix::zeros(n_d, n_d);
        for j in 0..n_d {
            let mut e = DVector::zeros(n_d);
            e[j] = 1.0;
            let col = self.kron_sum_apply(&e)?;
            m.set_column(j, &col);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::SymmetricEigen;

    #[test]
    fn laplacian_1d_nx4_matches_stencil() {
        let m = laplacian_1d(4).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_abs_diff_eq!(m[(0, 0)], -32.0);
        assert_abs_diff_eq!(m[(0, 1)], 16.0);
        assert_abs_diff_eq!(m[(1, 0)], 16.0);
        assert_abs_diff_eq!(m[(0, 2)], 0.0);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn laplacian_1d_single_interior_point() {
        let m = laplacian_1d(2).unwrap();
        assert_eq!(m.nrows(), 1);
        assert_abs_diff_eq!(m[(0, 0)], -8.0);
        assert!(laplacian_1d(1).is_err());
    }

    #[test]
    fn eigenvalues_match_dense_eigensolve() {
        for n_x in [2usize, 4, 9] {
            let op = LaplacianOperator::new(SpatialGrid::new(1, n_x).unwrap());
            let dense = laplacian_1d(n_x).unwrap();
            let mut eigs: Vec<f64> = SymmetricEigen::new(dense)
                .eigenvalues
                .iter()
                .copied()
                .collect();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ours: Vec<f64> = op.eigenvalues_1d().iter().copied().collect();
            ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in eigs.iter().zip(&ours) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12 * a.abs().max(1.0));
            }
            assert!(ours.iter().all(|&e| e < 0.0));
        }
    }

    #[test]
    fn sine_transform_is_involution_and_isometry() {
        let op = LaplacianOperator::new(SpatialGrid::new(2, 7).unwrap());
        let v = DVector::from_fn(36, |i, _| ((i * 37 + 11) % 17) as f64 - 8.0);
        let hat = op.sine_transform(&v).unwrap();
        let back = op.sine_transform(&hat).unwrap();
        assert!((&back - &v).norm() <= 1e-12 * v.norm());
        assert!((hat.norm() - v.norm()).abs() <= 1e-12 * v.norm());
    }

    #[test]
    fn kron_sum_apply_matches_dense_1d() {
        let op = LaplacianOperator::new(SpatialGrid::new(1, 9).unwrap());
        let dense = laplacian_1d(9).unwrap();
        let v = DVector::from_fn(8, |i, _| (i as f64 * 0.7).sin());
        let got = op.kron_sum_apply(&v).unwrap();
        let want = &dense * &v;
        assert!((got - want).norm() <= 1e-12 * v.norm() * 81.0);
    }

    #[test]
    fn kron_sum_single_point_2d() {
        // d=2, n_x=2: one interior point, L = -8 + -8 = -16
        let op = LaplacianOperator::new(SpatialGrid::new(2, 2).unwrap());
        let got = op.kron_sum_apply(&DVector::from_element(1, 1.0)).unwrap();
        assert_abs_diff_eq!(got[0], -16.0);
    }

    #[test]
    fn sine_product_is_eigenvector() {
        let grid = SpatialGrid::new(2, 8).unwrap();
        let op = LaplacianOperator::new(grid);
        let n = 7;
        let v = DVector::from_fn(n * n, |flat, _| {
            let (i, j) = (flat % n, flat / n);
            ((i + 1) as f64 * std::f64::consts::PI / 8.0).sin()
                * ((j + 1) as f64 * std::f64::consts::PI / 8.0).sin()
        });
        let got = op.kron_sum_apply(&v).unwrap();
        let lam = 2.0 * op.eigenvalues_1d()[0];
        assert!((got - lam * &v).norm() <= 1e-10 * v.norm() * lam.abs());
    }

    #[test]
    fn resolvent_identity_and_scalar_case() {
        let op = LaplacianOperator::new(SpatialGrid::new(1, 2).unwrap());
        let v = DVector::from_element(1, 9.0);
        let same = op.resolvent_apply(0.0, &v).unwrap();
        assert_abs_diff_eq!(same[0], 9.0, epsilon = 1e-13);
        let scaled = op.resolvent_apply(1.0, &v).unwrap();
        assert_abs_diff_eq!(scaled[0], 1.0, epsilon = 1e-13);
        assert!(op.resolvent_apply(-0.5, &v).is_err());
    }

    #[test]
    fn resolvent_matches_dense_solve() {
        let op = LaplacianOperator::new(SpatialGrid::new(2, 8).unwrap());
        let n_d = 49;
        let v = DVector::from_fn(n_d, |i, _| ((i * 29 + 3) % 13) as f64 - 6.0);
        let omega = 0.37;
        let got = op.resolvent_apply(omega, &v).unwrap();
        let dense = op.dense_matrix(1 << 12).unwrap();
        let a = DMatrix::identity(n_d, n_d) - omega * dense;
        let want = a.lu().solve(&v).unwrap();
        assert!((got - want).norm() <= 1e-10 * v.norm());
    }

    #[test]
    fn resolvent_is_contraction() {
        let op = LaplacianOperator::new(SpatialGrid::new(2, 6).unwrap());
        for seed in 0..5u64 {
            let v = DVector::from_fn(25, |i, _| {
                (((i as u64 + 1) * (seed * 7 + 3)) % 23) as f64 - 11.0
            });
            let r = op.resolvent_apply(0.8, &v).unwrap();
            assert!(r.norm() <= v.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn linf_norm_bounded_by_inverse_omega() {
        // ||L_inf|| <= 1/omega_inf on the computed spectrum
        let op = LaplacianOperator::new(SpatialGrid::new(1, 16).unwrap());
        let omega = 0.05;
        let bound = 1.0 / omega;
        for ell in op.eigenvalue_sums() {
            let linf = ell / (1.0 - omega * ell);
            assert!(linf.abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn negative_definiteness_bound() {
        let op = LaplacianOperator::new(SpatialGrid::new(3, 5).unwrap());
        let max = op
            .eigenvalue_sums()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let n_x = 5.0f64;
        let bound = -4.0 * 3.0 * n_x * n_x * (std::f64::consts::PI / (2.0 * n_x)).sin().powi(2);
        assert!(max <= bound + 1e-10);
        assert!(max < 0.0);
    }

    #[test]
    fn kron_sum_matches_dense_kron_2d() {
        let op = LaplacianOperator::new(SpatialGrid::new(2, 5).unwrap());
        let l1 = laplacian_1d(5).unwrap();
        let id = DMatrix::<f64>::identity(4, 4);
        let dense = l1.kronecker(&id) + id.kronecker(&l1);
        // lexicographic axis-0 fastest: kron(A, B) acts as A on the slow
        // index; axis 0 fast means L ⊗ I has L on axis 1
        let ours = op.dense_matrix(64).unwrap();
        assert!((dense - ours).norm() <= 1e-9);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn resolvent_contracts_random_vectors(
            seed in 0u64..1_000_000,
            omega in 0.0f64..2.0,
            n_x in 3usize..12,
        ) {
            let op = LaplacianOperator::new(SpatialGrid::new(2, n_x).unwrap());
            let n = (n_x - 1) * (n_x - 1);
            let v = DVector::from_fn(n, |i, _| {
                let x = (i as u64 + 1).wrapping_mul(seed.wrapping_add(7919));
                ((x % 1000) as f64) / 500.0 - 1.0
            });
            let r = op.resolvent_apply(omega, &v).unwrap();
            prop_assert!(r.norm() <= v.norm() * (1.0 + 1e-12));
        }

        #[test]
        fn matrix_free_matches_dense_on_random_vectors(
            seed in 0u64..1_000_000,
            n_x in 3usize..10,
        ) {
            let op = LaplacianOperator::new(SpatialGrid::new(1, n_x).unwrap());
            let dense = laplacian_1d(n_x).unwrap();
            let n = n_x - 1;
            let v = DVector::from_fn(n, |i, _| {
                let x = (i as u64 + 3).wrapping_mul(seed.wrapping_add(31));
                ((x % 997) as f64) / 250.0 - 2.0
            });
            let got = op.kron_sum_apply(&v).unwrap();
            let want = &dense * &v;
            prop_assert!((got - want).norm() <= 1e-11 * dense.norm() * v.norm().max(1.0));
        }
    }
}
