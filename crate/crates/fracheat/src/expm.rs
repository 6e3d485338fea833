//! Complex dense matrix exponential by scaling and squaring with Padé
//! approximants, following Higham's degree-selection thresholds.

use nalgebra::DMatrix;
use num_complex::Complex64;

type CMat = DMatrix<Complex64>;

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_uv(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let a2 = a * a;
    let mut even = &id * Complex64::from(b[0]);
    let mut odd = &id * Complex64::from(b[1]);
    let mut p = id.clone();
    for k in (2..b.len()).step_by(2) {
        p = &p * &a2;
        even += &p * Complex64::from(b[k]);
        if k + 1 < b.len() {
            odd += &p * Complex64::from(b[k + 1]);
        }
    }
    (a * odd, even)
}

fn pade13_uv(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * Complex64::from(B[13]) + &a4 * Complex64::from(B[11]) + &a2 * Complex64::from(B[9]);
    let u = a * (&a6 * u_inner
        + &a6 * Complex64::from(B[7])
        + &a4 * Complex64::from(B[5])
        + &a2 * Complex64::from(B[3])
        + &id * Complex64::from(B[1]));
    let v_inner = &a6 * Complex64::from(B[12]) + &a4 * Complex64::from(B[10]) + &a2 * Complex64::from(B[8]);
    let v = &a6 * v_inner
        + &a6 * Complex64::from(B[6])
        + &a4 * Complex64::from(B[4])
        + &a2 * Complex64::from(B[2])
        + &id * Complex64::from(B[0]);
    (u, v)
}

/// exp(A) for a square complex matrix.
pub fn expm(a: &CMat) -> CMat {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
    const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
    const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
    const B9: [f64; 10] = [
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let norm = one_norm(a);
    let (u, v, squarings) = if norm < 1.495585217958292e-2 {
        let (u, v) = pade_uv(a, &B3);
        (u, v, 0)
    } else if norm < 2.53939833006323e-1 {
        let (u, v) = pade_uv(a, &B5);
        (u, v, 0)
    } else if norm < 9.504178996162932e-1 {
        let (u, v) = pade_uv(a, &B7);
        (u, v, 0)
    } else if norm < 2.097847961257068 {
        let (u, v) = pade_uv(a, &B9);
        (u, v, 0)
    } else {
        let squarings = ((norm / THETA13).log2().ceil()).max(0.0) as u32;
        let scaled = a * Complex64::from(f64::powi(0.5, squarings as i32));
        let (u, v) = pade13_uv(&scaled);
        (u, v, squarings)
    };
    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is singular; matrix norm too extreme for expm");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-2.5, 0.0),
            c(0.0, 3.0),
        ]));
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].re, 1.0f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[(1, 1)].re, (-2.5f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(2, 2)].re, 3.0f64.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(2, 2)].im, 3.0f64.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn nilpotent_block() {
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        assert_abs_diff_eq!(e[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(1, 1)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn skew_hermitian_gives_unitary() {
        // -i t H for Hermitian H: result must be unitary
        let n = 6;
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let re = ((i * 5 + j * 3) % 7) as f64 - 3.0;
                let im = ((i * 2 + j * 11) % 5) as f64 - 2.0;
                h[(i, j)] = c(re, im);
            }
        }
        let herm = (&h + &h.adjoint()) * c(0.5, 0.0);
        let a = &herm * c(0.0, -8.0);
        let u = expm(&a);
        let err = (&u.adjoint() * &u - CMat::identity(n, n)).norm();
        assert!(err <= 1e-11, "unitarity defect {err}");
    }

    #[test]
    fn matches_eigendecomposition_for_symmetric() {
        let n = 5;
        let mut s = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = (((i + 1) * (j + 2) * 13) % 9) as f64 - 4.0;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(s.clone());
        let mut want = nalgebra::DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let vk = eig.eigenvectors.column(k);
            want += eig.eigenvalues[k].exp() * &vk * vk.transpose();
        }
        let a = s.map(|x| c(x, 0.0));
        let got = expm(&a);
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(got[(i, j)].re, want[(i, j)], epsilon = 1e-9);
                assert_abs_diff_eq!(got[(i, j)].im, 0.0, epsilon = 1e-11);
            }
        }
    }
}
