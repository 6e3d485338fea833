//! Rational approximation of the fractional kernel λ^{-α}.
//!
//! A from-scratch AAA fit (greedy support-point selection, Loewner
//! least-squares weight solve by SVD) produces a barycentric rational on
//! [λ_lo, λ_hi] = [1/T, 1/τ]; the generalized eigenvalue problem of the
//! barycentric denominator converts it to partial-fraction form
//!
//!   λ^{-α} ≈ Σ_k ω_k / (λ + λ_k) + ω_∞,   λ_k, ω_k, ω_∞ >= 0,
//!
//! whose poles and residues parametrize the dimension-lifted ODE system.
//! Residuals are measured relative to |f| pointwise so that the fit meets
//! a relative tolerance across the whole (four-decade) interval rather
//! than only near its left end.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Barycentric rational r(z) = Σ w_j f_j/(z-z_j) / Σ w_j/(z-z_j).
#[derive(Debug, Clone)]
pub struct BarycentricRational {
    support: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl BarycentricRational {
    pub fn new(support: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != values.len() || support.len() != weights.len() {
            return Err(Error::InvalidInput(
                "support, values, weights must have equal nonzero length".into(),
            ));
        }
        for (i, zi) in support.iter().enumerate() {
            for zj in support.iter().skip(i + 1) {
                if zi == zj {
                    return Err(Error::InvalidInput(format!(
                        "support points must be distinct (found duplicate {zi})"
                    )));
                }
            }
        }
        Ok(BarycentricRational {
            support,
            values,
            weights,
        })
    }

    pub fn support_points(&self) -> &[f64] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.support.len() - 1
    }

    pub fn eval(&self, z: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&zj, &fj), &wj) in self
            .support
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
        {
            let d = z - zj;
            if d == 0.0 {
                return fj; // removable singularity: interpolation point
            }
            let c = wj / d;
            num += c * fj;
            den += c;
        }
        num / den
    }

    /// Value of the rational at infinity, Σ w_j f_j / Σ w_j.
    fn value_at_infinity(&self) -> Result<f64> {
        let num: f64 = self.weights.iter().zip(&self.values).map(|(w, f)| w * f).sum();
        let den: f64 = self.weights.iter().sum();
        let scale: f64 = self.weights.iter().map(|w| w.abs()).sum();
        if den.abs() <= 1e-14 * scale {
            return Err(Error::PoleSign(
                "barycentric rational is improper (weights sum to zero)".into(),
            ));
        }
        Ok(num / den)
    }
}

/// Outcome of an AAA fit. `converged` is false when `max_degree` was hit
/// before the tolerance; `achieved_rel_error` then carries the best error.
#[derive(Debug, Clone)]
pub struct AaaFit {
    pub rational: BarycentricRational,
    pub achieved_rel_error: f64,
    pub converged: bool,
    /// Max relative residual after each greedy iteration.
    pub residual_history: Vec<f64>,
}

fn relative_weights(f: &[f64]) -> Vec<f64> {
    let fmax = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let floor = 1e-12 * fmax.max(f64::MIN_POSITIVE);
    f.iter().map(|x| 1.0 / x.abs().max(floor)).collect()
}

/// Solve the Loewner least-squares problem for barycentric weights over the
/// candidate rows not in the support set. Rows are scaled by 1/|f_i|.
fn solve_weights(
    samples: &[(f64, f64)],
    in_support: &[bool],
    support: &[f64],
    values: &[f64],
    rel_w: &[f64],
) -> Result<Vec<f64>> {
    let m = support.len();
    let rows: Vec<usize> = (0..samples.len()).filter(|&i| !in_support[i]).collect();
    if rows.len() < m {
        return Err(Error::NoConvergence(
            "not enough samples left for the Loewner least-squares solve".into(),
        ));
    }
    let mut a = DMatrix::zeros(rows.len(), m);
    for (r, &i) in rows.iter().enumerate() {
        let (zi, fi) = samples[i];
        for j in 0..m {
            a[(r, j)] = rel_w[i] * (fi - values[j]) / (zi - support[j]);
        }
    }
    let svd = a.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD did not return right singular vectors".into()))?;
    let last = vt.nrows() - 1;
    Ok((0..m).map(|j| vt[(last, j)]).collect())
}

/// Greedy AAA fit with relative residuals.
///
/// Each iteration adds the sample of largest relative residual to the
/// support set and re-solves the weights; stops once the residual drops
/// below `tol` or the degree reaches `max_degree`.
pub fn aaa_fit(samples: &[(f64, f64)], tol: f64, max_degree: usize) -> Result<AaaFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be > 0, got {tol}")));
    }
    if max_degree < 1 {
        return Err(Error::InvalidInput("max_degree must be >= 1".into()));
    }
    for (i, (zi, _)) in samples.iter().enumerate() {
        for (zj, _) in samples.iter().skip(i + 1) {
            if zi == zj {
                return Err(Error::InvalidInput(format!(
                    "sample abscissas must be distinct (found duplicate {zi})"
                )));
            }
        }
    }

    let f: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let rel_w = relative_weights(&f);
    let mean = f.iter().sum::<f64>() / f.len() as f64;

    let mut in_support = vec![false; samples.len()];
    let mut support: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = vec![1.0];
    let mut approx: Vec<f64> = vec![mean; samples.len()];
    let mut history = Vec::new();
    let mut best_err = f64::INFINITY;

    for _ in 0..=max_degree {
        // next support point: largest relative residual among candidates
        let mut jbest = None;
        let mut rbest = -1.0;
        for (i, (_, fi)) in samples.iter().enumerate() {
            if in_support[i] {
                continue;
            }
            let r = (fi - approx[i]).abs() * rel_w[i];
            if r > rbest {
                rbest = r;
                jbest = Some(i);
            }
        }
        let j = match jbest {
            Some(j) => j,
            None => break,
        };
        in_support[j] = true;
        support.push(samples[j].0);
        values.push(samples[j].1);

        weights = match solve_weights(samples, &in_support, &support, &values, &rel_w) {
            Ok(w) => w,
            Err(_) => break, // ran out of rows; keep previous fit
        };
        let rational = BarycentricRational {
            support: support.clone(),
            values: values.clone(),
            weights: weights.clone(),
        };
        let mut err = 0.0f64;
        for (i, (zi, fi)) in samples.iter().enumerate() {
            if in_support[i] {
                approx[i] = *fi;
                continue;
            }
            approx[i] = rational.eval(*zi);
            err = err.max((fi - approx[i]).abs() * rel_w[i]);
        }
        history.push(err);
        best_err = best_err.min(err);
        if err <= tol {
            return Ok(AaaFit {
                rational,
                achieved_rel_error: err,
                converged: true,
                residual_history: history,
            });
        }
    }

    let rational = BarycentricRational::new(support, values, weights)?;
    Ok(AaaFit {
        rational,
        achieved_rel_error: best_err,
        converged: false,
        residual_history: history,
    })
}

/// The fitted kernel in pole/residue form with nonnegative parameters.
#[derive(Debug, Clone)]
pub struct PartialFractionExpansion {
    pub alpha: f64,
    /// λ_k >= 0; the rational's poles are at -λ_k.
    pub poles: Vec<f64>,
    /// ω_k >= 0.
    pub weights: Vec<f64>,
    pub omega_inf: f64,
    /// [λ_lo, λ_hi] = [1/T, 1/τ].
    pub interval: (f64, f64),
}

impl PartialFractionExpansion {
    /// Validating constructor for directly specified expansions.
    pub fn direct(
        alpha: f64,
        poles: Vec<f64>,
        weights: Vec<f64>,
        omega_inf: f64,
        interval: (f64, f64),
    ) -> Result<Self> {
        if poles.is_empty() || poles.len() != weights.len() {
            return Err(Error::InvalidInput(
                "poles and weights must have equal nonzero length".into(),
            ));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be in (0,1], got {alpha}"
            )));
        }
        if !(interval.0 > 0.0 && interval.0 < interval.1) {
            return Err(Error::InvalidInput(format!(
                "interval must satisfy 0 < lo < hi, got {interval:?}"
            )));
        }
        if poles.iter().any(|&l| l < 0.0) || weights.iter().any(|&w| w < 0.0) || omega_inf < 0.0 {
            return Err(Error::PoleSign(
                "poles, weights and omega_inf must be nonnegative".into(),
            ));
        }
        Ok(PartialFractionExpansion {
            alpha,
            poles,
            weights,
            omega_inf,
            interval,
        })
    }

    pub fn m(&self) -> usize {
        self.poles.len()
    }

    /// Σ_k ω_k/(λ+λ_k) + ω_∞ for λ > 0.
    pub fn eval_kernel(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel evaluation requires lambda > 0, got {lambda}"
            )));
        }
        let mut s = self.omega_inf;
        for (l, w) in self.poles.iter().zip(&self.weights) {
            s += w / (lambda + l);
        }
        Ok(s)
    }

    /// Max relative deviation from λ^{-α} over log-spaced probes.
    pub fn kernel_max_error(&self, n_probe: usize) -> Result<f64> {
        if n_probe < 2 {
            return Err(Error::InvalidInput("need at least 2 probe points".into()));
        }
        let (lo, hi) = self.interval;
        let ratio = (hi / lo).ln();
        let mut worst = 0.0f64;
        for i in 0..n_probe {
            let lam = lo * (ratio * i as f64 / (n_probe - 1) as f64).exp();
            let exact = lam.powf(-self.alpha);
            let approx = self.eval_kernel(lam)?;
            worst = worst.max((approx - exact).abs() / exact);
        }
        Ok(worst)
    }

    pub fn lambda_min(&self) -> f64 {
        self.poles.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.poles.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean norm of the weight vector.
    pub fn omega_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Poles of the barycentric denominator: finite generalized eigenvalues of
/// the arrowhead pencil, solved by shift-invert with a real Schur
/// eigenvalue extraction.
fn barycentric_poles(r: &BarycentricRational) -> Result<Vec<Complex64>> {
    let m = r.support.len();
    if m < 2 {
        return Ok(Vec::new()); // degree-0: no poles
    }
    let mut e = DMatrix::zeros(m + 1, m + 1);
    let mut b = DMatrix::identity(m + 1, m + 1);
    b[(0, 0)] = 0.0;
    for j in 0..m {
        e[(0, j + 1)] = r.weights[j];
        e[(j + 1, 0)] = 1.0;
        e[(j + 1, j + 1)] = r.support[j];
    }
    let zmin = r.support.iter().cloned().fold(f64::INFINITY, f64::min);
    let zmax = r.support.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifts = [0.0, 0.31 * zmin, -0.53 * zmin, 1.97 * zmax + 1.0];
    for sigma in shifts {
        let lu = (e.clone() - sigma * &b).lu();
        let g = match lu.solve(&b) {
            Some(g) => g,
            None => continue,
        };
        let theta = g.complex_eigenvalues();
        if theta.iter().any(|t| !t.is_finite()) {
            continue;
        }
        // the pencil has exactly two infinite eigenvalues (θ ≈ 0): keep the
        // m-1 largest |θ| as the finite poles
        let mut idx: Vec<usize> = (0..theta.len()).collect();
        idx.sort_by(|&a, &bi| theta[bi].norm().partial_cmp(&theta[a].norm()).unwrap());
        let poles: Vec<Complex64> = idx[..m - 1]
            .iter()
            .map(|&i| Complex64::from(sigma) + theta[i].inv())
            .collect();
        if poles.iter().all(|p| p.is_finite()) {
            return Ok(poles);
        }
    }
    Err(Error::NoConvergence(
        "pole extraction failed for every pencil shift".into(),
    ))
}

/// Residue of r at pole p: n(p)/d'(p) in barycentric form.
fn residue_at(r: &BarycentricRational, p: Complex64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut dden = Complex64::new(0.0, 0.0);
    for ((&zj, &fj), &wj) in r.support.iter().zip(&r.values).zip(&r.weights) {
        let d = p - zj;
        num += wj * fj / d;
        dden -= wj / (d * d);
    }
    num / dden
}

/// Convert the barycentric form into the nonnegative pole/residue kernel.
///
/// Poles with a nonnegative real part (λ_k < 0 after negation) or a
/// non-negligible imaginary part are rejected, since the stability of the
/// lifted system requires real λ_k >= 0. Magnitudes below 1e-12 of scale
/// are clamped to zero.
pub fn to_partial_fractions(
    r: &BarycentricRational,
    alpha: f64,
    interval: (f64, f64),
) -> Result<PartialFractionExpansion> {
    let complex_poles = barycentric_poles(r)?;
    let mut poles = Vec::with_capacity(complex_poles.len());
    let mut weights = Vec::with_capacity(complex_poles.len());
    let scale = complex_poles
        .iter()
        .map(|p| p.norm())
        .fold(1.0f64, f64::max);
    for p in &complex_poles {
        if p.im.abs() > 1e-10 * (p.norm() + 1.0) {
            return Err(Error::PoleSign(format!(
                "complex pole pair at {p}: the lifted system requires real nonnegative poles"
            )));
        }
        let lam = -p.re;
        if lam < -1e-12 * scale {
            return Err(Error::PoleSign(format!(
                "pole at {} has positive real part beyond tolerance",
                p.re
            )));
        }
        let res = residue_at(r, Complex64::from(p.re));
        poles.push(lam.max(0.0));
        weights.push(res.re);
    }
    let wmax = weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    for w in &mut weights {
        if *w < 0.0 {
            if *w < -1e-12 * wmax.max(1.0) {
                return Err(Error::PoleSign(format!(
                    "negative residue {w} beyond tolerance"
                )));
            }
            *w = 0.0;
        }
    }
    let mut omega_inf = r.value_at_infinity()?;
    if omega_inf < 0.0 {
        if omega_inf < -1e-12 * wmax.max(1.0) {
            return Err(Error::PoleSign(format!(
                "negative omega_inf {omega_inf} beyond tolerance"
            )));
        }
        omega_inf = 0.0;
    }
    if poles.is_empty() {
        // degree-0 constant: represent as a single zero-weight pole
        poles.push(0.0);
        weights.push(0.0);
    }
    PartialFractionExpansion::direct(alpha, poles, weights, omega_inf, interval)
}

/// Fit λ^{-α} on [λ_lo, λ_hi] with `n_candidates` log-spaced points and
/// convert to partial fractions, removing spurious (Froissart) poles whose
/// residue is below 1e-13 of the largest and re-solving the weights once.
pub fn fit_fractional_kernel(
    alpha: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    tol: f64,
    n_candidates: usize,
    max_degree: usize,
) -> Result<(PartialFractionExpansion, AaaFit)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must be in (0,1], got {alpha}"
        )));
    }
    if !(lambda_lo > 0.0 && lambda_lo < lambda_hi) {
        return Err(Error::InvalidInput(format!(
            "interval must satisfy 0 < lo < hi, got [{lambda_lo}, {lambda_hi}]"
        )));
    }
    if n_candidates < 2 {
        return Err(Error::InvalidInput("need at least 2 candidates".into()));
    }
    let ratio = (lambda_hi / lambda_lo).ln();
    let samples: Vec<(f64, f64)> = (0..n_candidates)
        .map(|i| {
            let z = lambda_lo * (ratio * i as f64 / (n_candidates - 1) as f64).exp();
            (z, z.powf(-alpha))
        })
        .collect();
    let mut fit = aaa_fit(&samples, tol, max_degree)?;
    let mut pf = to_partial_fractions(&fit.rational, alpha, (lambda_lo, lambda_hi))?;

    // Froissart cleanup: drop support points nearest to spurious poles.
    let wmax = pf.weights.iter().fold(0.0f64, |a, w| a.max(*w));
    let spurious: Vec<f64> = pf
        .poles
        .iter()
        .zip(&pf.weights)
        .filter(|(_, &w)| w < 1e-13 * wmax && pf.poles.len() > 1)
        .map(|(&l, _)| -l)
        .collect();
    if !spurious.is_empty() {
        let mut support = fit.rational.support.clone();
        let mut values = fit.rational.values.clone();
        for p in &spurious {
            if support.len() <= 2 {
                break;
            }
            let (jmin, _) = support
                .iter()
                .enumerate()
                .map(|(j, z)| (j, (z - p).abs()))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            support.remove(jmin);
            values.remove(jmin);
        }
        let rel_w = relative_weights(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
        let in_support: Vec<bool> = samples
            .iter()
            .map(|(z, _)| support.contains(z))
            .collect();
        let weights = solve_weights(&samples, &in_support, &support, &values, &rel_w)?;
        let rational = BarycentricRational::new(support, values, weights)?;
        let mut err = 0.0f64;
        for (i, (z, f)) in samples.iter().enumerate() {
            if !in_support[i] {
                err = err.max((f - rational.eval(*z)).abs() * rel_w[i]);
            }
        }
        pf = to_partial_fractions(&rational, alpha, (lambda_lo, lambda_hi))?;
        fit = AaaFit {
            rational,
            achieved_rel_error: err,
            converged: err <= tol,
            residual_history: fit.residual_history,
        };
    }
    Ok((pf, fit))
}
