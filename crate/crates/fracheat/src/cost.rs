//! Quantum resource formulas and the quantum-vs-classical scaling table.
//!
//! Every value is a model number: the displayed asymptotic expressions are
//! evaluated with all hidden constants set to 1 and logarithmic factors
//! dropped. Nothing here estimates gates of an actual circuit.

use crate::baseline::count_classical_ops;
use crate::error::{Error, Result};

/// Block-encoding parameters of the lifted coefficient matrix and of the
/// resolvent inverse, with constants set to 1.
#[derive(Debug, Clone, Copy)]
pub struct BlockEncodingParams {
    pub alpha_a: f64,
    pub n_a: u64,
    pub eps_a: f64,
    pub alpha_inv: f64,
    pub n_inv: u64,
    pub eps_inv: f64,
    /// Gate-complexity model value for assembling the encoding of A.
    pub t_a_gates: f64,
}

/// Evaluate the block-encoding parameter algebra.
///
/// `m_qubits` and `nx_qubits` are the register sizes: M = 2^m and
/// N_x - 1 = 2^{n_x}.
#[allow(clippy::too_many_arguments)]
pub fn block_encoding_params(
    d: usize,
    h: f64,
    m_qubits: u64,
    nx_qubits: u64,
    eps1: f64,
    eps2: f64,
    eps3: f64,
    omega_inf: f64,
    lambda_max: f64,
    omega_norm: f64,
) -> Result<BlockEncodingParams> {
    if d < 1 || !(h > 0.0) {
        return Err(Error::InvalidInput("need d >= 1 and h > 0".into()));
    }
    if !(eps1 > 0.0 && eps2 > 0.0 && eps3 > 0.0) {
        return Err(Error::InvalidInput("encoding errors must be positive".into()));
    }
    let df = d as f64;
    let dh2 = df / (h * h);
    let boost = 1.0 + omega_inf * dh2;
    let n2 = nx_qubits + 3;
    let n1 = m_qubits + 3;
    let n3 = 2 * (m_qubits + 3);
    let d64 = d as u64;
    let alpha_inv = boost;
    let n_inv = (d64 + d64 * d64) * n2 + 1;
    let eps_inv = dh2 * boost * eps2;
    let alpha_a = lambda_max + omega_norm * dh2 * boost;
    let n_a = n1 + (d64 + 3 * d64 * d64) * n2 + n3 + 1;
    let eps_a = dh2
        * boost
        * (omega_norm * eps1 + lambda_max * omega_norm * dh2 * eps2 + lambda_max * eps3);
    let t_a_gates = m_qubits as f64
        + (1.0 / eps1).ln().powf(2.5)
        + (1.0 / eps3).ln().powf(2.5)
        + df * nx_qubits as f64 * boost * boost * (1.0 / eps2).ln().powf(3.5);
    Ok(BlockEncodingParams {
        alpha_a,
        n_a,
        eps_a,
        alpha_inv,
        n_inv,
        eps_inv,
        t_a_gates,
    })
}

/// Query-complexity bound for preparing the solution state.
#[derive(Debug, Clone, Copy)]
pub struct QueryBound {
    /// T² d² h⁻⁴ (1+ω_∞dh⁻²)² ‖ω‖^{3/2} ‖λ‖_max (‖λ‖_max + ‖ω‖/ω_∞) ‖u0‖.
    pub queries: f64,
    /// The headline reduction T² d⁴ h⁻⁸ (valid when ω_∞ d h⁻² >> 1).
    pub headline: f64,
    /// ω_∞ = 0: the (‖ω‖/ω_∞) factor was replaced by ‖λ‖_max.
    pub omega_inf_zero: bool,
    /// The evolution horizon exceeds the constants-1 precondition
    /// T <= ‖λ‖_max + dh⁻²(1+ω_∞dh⁻²)‖ω‖.
    pub horizon_warning: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn quantum_query_bound(
    t: f64,
    d: usize,
    h: f64,
    omega_inf: f64,
    lambda_max: f64,
    _lambda_min: f64,
    omega_norm: f64,
    u0_norm: f64,
) -> Result<QueryBound> {
    if d < 1 || !(h > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidInput("need d >= 1, h > 0, t > 0".into()));
    }
    let df = d as f64;
    let dh2 = df / (h * h);
    let boost = 1.0 + omega_inf * dh2;
    let omega_inf_zero = omega_inf == 0.0;
    let balance = if omega_inf_zero {
        lambda_max
    } else {
        lambda_max + omega_norm / omega_inf
    };
    let queries = t * t
        * df
        * df
        * h.powi(-4)
        * boost
        * boost
        * omega_norm.powf(1.5)
        * lambda_max
        * balance
        * u0_norm;
    let headline = t * t * df.powi(4) * h.powi(-8);
    let horizon_warning = t > lambda_max + dh2 * boost * omega_norm;
    Ok(QueryBound {
        queries,
        headline,
        omega_inf_zero,
        horizon_warning,
    })
}

/// Kernel summary feeding the scaling table.
#[derive(Debug, Clone, Copy)]
pub struct KernelSummary {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub omega_norm: f64,
    pub omega_inf: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingRow {
    pub d: usize,
    pub h: f64,
    pub quantum_queries: f64,
    pub classical_ops: f64,
    /// classical / quantum.
    pub ratio: f64,
}

/// One row per dimension: quantum query bound vs the classical work model.
pub fn scaling_table(
    t: f64,
    dims: &[usize],
    h: f64,
    m: usize,
    kernel: &KernelSummary,
    u0_norm: f64,
) -> Result<Vec<ScalingRow>> {
    dims.iter()
        .map(|&d| {
            let q = quantum_query_bound(
                t,
                d,
                h,
                kernel.omega_inf,
                kernel.lambda_max,
                kernel.lambda_min,
                kernel.omega_norm,
                u0_norm,
            )?;
            let c = count_classical_ops(d, h, t, m) as f64;
            Ok(ScalingRow {
                d,
                h,
                quantum_queries: q.queries,
                classical_ops: c,
                ratio: c / q.queries,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ancilla_count_example() {
        // d=1, n_x=5, m=4: n_A = 7 + 4·8 + 2·7 + 1 = 54
        let p = block_encoding_params(1, 1.0 / 32.0, 4, 5, 1e-8, 1e-8, 1e-8, 0.01, 100.0, 10.0)
            .unwrap();
        assert_eq!(p.n_a, 54);
        assert_eq!(p.n_inv, 2 * 8 + 1);
    }

    #[test]
    fn alpha_collapse_when_omega_inf_zero() {
        let p =
            block_encoding_params(1, 0.125, 3, 3, 1e-6, 1e-6, 1e-6, 0.0, 50.0, 4.0).unwrap();
        assert_abs_diff_eq!(p.alpha_inv, 1.0);
        assert_abs_diff_eq!(p.alpha_a, 50.0 + 4.0 * 64.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_a_second_term_scales_like_h4() {
        // once ω_∞dh⁻² >> 1 the coupling term scales like h⁻⁴
        let coupling = |h: f64| {
            let p =
                block_encoding_params(1, h, 3, 3, 1e-6, 1e-6, 1e-6, 1.0, 0.0, 1.0).unwrap();
            p.alpha_a
        };
        let ratio = coupling(1.0 / 512.0) / coupling(1.0 / 256.0);
        assert!((ratio / 16.0 - 1.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn headline_factor_is_two_to_the_forty() {
        let q = quantum_query_bound(1.0, 1, 1.0 / 32.0, 0.01, 10.0, 0.1, 5.0, 1.0).unwrap();
        assert_eq!(q.headline, (1u64 << 40) as f64);
    }

    #[test]
    fn headline_scaling_in_h_and_t() {
        let base = quantum_query_bound(1.0, 1, 1.0 / 16.0, 0.01, 10.0, 0.1, 5.0, 1.0).unwrap();
        let halved = quantum_query_bound(1.0, 1, 1.0 / 32.0, 0.01, 10.0, 0.1, 5.0, 1.0).unwrap();
        assert_abs_diff_eq!(halved.headline / base.headline, 256.0, epsilon = 1e-9);
        let doubled_t = quantum_query_bound(2.0, 1, 1.0 / 16.0, 0.01, 10.0, 0.1, 5.0, 1.0).unwrap();
        assert_abs_diff_eq!(doubled_t.queries / base.queries, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(doubled_t.headline / base.headline, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn omega_inf_zero_flagged() {
        let q = quantum_query_bound(1.0, 1, 0.25, 0.0, 10.0, 0.1, 5.0, 1.0).unwrap();
        assert!(q.omega_inf_zero);
        // balance term replaced by lambda_max
        let want = 1.0 * 1.0 * 0.25f64.powi(-4) * 1.0 * 5.0f64.powf(1.5) * 10.0 * 10.0;
        assert_abs_diff_eq!(q.queries, want, epsilon = 1e-9 * want);
    }

    #[test]
    fn classical_quantum_ratio_grows_in_dimension() {
        let kernel = KernelSummary {
            lambda_max: 100.0,
            lambda_min: 0.1,
            omega_norm: 10.0,
            omega_inf: 0.01,
        };
        let rows = scaling_table(1.0, &[1, 2, 3, 4, 5, 6, 7, 8], 1.0 / 16.0, 8, &kernel, 1.0)
            .unwrap();
        for w in rows.windows(2) {
            assert!(
                w[1].ratio > w[0].ratio,
                "ratio not monotone: d={} {} -> d={} {}",
                w[0].d,
                w[0].ratio,
                w[1].d,
                w[1].ratio
            );
        }
        let r2 = rows.iter().find(|r| r.d == 2).unwrap().ratio;
        let r8 = rows.iter().find(|r| r.d == 8).unwrap().ratio;
        assert!(r8 / r2 > 1e3, "crossover too shallow: {}", r8 / r2);
    }

    #[test]
    fn h_sweep_monotone_columns() {
        let kernel = KernelSummary {
            lambda_max: 100.0,
            lambda_min: 0.1,
            omega_norm: 10.0,
            omega_inf: 0.01,
        };
        let mut prev_q = 0.0;
        let mut prev_c = 0.0;
        for k in 3..7 {
            let h = 1.0 / (1 << k) as f64;
            let rows = scaling_table(1.0, &[1], h, 4, &kernel, 1.0).unwrap();
            assert!(rows[0].quantum_queries > prev_q);
            assert!(rows[0].classical_ops > prev_c);
            prev_q = rows[0].quantum_queries;
            prev_c = rows[0].classical_ops;
        }
    }

    #[test]
    fn symbolic_recomputation_agreement() {
        // recompute α_A from an independently expanded expression
        let (d, h, omega_inf, lambda_max, omega_norm) = (3usize, 0.05, 0.2, 42.0, 7.0);
        let p = block_encoding_params(d, h, 4, 6, 1e-9, 1e-7, 1e-8, omega_inf, lambda_max, omega_norm)
            .unwrap();
        let df = d as f64;
        let expanded = lambda_max
            + omega_norm * df / (h * h)
            + omega_norm * omega_inf * df * df / (h * h * h * h);
        assert_abs_diff_eq!(p.alpha_a, expanded, epsilon = 1e-12 * expanded);
    }
}
