//! Warped-phase (Schrödingerized) evolution of the lifted ODE system.
//!
//! The linear system du_f/dt = A_f u_f is mapped to w(t,p) = e^{-p} u_f(t)
//! on a periodic p-interval [-L, R]; in discrete Fourier space each mode
//! evolves under its own Hamiltonian
//!
//!   w̃_k(t) = exp(-i t (μ_k H1 - H2)) w̃_k(0),
//!
//! with A_f = H1 + iH2 the Hermitian/anti-Hermitian split and
//! μ_k = 2π/(R+L) (k - N_p/2). The solution is restored as
//! u_f = e^p w(t,p) at the first grid point at or beyond p* = 1/2.
//!
//! Two paths are provided:
//!
//! * general dense operators ([`homogenize`], [`hermitian_split`],
//!   [`build_p_grid`], [`init_warped`], [`evolve_modes`],
//!   [`recover_solution`]) — exact per-mode matrix exponentials, intended
//!   for small systems and as the oracle for the structured path;
//! * [`solve_schrodingerized`] — the production path for the lifted heat
//!   system. It block-diagonalizes per spatial eigenvalue and per lifted
//!   channel, so each Fourier mode reduces to closed-form 1x1/2x2
//!   evolutions. Because the forcing is constant in time, the bounded part
//!   of the steady state is split off before the transform (rate-capped so
//!   slow channels keep a forcing column instead of amplifying 1/|a|);
//!   without this the auxiliary-variable mass of fast-decaying channels
//!   wraps around the periodic p-domain and buries the recovered solution.
//!   The p-interval is auto-sized from the positive spectral bound of H1
//!   plus a wrap-around audit that nudges the period until the parked
//!   packets of uncovered channels miss the recovery point.

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::lifted::{Coupling, LiftedSystem};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

const P_DIAMOND: f64 = 0.5;

/// Homogenized augmented system [[A, B],[0, 0]] with B = diag(b_i/γ_i),
/// γ_i = T sup|b_i| and zero columns where b_i = 0.
#[derive(Debug, Clone)]
pub struct HomogenizedSystem {
    pub a_f: DMatrix<f64>,
    /// γ_i = t_max |b_i|.
    pub gammas: DVector<f64>,
}

impl HomogenizedSystem {
    pub fn dim(&self) -> usize {
        self.a_f.nrows()
    }

    /// Initial augmented state [u0; γ].
    pub fn initial_state(&self, u0: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.gammas.len();
        if u0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u0.len(),
            });
        }
        let mut uf = DVector::zeros(2 * n);
        for i in 0..n {
            uf[i] = u0[i];
            uf[n + i] = self.gammas[i];
        }
        Ok(uf)
    }
}

/// Append constant auxiliary variables making du/dt = Au + b homogeneous.
pub fn homogenize(a: &DMatrix<f64>, b: &DVector<f64>, t_max: f64) -> Result<HomogenizedSystem> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput("A must be square".into()));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let gammas = DVector::from_fn(n, |i, _| t_max * b[i].abs());
    let mut a_f = DMatrix::zeros(2 * n, 2 * n);
    a_f.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        if gammas[i] > 0.0 {
            a_f[(i, n + i)] = b[i] / gammas[i];
        }
    }
    Ok(HomogenizedSystem { a_f, gammas })
}

/// A_f = H1 + iH2 with H1 = (A_f + A_fᵀ)/2 symmetric and H2 = -iK where
/// K = (A_f - A_fᵀ)/2 is the real antisymmetric part.
#[derive(Debug, Clone)]
pub struct HermitianSplit {
    pub h1: DMatrix<f64>,
    /// Antisymmetric part; the anti-Hermitian term of A_f is i·K = i(-H2)·(-1),
    /// i.e. H2 = -iK as a complex matrix.
    pub k: DMatrix<f64>,
}

impl HermitianSplit {
    pub fn dim(&self) -> usize {
        self.h1.nrows()
    }

    /// H2 as an explicit complex (Hermitian) matrix.
    pub fn h2_complex(&self) -> DMatrix<Complex64> {
        self.k.map(|x| Complex64::new(0.0, -x))
    }

    /// H1 + iH2, which must reproduce A_f exactly.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| Complex64::new(self.h1[(i, j)] + self.k[(i, j)], 0.0))
    }

    /// H_μ = μ H1 - H2 = μ H1 + iK.
    pub fn mode_hamiltonian(&self, mu: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(mu * self.h1[(i, j)], self.k[(i, j)])
        })
    }
}

pub fn hermitian_split(a_f: &DMatrix<f64>) -> HermitianSplit {
    let h1 = (a_f + a_f.transpose()) * 0.5;
    let k = (a_f - a_f.transpose()) * 0.5;
    HermitianSplit { h1, k }
}

/// The uniform periodic p-grid with its discrete Fourier modes.
#[derive(Debug, Clone)]
pub struct PGrid {
    pub p_left: f64,
    pub p_right: f64,
    pub n_p: usize,
}

impl PGrid {
    pub fn new(p_left: f64, p_right: f64, n_p: usize) -> Result<Self> {
        if !n_p.is_power_of_two() || n_p < 8 {
            return Err(Error::InvalidInput(format!(
                "n_p must be a power of two >= 8, got {n_p}"
            )));
        }
        if p_left <= P_DIAMOND || p_right <= P_DIAMOND {
            return Err(Error::InvalidInput(format!(
                "p-domain extents must exceed p_diamond = {P_DIAMOND}, got L={p_left}, R={p_right}"
            )));
        }
        Ok(PGrid {
            p_left,
            p_right,
            n_p,
        })
    }

    pub fn period(&self) -> f64 {
        self.p_left + self.p_right
    }

    pub fn delta_p(&self) -> f64 {
        self.period() / self.n_p as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.p_left + j as f64 * self.delta_p()
    }

    /// μ_k = 2π/(R+L) (k - N_p/2), k = 0..N_p-1.
    pub fn mode(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.period() * (k as f64 - self.n_p as f64 / 2.0)
    }

    pub fn modes(&self) -> Vec<f64> {
        (0..self.n_p).map(|k| self.mode(k)).collect()
    }

    /// Index of the smallest grid point at or beyond p_star.
    pub fn recovery_index(&self, p_star: f64) -> Result<usize> {
        if p_star < P_DIAMOND {
            return Err(Error::InvalidInput(format!(
                "recovery point must satisfy p >= {P_DIAMOND}, got {p_star}"
            )));
        }
        if p_star >= self.p_right {
            return Err(Error::InvalidInput(format!(
                "recovery point {p_star} outside the p-domain (-{}, {})",
                self.p_left, self.p_right
            )));
        }
        let j = ((p_star + self.p_left) / self.delta_p() - 1e-12).ceil() as usize;
        Ok(j.min(self.n_p - 1))
    }
}

/// Spectral-norm upper bound of a symmetric matrix by power iteration.
fn power_iteration_norm(h: &DMatrix<f64>, rel_tol: f64) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.01 * (i as f64 + 1.0).sin());
    x /= x.norm();
    let mut rho = 0.0f64;
    for _ in 0..300 {
        let y = h * &x;
        let r = y.norm();
        if r == 0.0 {
            return 0.0;
        }
        x = y / r;
        if (r - rho).abs() <= rel_tol * r {
            rho = r;
            break;
        }
        rho = r;
    }
    rho * 1.01
}

/// Default p-grid: L = 3 + ρ t_max and R = p* + 3 + ρ t_max with ρ a
/// spectral-norm bound of H1 from power iteration; explicit overrides win.
pub fn build_p_grid(
    h1: &DMatrix<f64>,
    t_max: f64,
    n_p: usize,
    overrides: Option<(f64, f64)>,
) -> Result<PGrid> {
    if let Some((l, r)) = overrides {
        return PGrid::new(l, r, n_p);
    }
    let rho = power_iteration_norm(h1, 1e-3);
    PGrid::new(3.0 + rho * t_max, P_DIAMOND + 3.0 + rho * t_max, n_p)
}

/// Initial-data extension to p < 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// ψ(p) = e^{-|p|}; value-continuous with a kink at 0.
    Exp,
    /// C¹: e^{-p} for p >= 0, cubic Hermite bridge on [-δ, 0] with δ = 1,
    /// then e^{p} decay to the left.
    Smooth,
}

impl Extension {
    pub fn psi(&self, p: f64) -> f64 {
        match self {
            Extension::Exp => (-p.abs()).exp(),
            Extension::Smooth => {
                const DELTA: f64 = 1.0;
                if p >= 0.0 {
                    (-p).exp()
                } else if p <= -DELTA {
                    p.exp()
                } else {
                    // Hermite data: ψ(-δ)=e^{-δ}, ψ'(-δ)=e^{-δ}, ψ(0)=1, ψ'(0)=-1
                    let t = (p + DELTA) / DELTA;
                    let (t2, t3) = (t * t, t * t * t);
                    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                    let h10 = t3 - 2.0 * t2 + t;
                    let h01 = -2.0 * t3 + 3.0 * t2;
                    let h11 = t3 - t2;
                    let e = (-DELTA).exp();
                    // Hermite combination of (value, slope) at both ends
                    h00 * e + h10 * DELTA * e + h01 - h11 * DELTA
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Fourier,
}

/// Samples of w over the p-grid (columns) for every state component (rows),
/// in physical-p or discrete-Fourier representation.
pub struct WarpedState {
    pub grid: PGrid,
    pub amplitudes: DMatrix<Complex64>,
    pub repr: Representation,
}

fn fft_rows(amplitudes: &mut DMatrix<Complex64>, inverse: bool) {
    let n_p = amplitudes.ncols();
    let dim = amplitudes.nrows();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n_p)
    } else {
        planner.plan_fft_forward(n_p)
    };
    let scale = 1.0 / (n_p as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); n_p];
    for i in 0..dim {
        if inverse {
            for j in 0..n_p {
                buf[j] = amplitudes[(i, j)];
            }
        } else {
            // fold in the (-1)^j phase that centres the modes
            for j in 0..n_p {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                buf[j] = amplitudes[(i, j)] * sign;
            }
        }
        fft.process(&mut buf);
        if inverse {
            for j in 0..n_p {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                amplitudes[(i, j)] = buf[j] * sign * scale;
            }
        } else {
            for j in 0..n_p {
                amplitudes[(i, j)] = buf[j] * scale;
            }
        }
    }
}

impl WarpedState {
    pub fn dim(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn to_fourier(&mut self) {
        if self.repr == Representation::Physical {
            fft_rows(&mut self.amplitudes, false);
            self.repr = Representation::Fourier;
        }
    }

    pub fn to_physical(&mut self) {
        if self.repr == Representation::Fourier {
            fft_rows(&mut self.amplitudes, true);
            self.repr = Representation::Physical;
        }
    }

    pub fn total_norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn mode_norm(&self, k: usize) -> f64 {
        self.amplitudes.column(k).norm()
    }
}

/// w(0, p_j) = ψ(p_j) u_f0, returned in Fourier representation.
pub fn init_warped(u_f0: &DVector<f64>, grid: &PGrid, extension: Extension) -> WarpedState {
    let n_p = grid.n_p;
    let dim = u_f0.len();
    let mut amplitudes = DMatrix::zeros(dim, n_p);
    for j in 0..n_p {
        let psi = extension.psi(grid.point(j));
        for i in 0..dim {
            amplitudes[(i, j)] = Complex64::new(psi * u_f0[i], 0.0);
        }
    }
    let mut state = WarpedState {
        grid: grid.clone(),
        amplitudes,
        repr: Representation::Physical,
    };
    state.to_fourier();
    state
}

/// Evolve every Fourier mode under exp(-i t (μ_k H1 - H2)) by a dense
/// scaling-and-squaring Padé exponential. Refuses above `dense_cap`.
pub fn evolve_modes(
    state: &WarpedState,
    split: &HermitianSplit,
    t: f64,
    dense_cap: usize,
) -> Result<WarpedState> {
    if state.repr != Representation::Fourier {
        return Err(Error::InvalidInput(
            "evolve_modes expects the Fourier representation".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be >= 0, got {t}")));
    }
    let dim = state.dim();
    if split.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: split.dim(),
        });
    }
    if dim > dense_cap {
        return Err(Error::DenseCapExceeded {
            size: dim,
            cap: dense_cap,
        });
    }
    let mut out = state.amplitudes.clone();
    for k in 0..state.grid.n_p {
        let h = split.mode_hamiltonian(state.grid.mode(k));
        let prop = expm(&(h * Complex64::new(0.0, -t)));
        let col = prop * out.column(k);
        out.set_column(k, &col);
    }
    Ok(WarpedState {
        grid: state.grid.clone(),
        amplitudes: out,
        repr: Representation::Fourier,
    })
}

/// e^{p_k} w(t, p_k) at the first grid point p_k >= p_star; the first half
/// of the state is the u-block, the trailing half the auxiliary block.
pub fn recover_solution(state: &WarpedState, p_star: f64) -> Result<DVector<f64>> {
    let full = recover_full(state, p_star)?;
    let n = full.len() / 2;
    Ok(DVector::from_fn(n, |i, _| full[i]))
}

/// As [`recover_solution`] but returning the full augmented vector.
pub fn recover_full(state: &WarpedState, p_star: f64) -> Result<DVector<f64>> {
    let j = state.grid.recovery_index(p_star)?;
    let pk = state.grid.point(j);
    let dim = state.dim();
    let col: DVector<Complex64> = match state.repr {
        Representation::Physical => state.amplitudes.column(j).into(),
        Representation::Fourier => {
            let scale = 1.0 / (state.grid.n_p as f64).sqrt();
            let mut acc = DVector::zeros(dim);
            for l in 0..state.grid.n_p {
                let phase = Complex64::from_polar(
                    scale,
                    state.grid.mode(l) * (pk + state.grid.p_left),
                );
                acc += state.amplitudes.column(l) * phase;
            }
            acc
        }
    };
    Ok(DVector::from_fn(dim, |i, _| pk.exp() * col[i].re))
}

/// Options for the structured warped-phase solver.
#[derive(Debug, Clone)]
pub struct SchrodOptions {
    pub n_p: usize,
    pub p_left: Option<f64>,
    pub p_right: Option<f64>,
    pub extension: Extension,
    pub p_star: f64,
    /// Rate cap κ of the steady-state split: channels faster than 1/(κt)
    /// are shifted entirely, slower ones keep a rescaled forcing column.
    /// 0 disables the shift (the raw homogenization of the full forcing).
    pub shift_cap: f64,
}

impl Default for SchrodOptions {
    fn default() -> Self {
        SchrodOptions {
            n_p: 512,
            p_left: None,
            p_right: None,
            extension: Extension::Exp,
            p_star: P_DIAMOND,
            shift_cap: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchrodDiagnostics {
    pub p_left: f64,
    pub p_right: f64,
    pub delta_p: f64,
    pub n_p: usize,
    pub recovery_point: f64,
    /// max|w| at the outermost grid points over max|w| on a p-sample;
    /// above ~1e-6 indicates wrap-around contamination.
    pub boundary_mass_ratio: f64,
    /// Predicted parked-packet contamination from the period audit.
    pub audit_junk: f64,
    pub audit_steps: usize,
    /// Max relative per-mode norm change (unitarity defect).
    pub mode_norm_drift: f64,
    pub total_norm_drift: f64,
}

pub struct SchrodSolution {
    /// Recovered lifted state U(t), block-k major, physical space.
    pub u_lifted: DVector<f64>,
    /// Recovered auxiliary variables per channel (s-major), for the
    /// r-constancy check; expected equal to `gamma_channel`.
    pub r_channel: DVector<f64>,
    pub gamma_channel: DVector<f64>,
    pub diagnostics: SchrodDiagnostics,
}

struct Channel {
    rate: f64,
    w0: f64,
    gamma: f64,
    sign: f64,
}

/// Emulate the Schrödingerized evolution of the stable lifted system up to
/// time `t` and recover U(t).
pub fn solve_schrodingerized(
    sys: &LiftedSystem,
    t: f64,
    opts: &SchrodOptions,
) -> Result<SchrodSolution> {
    if sys.coupling() != Coupling::Stable {
        return Err(Error::InvalidInput(
            "the warped-phase solver requires the stable lifted form".into(),
        ));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("time must be > 0, got {t}")));
    }
    if !n_p_valid(opts.n_p) {
        return Err(Error::InvalidInput(format!(
            "n_p must be a power of two >= 8, got {}",
            opts.n_p
        )));
    }
    let ch = sys.spectral_channels()?;
    let (m, n_d) = (ch.m, ch.n_d);

    // per-channel steady shift and residual forcing
    let cap = opts.shift_cap * t;
    let mut channels = Vec::with_capacity(m * n_d);
    for s in 0..n_d {
        for i in 0..m {
            let a = ch.rates[s][i].min(-1e-300);
            let f = ch.f_tilde[s][i];
            let (g, b_res) = if opts.shift_cap > 0.0 {
                let factor = (1.0 / a.abs()).min(cap);
                (f * factor, f * (1.0 - a.abs() * cap).max(0.0))
            } else {
                (0.0, f)
            };
            channels.push(Channel {
                rate: a,
                w0: -g,
                gamma: t * b_res.abs(),
                sign: if b_res == 0.0 { 0.0 } else { b_res.signum() },
            });
        }
    }

    // growth bound of H1: largest positive eigenvalue over coupled channels
    let rho_plus = channels
        .iter()
        .filter(|c| c.gamma > 0.0)
        .map(|c| 0.5 * (c.rate + (c.rate * c.rate + 1.0 / (t * t)).sqrt()))
        .fold(0.0f64, f64::max);

    // p-interval: overrides win; otherwise audit the period so that parked
    // wrap-around packets miss the recovery point
    let (p_left, p_right, audit_junk, audit_steps) =
        if opts.p_left.is_some() || opts.p_right.is_some() {
            let l = opts.p_left.unwrap_or(3.0 + rho_plus * t);
            let r = opts.p_right.unwrap_or(opts.p_star + 3.0 + rho_plus * t);
            (l, r, f64::NAN, 0)
        } else {
            // the period depends on the system, not on n_p, so that
            // refining the mode count monotonically shrinks the error
            let l = 3.0 + rho_plus * t;
            let base = (l + opts.p_star + 3.0 + rho_plus * t).max(24.0);
            let w_norm = channels.iter().map(|c| c.w0 * c.w0).sum::<f64>().sqrt();
            let budget = 1e-4 * w_norm.max(1e-300);
            let mut best = (base, f64::INFINITY, 0usize);
            for step in 0..=40usize {
                let period = base + 0.37 * step as f64;
                let mut junk = 0.0;
                for c in &channels {
                    let travel = c.rate.abs() * t;
                    if travel <= period - l - opts.p_star - 1.0 {
                        continue;
                    }
                    let parked = (opts.p_star + travel + l).rem_euclid(period) - l;
                    junk += c.w0.abs() * (-parked.abs()).exp();
                }
                if junk < best.1 {
                    best = (period, junk, step);
                }
                if junk <= budget {
                    break;
                }
            }
            (l, best.0 - l, best.1, best.2)
        };
    let grid = PGrid::new(p_left, p_right, opts.n_p)?;
    let n_p = grid.n_p;
    let jstar = grid.recovery_index(opts.p_star)?;
    let pk = grid.point(jstar);

    // ψ samples and their unitary DFT
    let psi_hat = {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_p);
        let mut buf: Vec<Complex64> = (0..n_p)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * opts.extension.psi(grid.point(j)), 0.0)
            })
            .collect();
        fft.process(&mut buf);
        let scale = 1.0 / (n_p as f64).sqrt();
        buf.iter().map(|x| x * scale).collect::<Vec<_>>()
    };
    let modes = grid.modes();
    let rec_phase: Vec<Complex64> = modes
        .iter()
        .map(|&mu| Complex64::from_polar(1.0 / (n_p as f64).sqrt(), mu * (pk + p_left)))
        .collect();
    // sample points for the boundary-mass diagnostic (includes endpoints)
    let n_samples = 33.min(n_p);
    let sample_idx: Vec<usize> = (0..n_samples)
        .map(|q| (q * (n_p - 1)) / (n_samples - 1).max(1))
        .collect();
    let sample_phase: Vec<Vec<Complex64>> = sample_idx
        .iter()
        .map(|&j| {
            let pj = grid.point(j);
            modes
                .iter()
                .map(|&mu| Complex64::from_polar(1.0 / (n_p as f64).sqrt(), mu * (pj + p_left)))
                .collect()
        })
        .collect();

    let c0 = 1.0 / (2.0 * t);
    let mut mode_norm0 = vec![0.0f64; n_p];
    let mut mode_norm1 = vec![0.0f64; n_p];
    let mut sample_mass = vec![0.0f64; sample_idx.len()];
    let mut u_rec = vec![0.0f64; m * n_d];
    let mut r_rec = DVector::zeros(m * n_d);
    let mut gamma_out = DVector::zeros(m * n_d);

    for (ci, c) in channels.iter().enumerate() {
        let mut acc_u = Complex64::new(0.0, 0.0);
        let mut acc_r = Complex64::new(0.0, 0.0);
        let mut acc_samples = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); sample_idx.len()];
        if c.gamma == 0.0 {
            // pure decay channel: ŵ_l(t) = e^{-i t μ_l a} ŵ_l(0)
            for l in 0..n_p {
                let u = psi_hat[l] * c.w0 * Complex64::from_polar(1.0, -t * modes[l] * c.rate);
                acc_u += rec_phase[l] * u;
                let n2 = u.norm_sqr();
                mode_norm0[l] += psi_hat[l].norm_sqr() * c.w0 * c.w0;
                mode_norm1[l] += n2;
                for (q, ph) in sample_phase.iter().enumerate() {
                    acc_samples[q].0 += ph[l] * u;
                }
            }
        } else {
            for l in 0..n_p {
                let mu = modes[l];
                let root = (mu * mu + 1.0).sqrt();
                // diagonal phase making the mode Hamiltonian real symmetric
                let phase = Complex64::new(mu, -1.0) / root;
                let c_off = root * c0;
                let xu = psi_hat[l] * c.w0;
                let xr = psi_hat[l] * (c.sign * c.gamma) * phase.conj();
                let aa = mu * c.rate;
                let disc = (aa * aa + 4.0 * c_off * c_off).sqrt();
                let th1 = 0.5 * (aa + disc);
                let th2 = 0.5 * (aa - disc);
                let n1 = (c_off * c_off + (th1 - aa) * (th1 - aa)).sqrt();
                let n2 = (c_off * c_off + (th2 - aa) * (th2 - aa)).sqrt();
                let (c1, s1) = (c_off / n1, (th1 - aa) / n1);
                let (c2, s2) = (c_off / n2, (th2 - aa) / n2);
                let e1 = Complex64::from_polar(1.0, -t * th1);
                let e2 = Complex64::from_polar(1.0, -t * th2);
                let p1 = xu * c1 + xr * s1;
                let p2 = xu * c2 + xr * s2;
                let u = e1 * p1 * c1 + e2 * p2 * c2;
                let r = (e1 * p1 * s1 + e2 * p2 * s2) * phase;
                acc_u += rec_phase[l] * u;
                acc_r += rec_phase[l] * r;
                mode_norm0[l] += psi_hat[l].norm_sqr() * (c.w0 * c.w0 + c.gamma * c.gamma);
                mode_norm1[l] += u.norm_sqr() + r.norm_sqr();
                for (q, ph) in sample_phase.iter().enumerate() {
                    acc_samples[q].0 += ph[l] * u;
                    acc_samples[q].1 += ph[l] * r;
                }
            }
        }
        u_rec[ci] = pk.exp() * acc_u.re + (-c.w0); // W(t) + G, G = -W0
        r_rec[ci] = c.sign * pk.exp() * acc_r.re;
        gamma_out[ci] = c.gamma;
        for (q, (au, ar)) in acc_samples.iter().enumerate() {
            sample_mass[q] += au.norm_sqr() + ar.norm_sqr();
        }
    }

    // unitarity bookkeeping
    let mut mode_norm_drift = 0.0f64;
    let (mut tot0, mut tot1) = (0.0f64, 0.0f64);
    for l in 0..n_p {
        tot0 += mode_norm0[l];
        tot1 += mode_norm1[l];
        if mode_norm0[l] > 1e-30 {
            let d = ((mode_norm1[l].sqrt() - mode_norm0[l].sqrt()) / mode_norm0[l].sqrt()).abs();
            mode_norm_drift = mode_norm_drift.max(d);
        }
    }
    let total_norm_drift = if tot0 > 0.0 {
        ((tot1.sqrt() - tot0.sqrt()) / tot0.sqrt()).abs()
    } else {
        0.0
    };

    // boundary-mass diagnostic
    let masses: Vec<f64> = sample_mass.iter().map(|x| x.sqrt()).collect();
    let wmax = masses.iter().copied().fold(0.0f64, f64::max);
    let boundary = masses[0].max(*masses.last().unwrap());
    let boundary_mass_ratio = if wmax > 0.0 { boundary / wmax } else { 0.0 };

    // assemble U: channels are (s major, i minor); rotate back per s and
    // inverse sine transform per lifted block
    let mut u_lifted = DVector::zeros(m * n_d);
    let mut block_hat = vec![DVector::zeros(n_d); m];
    for s in 0..n_d {
        let vals = DVector::from_fn(m, |i, _| u_rec[s * m + i]);
        let phys = &ch.bases[s] * vals;
        for k in 0..m {
            block_hat[k][s] = phys[k];
        }
    }
    for (k, hat) in block_hat.iter().enumerate() {
        let u_k = sys.lap().sine_transform(hat)?;
        for j in 0..n_d {
            u_lifted[k * n_d + j] = u_k[j];
        }
    }

    Ok(SchrodSolution {
        u_lifted,
        r_channel: r_rec,
        gamma_channel: gamma_out,
        diagnostics: SchrodDiagnostics {
            p_left,
            p_right,
            delta_p: grid.delta_p(),
            n_p,
            recovery_point: pk,
            boundary_mass_ratio,
            audit_junk,
            audit_steps,
            mode_norm_drift,
            total_norm_drift,
        },
    })
}

fn n_p_valid(n_p: usize) -> bool {
    n_p.is_power_of_two() && n_p >= 8
}
