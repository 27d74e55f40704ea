//! Kernel terms r_k(s) = F⁻¹[(i·k_*)^k](s) sampled on the lag grid
//! s_l = l·Δ_T, l = −(N_T−1)..=(N_T−1).
//!
//! r_1 comes from frequency quadrature, higher orders from the convolution
//! recursion r_k = (2π)^{-1/2}·(r_1 ∗ r_{k−1}).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AttenuationModel;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Frequency quadrature used for r_1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelQuadrature {
    /// Integration range [−Ω, Ω]; clamped to 0.95·π/Δ_T when the time grid is coarser.
    pub omega_max: f64,
    /// Number of trapezoid nodes.
    pub nodes: usize,
    /// Remove the a/(ω + iγ) tail of k_* analytically and add back its causal
    /// transform. Makes r_1 causal up to 1e-4 instead of carrying the Gibbs
    /// ringing of a truncated 1/ω tail.
    pub tail_subtraction: bool,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        KernelQuadrature {
            omega_max: 200.0,
            nodes: 1 << 16,
            tail_subtraction: false,
        }
    }
}

impl KernelQuadrature {
    /// Range actually integrated for time step `dt`.
    pub fn effective_omega_max(&self, dt: f64) -> f64 {
        self.omega_max.min(0.95 * PI / dt)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) || self.nodes < 3 {
            return Err(Error::input(format!(
                "kernel quadrature needs omega_max > 0 and >= 3 nodes (got {}, {})",
                self.omega_max, self.nodes
            )));
        }
        Ok(())
    }
}

/// How r_k is obtained from r_1 and r_{k−1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionMode {
    /// Full-line lattice convolution over every lag.
    #[default]
    FullLine,
    /// One-sided sum Δ_T·Σ_{m=1}^{i} r_1(t_m)·r_{k−1}(t_i − t_m); negative lags are zero.
    Causal,
}

/// Symmetric lag grid of 2·N_T − 1 points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagGrid {
    pub dt: f64,
    pub n_t: usize,
}

impl LagGrid {
    pub fn new(dt: f64, n_t: usize) -> Self {
        LagGrid { dt, n_t }
    }

    pub fn len(&self) -> usize {
        2 * self.n_t - 1
    }

    pub fn is_empty(&self) -> bool {
        self.n_t == 0
    }

    /// Index of lag zero.
    pub fn zero(&self) -> usize {
        self.n_t - 1
    }

    pub fn lag(&self, idx: usize) -> f64 {
        (idx as f64 - self.zero() as f64) * self.dt
    }

    pub fn lags(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.lag(i)).collect()
    }
}

/// Trapezoid approximation of (2π)^{-1/2}·∫ f(ω) e^{−iωs} dω on [−Ω, Ω] at every lag.
///
/// Phasors are advanced by repeated multiplication, so the cost is one complex
/// product per node and lag.
pub fn fourier_lags(f: impl Fn(f64) -> Complex64, lag: LagGrid, omega_max: f64, nodes: usize) -> Vec<Complex64> {
    let dw = 2.0 * omega_max / (nodes - 1) as f64;
    let samples: Vec<Complex64> = (0..nodes)
        .map(|m| {
            let w = -omega_max + m as f64 * dw;
            let weight = if m == 0 || m == nodes - 1 { 0.5 * dw } else { dw };
            f(w) * weight * INV_SQRT_2PI
        })
        .collect();
    let step: Vec<Complex64> = (0..nodes)
        .map(|m| {
            let w = -omega_max + m as f64 * dw;
            Complex64::from_polar(1.0, -w * lag.dt)
        })
        .collect();

    let zero = lag.zero();
    let mut out = vec![Complex64::new(0.0, 0.0); lag.len()];
    // phase[m] = e^{−iω_m s_l} for the current l ≥ 0; its conjugate serves lag −s_l
    let mut phase = vec![Complex64::new(1.0, 0.0); nodes];
    for l in 0..lag.n_t {
        let mut pos = Complex64::new(0.0, 0.0);
        let mut neg = Complex64::new(0.0, 0.0);
        for ((s, p), z) in samples.iter().zip(phase.iter_mut()).zip(&step) {
            pos += *s * *p;
            neg += *s * p.conj();
            *p *= z;
        }
        out[zero + l] = pos;
        out[zero - l] = neg;
    }
    out
}

/// r_1 for an arbitrary k_* with optional known tail a/(ω + iγ).
pub fn compute_r1_with(
    kstar: impl Fn(f64) -> Complex64,
    tail: (f64, f64),
    lag: LagGrid,
    quad: &KernelQuadrature,
) -> Result<Vec<Complex64>> {
    quad.check()?;
    let omega_max = quad.effective_omega_max(lag.dt);
    let i = Complex64::i();
    let (a, gamma) = tail;
    if quad.tail_subtraction && a != 0.0 {
        if !(gamma > 0.0) {
            return Err(Error::input("tail pole must lie in the lower half plane (gamma > 0)"));
        }
        let mut r = fourier_lags(
            |w| i * kstar(w) - i * a / Complex64::new(w, gamma),
            lag,
            omega_max,
            quad.nodes,
        );
        let jump = a * (2.0 * PI).sqrt();
        for (idx, v) in r.iter_mut().enumerate() {
            let s = lag.lag(idx);
            let h = if idx > lag.zero() {
                1.0
            } else if idx == lag.zero() {
                0.5
            } else {
                0.0
            };
            *v += jump * (-gamma * s.max(0.0)).exp() * h;
        }
        Ok(r)
    } else {
        Ok(fourier_lags(|w| i * kstar(w), lag, omega_max, quad.nodes))
    }
}

/// r_1(s) = (2π)^{-1/2} ∫ i·k_*(ω)·e^{−iωs} dω on the lag grid.
pub fn compute_r1(model: &AttenuationModel, lag: LagGrid, quad: &KernelQuadrature) -> Result<Vec<Complex64>> {
    model.check()?;
    let k_inf = model.k_infinity()?;
    let tail = model.kstar_tail()?;
    compute_r1_with(|w| model.kstar_unchecked(w, k_inf), tail, lag, quad)
}

/// One recursion step r_k = (2π)^{-1/2}·(r_1 ∗ r_{k−1}) with lattice weight Δ_T.
///
/// `jump` is the size of a jump of r_1 at lag zero (zero for band-limited r_1).
/// When both factors jump at zero the lattice sum adds a spurious Δ_T·(J/2)²
/// at zero lag, a degenerate trapezoid over [0, 0]; it is removed.
pub fn convolve_step(
    r1: &[Complex64],
    prev: &[Complex64],
    prev_order: usize,
    lag: LagGrid,
    mode: ConvolutionMode,
    jump: f64,
) -> Vec<Complex64> {
    let len = lag.len();
    let zero = lag.zero() as isize;
    let scale = lag.dt * INV_SQRT_2PI;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    match mode {
        ConvolutionMode::FullLine => {
            for (l, o) in out.iter_mut().enumerate() {
                // index of s_l − s_m is l − m + zero
                let target = l as isize + zero;
                let m_lo = (target - (len as isize - 1)).max(0) as usize;
                let m_hi = (target.min(len as isize - 1)) as usize;
                let mut acc = Complex64::new(0.0, 0.0);
                for m in m_lo..=m_hi {
                    acc += r1[m] * prev[(target - m as isize) as usize];
                }
                *o = acc * scale;
            }
            if prev_order == 1 && jump != 0.0 {
                out[lag.zero()] -= scale * (0.5 * jump) * (0.5 * jump);
            }
        }
        ConvolutionMode::Causal => {
            let z = lag.zero();
            for i in 1..lag.n_t {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 1..=i {
                    acc += r1[z + m] * prev[z + i - m];
                }
                out[z + i] = acc * scale;
            }
        }
    }
    out
}

/// r_k for k ≥ 2 obtained by iterating the recursion from r_1.
pub fn compute_rk(r1: &[Complex64], k: usize, lag: LagGrid, mode: ConvolutionMode) -> Result<Vec<Complex64>> {
    if k < 2 {
        return Err(Error::input(format!("recursion order must be >= 2, got {k}")));
    }
    if r1.len() != lag.len() {
        return Err(Error::GridMismatch(format!(
            "r_1 has {} samples but the lag grid has {}",
            r1.len(),
            lag.len()
        )));
    }
    let mut cur = r1.to_vec();
    for order in 2..=k {
        cur = convolve_step(r1, &cur, order - 1, lag, mode, 0.0);
    }
    Ok(cur)
}

/// The truncated series r_1..r_K on one lag grid.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    pub lag: LagGrid,
    pub quadrature: KernelQuadrature,
    pub mode: ConvolutionMode,
    /// `terms[k-1]` holds r_k.
    pub terms: Vec<Vec<Complex64>>,
}

impl KernelSeries {
    pub fn build(
        model: &AttenuationModel,
        lag: LagGrid,
        order: usize,
        quad: &KernelQuadrature,
        mode: ConvolutionMode,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::input("Taylor order K must be >= 1"));
        }
        let r1 = compute_r1(model, lag, quad)?;
        let (a, _) = model.kstar_tail()?;
        let jump = if quad.tail_subtraction { a * (2.0 * PI).sqrt() } else { 0.0 };
        let mut terms = Vec::with_capacity(order);
        terms.push(r1);
        for k in 2..=order {
            let next = convolve_step(&terms[0], &terms[k - 2], k - 1, lag, mode, jump);
            terms.push(next);
        }
        if terms.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("kernel series produced non-finite values".into()));
        }
        Ok(KernelSeries {
            lag,
            quadrature: *quad,
            mode,
            terms,
        })
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, k: usize) -> &[Complex64] {
        &self.terms[k - 1]
    }
}
