//! Reference computations that share no code with the library.
#![allow(dead_code)]

use num_complex::Complex64;

pub const TAU: f64 = 0.11;
pub const TAU_TILDE: f64 = 0.1;

/// NSW law with unit high-frequency speed, evaluated from scratch.
pub fn nsw_kappa(tau: f64, tau_tilde: f64, w: f64) -> Complex64 {
    let i = Complex64::i();
    let ratio = (Complex64::new(1.0, 0.0) - i * w * tau_tilde) / (Complex64::new(1.0, 0.0) - i * w * tau);
    (tau / tau_tilde).sqrt() * w * ratio.sqrt()
}

pub fn nsw_k_inf(tau: f64, tau_tilde: f64) -> f64 {
    (tau - tau_tilde) / (2.0 * tau * tau_tilde)
}

pub fn nsw_kstar(tau: f64, tau_tilde: f64, w: f64) -> Complex64 {
    nsw_kappa(tau, tau_tilde, w) - w - Complex64::i() * nsw_k_inf(tau, tau_tilde)
}

/// (2π)^{-1/2}·∫_{−Ω}^{Ω} f(ω)·e^{−iωs} dω for each s and each of several
/// integrands, by the trapezoid rule with directly evaluated exponentials.
pub fn direct_transform(fs: &[Vec<Complex64>], omega: &[f64], lags: &[f64]) -> Vec<Vec<Complex64>> {
    let n = omega.len();
    let dw = omega[1] - omega[0];
    let c = dw / (2.0 * std::f64::consts::PI).sqrt();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); lags.len()]; fs.len()];
    for (l, &s) in lags.iter().enumerate() {
        for m in 0..n {
            let w = if m == 0 || m == n - 1 { 0.5 } else { 1.0 };
            let e = Complex64::new(0.0, -omega[m] * s).exp() * (w * c);
            for (k, f) in fs.iter().enumerate() {
                out[k][l] += f[m] * e;
            }
        }
    }
    out
}

pub fn uniform_nodes(omega_max: f64, nodes: usize) -> Vec<f64> {
    let dw = 2.0 * omega_max / (nodes - 1) as f64;
    (0..nodes).map(|m| -omega_max + m as f64 * dw).collect()
}

/// Direct transforms of (i·k_*)^k, k = 1..=order, for the NSW law.
pub fn nsw_taylor_terms(order: usize, omega_max: f64, nodes: usize, lags: &[f64]) -> Vec<Vec<Complex64>> {
    let omega = uniform_nodes(omega_max, nodes);
    let base: Vec<Complex64> = omega
        .iter()
        .map(|&w| Complex64::i() * nsw_kstar(TAU, TAU_TILDE, w))
        .collect();
    let mut fs = Vec::with_capacity(order);
    let mut cur = base.clone();
    for _ in 0..order {
        fs.push(cur.clone());
        cur = cur.iter().zip(&base).map(|(a, b)| a * b).collect();
    }
    direct_transform(&fs, &omega, lags)
}

/// max |a − b| / max |b|.
pub fn rel_max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.norm()).fold(0.0, f64::max);
    num / den
}

/// Relative Euclidean error of real vectors.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// A smooth test signal that vanishes at t = 0 and is not band-limited to a grid.
pub fn smooth_signal(t: f64, phase: f64) -> f64 {
    (1.3 * t + phase).sin() * (-0.2 * (t - 2.5).powi(2)).exp() * t
}
