//! Attenuation coefficients κ(ω) and their weak-law decomposition
//! κ(ω) = ω + i·k∞ + k_*(ω).
//!
//! Frequencies are angular frequencies in units where the (high-frequency)
//! sound speed is one, so κ has units of inverse length.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency-domain attenuation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum AttenuationModel {
    /// κ(ω) = ω + i·k∞.
    Constant { k_inf: f64 },
    /// Nachman–Smith–Waag relaxation law, normalized to unit high-frequency
    /// sound speed: κ(ω) = √(τ/τ̃)·ω·√((1 − iωτ̃)/(1 − iωτ)).
    Nsw { tau: f64, tau_tilde: f64 },
    /// κ(ω) = ω + i·a·|ω|^β. A strong law: it has no weak decomposition.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// k_* sampled on a symmetric grid, interpolated linearly and extended by zero.
    TabulatedWeak(TabulatedKstar),
}

/// Samples of k_*(ω) on a sorted grid symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedKstar {
    pub k_inf: f64,
    pub omega: Vec<f64>,
    pub kstar_re: Vec<f64>,
    pub kstar_im: Vec<f64>,
}

impl TabulatedKstar {
    pub fn new(k_inf: f64, omega: Vec<f64>, kstar: &[Complex64]) -> Result<Self> {
        let t = TabulatedKstar {
            k_inf,
            omega,
            kstar_re: kstar.iter().map(|z| z.re).collect(),
            kstar_im: kstar.iter().map(|z| z.im).collect(),
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        let n = self.omega.len();
        if n < 2 || self.kstar_re.len() != n || self.kstar_im.len() != n {
            return Err(Error::input(
                "tabulated k_*: omega, kstar_re and kstar_im need equal length >= 2",
            ));
        }
        if !(self.k_inf.is_finite() && self.k_inf >= 0.0) {
            return Err(Error::input("tabulated k_*: k_inf must be finite and >= 0"));
        }
        if self
            .omega
            .iter()
            .chain(&self.kstar_re)
            .chain(&self.kstar_im)
            .any(|v| !v.is_finite())
        {
            return Err(Error::input("tabulated k_*: non-finite sample"));
        }
        if self.omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("tabulated k_*: omega must be strictly increasing"));
        }
        let scale = self.omega[n - 1].abs().max(1.0);
        for i in 0..n {
            if (self.omega[i] + self.omega[n - 1 - i]).abs() > 1e-12 * scale {
                return Err(Error::input("tabulated k_*: omega grid must be symmetric about 0"));
            }
        }
        Ok(())
    }

    fn eval(&self, omega: f64) -> Complex64 {
        let w = &self.omega;
        let n = w.len();
        if omega < w[0] || omega > w[n - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let hi = w.partition_point(|&x| x < omega).clamp(1, n - 1);
        let lo = hi - 1;
        let s = (omega - w[lo]) / (w[hi] - w[lo]);
        let a = Complex64::new(self.kstar_re[lo], self.kstar_im[lo]);
        let b = Complex64::new(self.kstar_re[hi], self.kstar_im[hi]);
        a + (b - a) * s
    }
}

impl AttenuationModel {
    pub fn constant(k_inf: f64) -> Self {
        AttenuationModel::Constant { k_inf }
    }

    pub fn nsw(tau: f64, tau_tilde: f64) -> Self {
        AttenuationModel::Nsw { tau, tau_tilde }
    }

    pub fn power_law(amplitude: f64, exponent: f64) -> Self {
        AttenuationModel::PowerLaw {
            amplitude,
            exponent,
        }
    }

    /// Checks the parameter constraints of each variant.
    pub fn check(&self) -> Result<()> {
        match self {
            AttenuationModel::Constant { k_inf } => {
                if !(k_inf.is_finite() && *k_inf >= 0.0) {
                    return Err(Error::input(format!("constant law: k_inf = {k_inf} must be >= 0")));
                }
            }
            AttenuationModel::Nsw { tau, tau_tilde } => {
                if !(tau.is_finite() && tau_tilde.is_finite() && *tau_tilde > 0.0 && tau >= tau_tilde)
                {
                    return Err(Error::input(format!(
                        "nsw law: need 0 < tau_tilde <= tau (tau = {tau}, tau_tilde = {tau_tilde})"
                    )));
                }
            }
            AttenuationModel::PowerLaw {
                amplitude,
                exponent,
            } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0 && exponent.is_finite() && *exponent > 0.0)
                {
                    return Err(Error::input(format!(
                        "power law: need amplitude >= 0 and exponent > 0 (got {amplitude}, {exponent})"
                    )));
                }
            }
            AttenuationModel::TabulatedWeak(t) => t.check()?,
        }
        Ok(())
    }

    pub fn is_weak(&self) -> bool {
        !matches!(self, AttenuationModel::PowerLaw { .. })
    }

    /// Short human-readable identifier, stable across runs; used to key caches.
    pub fn fingerprint(&self) -> String {
        match self {
            AttenuationModel::Constant { k_inf } => format!("constant(k_inf={k_inf:e})"),
            AttenuationModel::Nsw { tau, tau_tilde } => {
                format!("nsw(tau={tau:e},tau_tilde={tau_tilde:e})")
            }
            AttenuationModel::PowerLaw {
                amplitude,
                exponent,
            } => format!("power(a={amplitude:e},beta={exponent:e})"),
            AttenuationModel::TabulatedWeak(t) => {
                // FNV-1a over the raw sample bits
                let mut h: u64 = 0xcbf29ce484222325;
                for v in std::iter::once(&t.k_inf)
                    .chain(&t.omega)
                    .chain(&t.kstar_re)
                    .chain(&t.kstar_im)
                {
                    for b in v.to_bits().to_le_bytes() {
                        h ^= b as u64;
                        h = h.wrapping_mul(0x100000001b3);
                    }
                }
                format!("tabulated(n={},hash={h:016x})", t.omega.len())
            }
        }
    }

    /// Evaluates κ(ω).
    pub fn kappa(&self, omega: f64) -> Result<Complex64> {
        if !omega.is_finite() {
            return Err(Error::input(format!("non-finite frequency {omega}")));
        }
        Ok(self.kappa_unchecked(omega))
    }

    pub(crate) fn kappa_unchecked(&self, omega: f64) -> Complex64 {
        let i = Complex64::i();
        match self {
            AttenuationModel::Constant { k_inf } => Complex64::new(omega, *k_inf),
            AttenuationModel::Nsw { tau, tau_tilde } => {
                let ratio = (Complex64::new(1.0, 0.0) - i * omega * tau_tilde)
                    / (Complex64::new(1.0, 0.0) - i * omega * tau);
                // principal root; Re(ratio) > 0 so the branch cut is never crossed on the real axis
                (tau / tau_tilde).sqrt() * omega * ratio.sqrt()
            }
            AttenuationModel::PowerLaw {
                amplitude,
                exponent,
            } => Complex64::new(omega, amplitude * omega.abs().powf(*exponent)),
            AttenuationModel::TabulatedWeak(t) => {
                Complex64::new(omega, t.k_inf) + t.eval(omega)
            }
        }
    }

    /// The constant k∞ of the weak decomposition.
    pub fn k_infinity(&self) -> Result<f64> {
        match self {
            AttenuationModel::Constant { k_inf } => Ok(*k_inf),
            AttenuationModel::Nsw { tau, tau_tilde } => Ok((tau - tau_tilde) / (2.0 * tau * tau_tilde)),
            AttenuationModel::TabulatedWeak(t) => Ok(t.k_inf),
            AttenuationModel::PowerLaw { .. } => Err(Error::Unsupported(
                "power law is a strong attenuation law and has no k_inf decomposition".into(),
            )),
        }
    }

    /// k_*(ω) = κ(ω) − ω − i·k∞.
    pub fn kstar(&self, omega: f64) -> Result<Complex64> {
        let k_inf = self.k_infinity()?;
        let kappa = self.kappa(omega)?;
        Ok(match self {
            AttenuationModel::Constant { .. } => Complex64::new(0.0, 0.0),
            AttenuationModel::TabulatedWeak(t) => t.eval(omega),
            _ => kappa - Complex64::new(omega, k_inf),
        })
    }

    pub(crate) fn kstar_unchecked(&self, omega: f64, k_inf: f64) -> Complex64 {
        match self {
            AttenuationModel::Constant { .. } => Complex64::new(0.0, 0.0),
            AttenuationModel::TabulatedWeak(t) => t.eval(omega),
            _ => self.kappa_unchecked(omega) - Complex64::new(omega, k_inf),
        }
    }

    /// Leading high-frequency behaviour k_*(ω) ≈ a/(ω + iγ): returns (a, γ).
    ///
    /// Zero amplitude for laws whose k_* is compactly supported or vanishes.
    pub fn kstar_tail(&self) -> Result<(f64, f64)> {
        match self {
            AttenuationModel::Nsw { tau, tau_tilde } => {
                let d = (tau - tau_tilde) / (tau * tau_tilde);
                Ok((d / (2.0 * tau) + d * d / 8.0, 1.0 / tau))
            }
            AttenuationModel::Constant { .. } | AttenuationModel::TabulatedWeak(_) => Ok((0.0, 1.0)),
            AttenuationModel::PowerLaw { .. } => Err(Error::Unsupported(
                "power law has no weak decomposition".into(),
            )),
        }
    }
}

/// Outcome of classifying sampled κ against the weak/strong definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Weak,
    Strong,
    Neither,
}

/// Least-squares power fit Im κ ≈ κ₀|ω|^β over |ω| ≥ ω₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub omega0: f64,
    pub beta: f64,
    /// Largest κ₀ with Im κ ≥ κ₀|ω|^β at every fitted sample.
    pub kappa0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// max |κ(−ω) + conj κ(ω)|
    pub symmetry_defect: f64,
    pub min_im: f64,
    /// min |κ'(ω)|² + Im κ(ω)
    pub coercivity_min: f64,
    pub fd_step: f64,
    pub classification: Classification,
    /// Discrete L² norm of k_* (weak variants only).
    pub kstar_l2: Option<f64>,
    /// Log-log slope of Im κ over the upper half of the frequency range.
    pub tail_slope: f64,
    pub fit: Option<PowerFit>,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// Absolute finite-difference step; defaults to 1e-4 × the smallest grid spacing.
    pub fd_step: Option<f64>,
    /// Lower frequency bound of the strong-law fit.
    pub omega0: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            fd_step: None,
            omega0: 1.0,
        }
    }
}

/// Symmetric uniform frequency grid of `n` points on [−ω_max, ω_max].
pub fn symmetric_grid(omega_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| -omega_max + 2.0 * omega_max * i as f64 / (n - 1) as f64)
        .collect()
}

/// Audits the defining properties of κ on a frequency grid.
pub fn validate_model(
    model: &AttenuationModel,
    omega_grid: &[f64],
    opts: ValidationOptions,
) -> Result<ValidationReport> {
    model.check()?;
    let mut grid: Vec<f64> = omega_grid.iter().copied().filter(|w| w.is_finite()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 3 {
        return Err(Error::input("validation grid needs at least 3 distinct finite points"));
    }
    let min_spacing = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let fd_step = opts.fd_step.unwrap_or(1e-4 * min_spacing);
    if !(fd_step > 0.0) {
        return Err(Error::input("finite-difference step must be positive"));
    }

    let kappa: Vec<Complex64> = grid.iter().map(|&w| model.kappa_unchecked(w)).collect();

    let symmetry_defect = grid
        .iter()
        .zip(&kappa)
        .map(|(&w, k)| (model.kappa_unchecked(-w) + k.conj()).norm())
        .fold(0.0, f64::max);
    let min_im = kappa.iter().map(|k| k.im).fold(f64::INFINITY, f64::min);

    let coercivity_min = grid
        .iter()
        .zip(&kappa)
        .map(|(&w, k)| {
            let (wp, wm) = (w + fd_step, w - fd_step);
            // divide by the represented step so linear laws differentiate exactly
            let deriv = (model.kappa_unchecked(wp) - model.kappa_unchecked(wm)) / (wp - wm);
            deriv.norm_sqr() + k.im
        })
        .fold(f64::INFINITY, f64::min);

    let kstar_l2 = model.k_infinity().ok().map(|k_inf| {
        let mut acc = 0.0;
        for i in 0..grid.len() {
            let lo = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let hi = if i + 1 < grid.len() { grid[i + 1] - grid[i] } else { 0.0 };
            acc += 0.5 * (lo + hi) * model.kstar_unchecked(grid[i], k_inf).norm_sqr();
        }
        acc.sqrt()
    });

    let (classification, tail_slope, fit) = classify(&grid, &kappa, opts.omega0);

    Ok(ValidationReport {
        symmetry_defect,
        min_im,
        coercivity_min,
        fd_step,
        classification,
        kstar_l2,
        tail_slope,
        fit,
    })
}

fn log_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

const SLOPE_THRESHOLD: f64 = 0.25;

fn classify(grid: &[f64], kappa: &[Complex64], omega0: f64) -> (Classification, f64, Option<PowerFit>) {
    let wmax = grid.iter().map(|w| w.abs()).fold(0.0, f64::max);
    let tail_cut = 0.5 * wmax;

    let loglog = |pred: &dyn Fn(f64) -> bool| -> Vec<(f64, f64)> {
        grid.iter()
            .zip(kappa)
            .filter(|(w, k)| pred(w.abs()) && w.abs() > 0.0 && k.im > 0.0)
            .map(|(w, k)| (w.abs().ln(), k.im.ln()))
            .collect()
    };

    let tail_pts = loglog(&|a| a >= tail_cut);
    let tail_slope = log_slope(&tail_pts).map(|s| s.0).unwrap_or(0.0);

    let fit = {
        let pts = loglog(&|a| a >= omega0);
        log_slope(&pts).and_then(|(beta, _)| {
            let above: Vec<_> = grid
                .iter()
                .zip(kappa)
                .filter(|(w, _)| w.abs() >= omega0)
                .collect();
            if above.is_empty() {
                return None;
            }
            let kappa0 = above
                .iter()
                .map(|(w, k)| k.im / w.abs().powf(beta))
                .fold(f64::INFINITY, f64::min);
            Some(PowerFit {
                omega0,
                beta,
                kappa0,
            })
        })
    };

    let min_im = kappa.iter().map(|k| k.im).fold(f64::INFINITY, f64::min);
    if min_im < -1e-12 {
        return (Classification::Neither, tail_slope, fit);
    }

    if tail_slope >= SLOPE_THRESHOLD {
        if let Some(f) = fit {
            if f.beta > 0.0 && f.kappa0 > 0.0 {
                return (Classification::Strong, tail_slope, fit);
            }
        }
        return (Classification::Neither, tail_slope, fit);
    }

    // weak: Im κ levels off and κ − ω − i k∞ does not grow towards the band edge
    let tail: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].abs() >= tail_cut).collect();
    let k_inf_est = tail.iter().map(|&i| kappa[i].im).sum::<f64>() / tail.len().max(1) as f64;
    let resid = |i: usize| (kappa[i] - Complex64::new(grid[i], k_inf_est)).norm();
    let tail_max = tail.iter().map(|&i| resid(i)).fold(0.0, f64::max);
    let inner_max = (0..grid.len())
        .filter(|&i| grid[i].abs() < tail_cut)
        .map(resid)
        .fold(0.0, f64::max);
    let scale = 1e-12 * (1.0 + wmax);
    if tail_slope.abs() < SLOPE_THRESHOLD && tail_max <= inner_max + scale {
        (Classification::Weak, tail_slope, fit)
    } else {
        (Classification::Neither, tail_slope, fit)
    }
}
