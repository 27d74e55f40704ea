//! Exact-in-time Fourier propagator for the lossless wave equation with unit
//! sound speed on a periodic square grid.
//!
//! For initial pressure h and zero initial velocity the solution is
//! p̂(t, k) = ĥ(k)·cos(|k|t), and its time integral is q̂(t, k) = ĥ(k)·sin(|k|t)/|k|
//! (q̂ = ĥ·t for k = 0). No time stepping is involved.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{DataKind, Phantom, SensorArray, TimeGrid, WaveData};
use crate::error::{Error, Result};

/// Cell-centred periodic square grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub n: usize,
    pub spacing: f64,
    /// Coordinates of the centre of cell (0, 0).
    pub origin: [f64; 2],
}

impl PeriodicGrid {
    /// Grid of n cells centred on the origin.
    pub fn centered(n: usize, spacing: f64) -> Self {
        let origin = -0.5 * spacing * (n as f64 - 1.0);
        PeriodicGrid {
            n,
            spacing,
            origin: [origin, origin],
        }
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    /// |k| for every (row, col) frequency index.
    fn wavenumber_magnitude(&self) -> Array2<f64> {
        let n = self.n;
        let dk = 2.0 * PI / self.side();
        let k1: Vec<f64> = (0..n)
            .map(|a| {
                let s = if a <= n / 2 { a as f64 } else { a as f64 - n as f64 };
                s * dk
            })
            .collect();
        Array2::from_shape_fn((n, n), |(a, b)| k1[a].hypot(k1[b]))
    }

    /// Bilinear stencil (flat indices and weights) for a point.
    fn stencil(&self, p: [f64; 2]) -> Option<([usize; 4], [f64; 4])> {
        let u = (p[0] - self.origin[0]) / self.spacing;
        let v = (p[1] - self.origin[1]) / self.spacing;
        let (ix, iy) = (u.floor(), v.floor());
        let last = (self.n - 1) as f64;
        if !(ix >= 0.0 && iy >= 0.0 && ix < last && iy < last) {
            return None;
        }
        let (fx, fy) = (u - ix, v - iy);
        let (ix, iy) = (ix as usize, iy as usize);
        let base = iy * self.n + ix;
        Some((
            [base, base + 1, base + self.n, base + self.n + 1],
            [
                (1.0 - fx) * (1.0 - fy),
                fx * (1.0 - fy),
                (1.0 - fx) * fy,
                fx * fy,
            ],
        ))
    }
}

/// 2D FFT over a square row-major buffer. The forward transform leaves the
/// spectrum transposed; the inverse expects that layout and restores the
/// original one. |k| is symmetric in its two indices, so callers never notice.
struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    fn transpose(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for r in 0..n {
            for c in (r + 1)..n {
                buf.swap(r * n + c, c * n + r);
            }
        }
    }

    fn forward_t(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, scratch);
        self.transpose(buf);
        self.fwd.process_with_scratch(buf, scratch);
    }

    fn inverse_t(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, scratch);
        self.transpose(buf);
        self.inv.process_with_scratch(buf, scratch);
        let norm = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|z| *z *= norm);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForwardOptions {
    /// Extra cells of padding beyond the wraparound-free minimum.
    pub margin_cells: usize,
    /// Force a computational grid size (cells per side) instead of the automatic choice.
    pub grid_size: Option<usize>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            margin_cells: 4,
            grid_size: None,
        }
    }
}

fn is_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5, 7] {
        while n.is_multiple_of(p) {
            n /= p;
        }
    }
    n == 1
}

/// Smallest FFT-friendly grid size such that no periodic image of the phantom
/// reaches any sensor before the final time and every sensor lies inside.
///
/// A wrapped signal travels at least L − |ξ| − r_support to reach ξ, so the
/// periodic side L must exceed T + max|ξ| + r_support.
pub fn padded_grid_size(phantom: &Phantom, time: &TimeGrid, sensors: &SensorArray, margin_cells: usize) -> usize {
    let h = phantom.spacing;
    let margin = margin_cells as f64 * h;
    let r_sens = sensors.max_radius();
    let wrap_side = time.t_final() + r_sens + phantom.support_radius() + margin;
    let contain_side = 2.0 * (r_sens + margin + 2.0 * h);
    let need = (wrap_side.max(contain_side) / h).ceil() as usize;
    let base = phantom.size();
    let mut n = need.max(base);
    loop {
        if (n - base).is_multiple_of(2) && is_smooth(n) {
            return n;
        }
        n += 1;
    }
}

/// Embeds the phantom raster in a zero-padded periodic grid of size n.
fn embed(phantom: &Phantom, n: usize) -> (PeriodicGrid, Vec<Complex64>) {
    let m = phantom.size();
    let off = (n - m) / 2;
    let grid = PeriodicGrid {
        n,
        spacing: phantom.spacing,
        origin: [
            phantom.origin[0] - off as f64 * phantom.spacing,
            phantom.origin[1] - off as f64 * phantom.spacing,
        ],
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for ((iy, ix), v) in phantom.values.indexed_iter() {
        buf[(iy + off) * n + ix + off] = Complex64::new(*v, 0.0);
    }
    (grid, buf)
}

/// Lossless pressure p(t_i, ξ_j) for initial pressure `phantom`.
pub fn spectral_forward(
    phantom: &Phantom,
    time: &TimeGrid,
    sensors: &SensorArray,
    opts: ForwardOptions,
) -> Result<WaveData> {
    let n = match opts.grid_size {
        Some(n) => {
            if n < phantom.size() || !(n - phantom.size()).is_multiple_of(2) {
                return Err(Error::input(format!(
                    "forward grid size {n} must be >= phantom size {} with even difference",
                    phantom.size()
                )));
            }
            n
        }
        None => padded_grid_size(phantom, time, sensors, opts.margin_cells),
    };
    let (grid, mut spectrum) = embed(phantom, n);

    let stencils: Vec<([usize; 4], [f64; 4])> = sensors
        .points
        .iter()
        .map(|&p| {
            grid.stencil(p).ok_or_else(|| {
                Error::input(format!(
                    "sensor ({:.4}, {:.4}) lies outside the computational domain of side {:.4}",
                    p[0],
                    p[1],
                    grid.side()
                ))
            })
        })
        .collect::<Result<_>>()?;

    let fft = Fft2::new(n);
    let mut scratch = fft.scratch();
    fft.forward_t(&mut spectrum, &mut scratch);
    let kmag = grid.wavenumber_magnitude();
    let kmag = kmag.as_slice().expect("standard layout");

    let times = time.times();
    let pairs: Vec<(usize, Option<usize>)> = (0..times.len())
        .step_by(2)
        .map(|i| (i, (i + 1 < times.len()).then_some(i + 1)))
        .collect();

    // two real fields per complex inverse transform: p_a + i·p_b
    type Row = (usize, Vec<f64>);
    let rows: Vec<(usize, Vec<f64>, Option<Row>)> = pairs
        .par_iter()
        .map_init(
            || (vec![Complex64::new(0.0, 0.0); n * n], fft.scratch()),
            |(buf, scratch), &(ia, ib)| {
                let ta = times[ia];
                let tb = ib.map(|i| times[i]);
                for ((z, h), k) in buf.iter_mut().zip(&spectrum).zip(kmag) {
                    let ca = (k * ta).cos();
                    let cb = tb.map_or(0.0, |t| (k * t).cos());
                    *z = h * Complex64::new(ca, cb);
                }
                fft.inverse_t(buf, scratch);
                let sample = |part: fn(&Complex64) -> f64| -> Vec<f64> {
                    stencils
                        .iter()
                        .map(|(idx, w)| idx.iter().zip(w).map(|(&i, &w)| w * part(&buf[i])).sum())
                        .collect()
                };
                let a = sample(|z| z.re);
                let b = ib.map(|i| (i, sample(|z| z.im)));
                (ia, a, b)
            },
        )
        .collect();

    let mut values = Array2::zeros((time.n, sensors.len()));
    for (ia, a, b) in rows {
        values.row_mut(ia).assign(&ndarray::ArrayView1::from(&a));
        if let Some((ib, b)) = b {
            values.row_mut(ib).assign(&ndarray::ArrayView1::from(&b));
        }
    }
    WaveData::new(DataKind::Pressure, *time, sensors.clone(), values)
}

fn field_spectrum(field: &Array2<f64>) -> Result<(Fft2, Vec<Complex64>)> {
    let (r, c) = field.dim();
    if r != c || r < 2 {
        return Err(Error::input("periodic propagation needs a square field"));
    }
    let fft = Fft2::new(r);
    let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut scratch = fft.scratch();
    fft.forward_t(&mut buf, &mut scratch);
    Ok((fft, buf))
}

/// Pressure and its time integral on the whole periodic grid at time `t`.
pub fn propagate(field: &Array2<f64>, spacing: f64, t: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = field.nrows();
    let (fft, spectrum) = field_spectrum(field)?;
    let kmag = PeriodicGrid::centered(n, spacing).wavenumber_magnitude();
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .zip(kmag.iter())
        .map(|(h, &k)| {
            let c = (k * t).cos();
            let s = if k == 0.0 { t } else { (k * t).sin() / k };
            // pack p in the real part and q in the imaginary part
            h * Complex64::new(c, s)
        })
        .collect();
    let mut scratch = fft.scratch();
    fft.inverse_t(&mut buf, &mut scratch);
    let p = Array2::from_shape_fn((n, n), |(i, j)| buf[i * n + j].re);
    let q = Array2::from_shape_fn((n, n), |(i, j)| buf[i * n + j].im);
    Ok((p, q))
}

/// Σ_k |p̂(t,k)|² + |k|²|q̂(t,k)|², which the exact propagator conserves.
pub fn spectral_energy(field: &Array2<f64>, spacing: f64, t: f64) -> Result<f64> {
    let n = field.nrows();
    let (_, spectrum) = field_spectrum(field)?;
    let kmag = PeriodicGrid::centered(n, spacing).wavenumber_magnitude();
    Ok(spectrum
        .iter()
        .zip(kmag.iter())
        .map(|(h, &k)| {
            let p = h * (k * t).cos();
            let kq = if k == 0.0 { Complex64::new(0.0, 0.0) } else { h * (k * t).sin() };
            p.norm_sqr() + kq.norm_sqr()
        })
        .sum())
}
