//! Universal back-projection in 2D (circle or line) and 3D (sphere).

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ImageGrid, Method, ReconImage};
use crate::error::{Error, Result};
use crate::wavefield::{DataKind, SensorArray, SphericalArray, TimeGrid, WaveData};

/// Quadrature controls for the 2D inner integral, as fractions of Δ_T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UbpOptions {
    /// Trapezoid step in u = √(t² − d²).
    pub u_step: f64,
    /// Spacing of the per-sensor distance table that is interpolated per pixel.
    pub d_step: f64,
}

impl Default for UbpOptions {
    fn default() -> Self {
        UbpOptions {
            u_step: 0.5,
            d_step: 0.5,
        }
    }
}

impl UbpOptions {
    fn check(&self) -> Result<()> {
        for (name, v) in [("u_step", self.u_step), ("d_step", self.d_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!("back-projection {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Piecewise-linear trace on the sample times t_i = (i+1)Δ_T, zero past T.
struct Trace<'a> {
    dt: f64,
    v: &'a [f64],
}

impl Trace<'_> {
    #[inline]
    fn at(&self, t: f64) -> f64 {
        let s = t / self.dt - 1.0;
        let n = self.v.len();
        if s <= 0.0 {
            // before the first sample; every admissible pixel has d ≫ Δ_T
            return self.v[0];
        }
        if s > (n - 1) as f64 {
            return 0.0;
        }
        let i = (s as usize).min(n - 2);
        let w = s - i as f64;
        self.v[i] * (1.0 - w) + self.v[i + 1] * w
    }
}

/// Central difference along a uniformly sampled column, one-sided at the ends.
fn derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| match i {
            0 => (v[1] - v[0]) / dt,
            _ if i == n - 1 => (v[n - 1] - v[n - 2]) / dt,
            _ => (v[i + 1] - v[i - 1]) / (2.0 * dt),
        })
        .collect()
}

/// F(d) = ∫_0^{√(T²−d²)} g(√(d²+u²))/√(d²+u²) du by the uniform trapezoid rule.
fn inner_integral(g: &Trace<'_>, d: f64, t_final: f64, du: f64) -> f64 {
    if d >= t_final {
        return 0.0;
    }
    let u_max = (t_final * t_final - d * d).sqrt();
    let n = ((u_max / du).ceil() as usize).max(1);
    let h = u_max / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let u = k as f64 * h;
        let r = (d * d + u * u).sqrt();
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * g.at(r) / r;
    }
    acc * h
}

/// Per-sensor table of F on an equispaced distance grid.
struct DistanceTable {
    d0: f64,
    step: f64,
    f: Vec<f64>,
}

impl DistanceTable {
    #[inline]
    fn at(&self, d: f64) -> f64 {
        let s = (d - self.d0) / self.step;
        let i = (s.floor().max(0.0) as usize).min(self.f.len() - 2);
        let w = s - i as f64;
        self.f[i] * (1.0 - w) + self.f[i + 1] * w
    }
}

fn distance_range(xi: [f64; 2], grid: &ImageGrid) -> (f64, f64) {
    let [x0, y0] = grid.origin;
    let x1 = x0 + (grid.nx - 1) as f64 * grid.spacing;
    let y1 = y0 + (grid.ny - 1) as f64 * grid.spacing;
    let cx = xi[0].clamp(x0, x1);
    let cy = xi[1].clamp(y0, y1);
    let dmin = (xi[0] - cx).hypot(xi[1] - cy);
    let dmax = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
        .iter()
        .map(|&(x, y)| (xi[0] - x).hypot(xi[1] - y))
        .fold(0.0, f64::max);
    (dmin, dmax)
}

/// h(x) = −(4/Ω₀)·Σ_j w_j F_j(|ξ_j − x|)·n_j·(ξ_j − x), with g = ∂_t(p/t).
///
/// Accepts lossless or attenuated pressure; the latter gives the uncorrected
/// reconstruction.
pub fn ubp_2d(p: &WaveData, grid: &ImageGrid, opts: &UbpOptions) -> Result<ReconImage> {
    opts.check()?;
    if !matches!(p.kind, DataKind::Pressure | DataKind::Attenuated) {
        return Err(Error::input(format!("back-projection needs pressure data, got {:?}", p.kind)));
    }
    let sensors: &SensorArray = &p.sensors;
    for corner in grid.corners() {
        if !sensors.is_interior(corner) {
            return Err(Error::input(format!(
                "image point ({:.4}, {:.4}) is not inside the measurement curve",
                corner[0], corner[1]
            )));
        }
    }
    let dt = p.time.dt;
    let t_final = p.time.t_final();
    let du = opts.u_step * dt;
    let dd = opts.d_step * dt;

    let tables: Vec<DistanceTable> = (0..sensors.len())
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = p.values.column(j).to_vec();
            let f: Vec<f64> = col
                .iter()
                .enumerate()
                .map(|(i, v)| v / p.time.t(i))
                .collect();
            let g = derivative(&f, dt);
            let g = Trace { dt, v: &g };
            let (dmin, dmax) = distance_range(sensors.points[j], grid);
            let d0 = (dmin - dd).max(0.5 * dd);
            let n = (((dmax - d0) / dd).ceil() as usize + 2).max(2);
            let f = (0..n).map(|k| inner_integral(&g, d0 + k as f64 * dd, t_final, du)).collect();
            DistanceTable { d0, step: dd, f }
        })
        .collect();

    let scale = -4.0 / sensors.geometry.omega0();
    let tables = &tables;
    let rows: Vec<f64> = (0..grid.ny)
        .into_par_iter()
        .flat_map_iter(|iy| {
            (0..grid.nx).map(move |ix| {
                let x = grid.coord(ix, iy);
                let mut acc = 0.0;
                for (j, table) in tables.iter().enumerate() {
                    let xi = sensors.points[j];
                    let n = sensors.normals[j];
                    let (dx, dy) = (xi[0] - x[0], xi[1] - x[1]);
                    let d = dx.hypot(dy);
                    acc += sensors.weights[j] * table.at(d) * (n[0] * dx + n[1] * dy);
                }
                scale * acc
            })
        })
        .collect();
    let values = Array2::from_shape_vec((grid.ny, grid.nx), rows).expect("row-major image");

    ReconImage::new(*grid, values, Method::NaiveUbp, p)
}

/// Xu–Wang formula on a sphere:
/// h(x) = (2/Ω₀)·Σ_j w_j [p − d ∂_t p](d_j, ξ_j)/d_j² · n_j·(ξ_j − x)/d_j, Ω₀ = 4π.
///
/// `p` holds one column per sensor of `array`, sampled on `time`.
pub fn ubp_3d(p: &Array2<f64>, time: &TimeGrid, array: &SphericalArray, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    if p.dim() != (time.n, array.len()) {
        return Err(Error::GridMismatch(format!(
            "traces are {:?}, expected {} x {}",
            p.dim(),
            time.n,
            array.len()
        )));
    }
    if let Some(x) = points
        .iter()
        .find(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() >= array.radius)
    {
        return Err(Error::input(format!("point {x:?} is not inside the sensor sphere")));
    }
    let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..array.len())
        .map(|j| {
            let v = p.column(j).to_vec();
            let dv = derivative(&v, time.dt);
            (v, dv)
        })
        .collect();
    let scale = 2.0 / (4.0 * std::f64::consts::PI);
    Ok(points
        .par_iter()
        .map(|x| {
            let mut acc = 0.0;
            for (j, (v, dv)) in cols.iter().enumerate() {
                let xi = array.points[j];
                let n = array.normals[j];
                let r = [xi[0] - x[0], xi[1] - x[1], xi[2] - x[2]];
                let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                let pv = Trace { dt: time.dt, v }.at(d);
                let dpv = Trace { dt: time.dt, v: dv }.at(d);
                let cos = (n[0] * r[0] + n[1] * r[1] + n[2] * r[2]) / d;
                acc += array.weights[j] * (pv - d * dpv) / (d * d) * cos;
            }
            scale * acc
        })
        .collect())
}
