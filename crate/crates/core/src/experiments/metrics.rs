//! Noise injection, grid transfer and image metrics.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recon::ReconImage;
use crate::wavefield::{Geometry, SensorArray, TimeGrid, WaveData};

/// Adds i.i.d. uniform noise with standard deviation `level`·max|data|.
///
/// The amplitude is level·max·√3, so "20% noise" means std = 0.2·max.
pub fn add_noise(data: &WaveData, level: f64, seed: u64) -> Result<WaveData> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::input(format!("noise level must be >= 0, got {level}")));
    }
    if level == 0.0 {
        return Ok(data.clone());
    }
    let a = level * data.max_abs() * 3f64.sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = data.values.clone();
    if a > 0.0 {
        // row-major order fixes the stream-to-sample assignment
        for v in out.iter_mut() {
            *v += rng.gen_range(-a..=a);
        }
    }
    Ok(data.with_values(data.kind, out))
}

/// Position of `x` in a sorted uniform sample set as (index, weight).
fn bracket(x: f64, x0: f64, step: f64, n: usize) -> Option<(usize, f64)> {
    let s = (x - x0) / step;
    let tol = 1e-9;
    if s < -tol || s > (n - 1) as f64 + tol {
        return None;
    }
    let s = s.clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n.saturating_sub(2));
    Some((i, s - i as f64))
}

/// Bilinear transfer to a coarser (or equal) time grid and sensor array on the
/// same curve. Circle angles wrap periodically.
pub fn resample_data(data: &WaveData, time: &TimeGrid, sensors: &SensorArray) -> Result<WaveData> {
    let same_curve = match (data.sensors.geometry, sensors.geometry) {
        (Geometry::Circle { radius: a, .. }, Geometry::Circle { radius: b, .. }) => a == b,
        (
            Geometry::Line {
                length: la,
                standoff: sa,
                ..
            },
            Geometry::Line {
                length: lb,
                standoff: sb,
                ..
            },
        ) => la == lb && sa == sb,
        _ => false,
    };
    if !same_curve {
        return Err(Error::GridMismatch("resampling requires the same measurement curve".into()));
    }
    if time.dt < data.time.dt * (1.0 - 1e-12) || sensors.len() > data.sensors.len() {
        return Err(Error::input("resampling target must be coarser or equal in time and sensors"));
    }
    if time.same_as(&data.time) && sensors.same_as(&data.sensors) {
        return Ok(data.clone());
    }

    let src_n = data.time.n;
    let rows: Vec<(usize, f64)> = (0..time.n)
        .map(|i| {
            bracket(time.t(i), data.time.t(0), data.time.dt, src_n).ok_or_else(|| {
                Error::input(format!("time {} lies outside the source record", time.t(i)))
            })
        })
        .collect::<Result<_>>()?;

    let src_arc = data.sensors.arc_parameter();
    let m = src_arc.len();
    let cols: Vec<(usize, usize, f64)> = match sensors.geometry {
        Geometry::Circle { .. } => {
            let step = 2.0 * std::f64::consts::PI / m as f64;
            sensors
                .arc_parameter()
                .iter()
                .map(|&a| {
                    let s = a / step;
                    let j = (s.floor() as usize) % m;
                    (j, (j + 1) % m, s - s.floor())
                })
                .collect()
        }
        Geometry::Line { .. } => {
            let step = src_arc[1] - src_arc[0];
            sensors
                .arc_parameter()
                .iter()
                .map(|&x| {
                    bracket(x, src_arc[0], step, m)
                        .map(|(j, w)| (j, j + 1, w))
                        .ok_or_else(|| Error::input(format!("sensor at x = {x} lies outside the source line")))
                })
                .collect::<Result<_>>()?
        }
    };

    let v = &data.values;
    let out = Array2::from_shape_fn((time.n, sensors.len()), |(i, j)| {
        let (r, wr) = rows[i];
        let (c0, c1, wc) = cols[j];
        let r1 = (r + 1).min(src_n - 1);
        let top = v[[r, c0]] * (1.0 - wc) + v[[r, c1]] * wc;
        let bot = v[[r1, c0]] * (1.0 - wc) + v[[r1, c1]] * wc;
        top * (1.0 - wr) + bot * wr
    });
    WaveData::new(data.kind, *time, sensors.clone(), out)
}

fn check_same_grid(a: &ReconImage, b: &ReconImage) -> Result<()> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch("images are on different grids".into()));
    }
    Ok(())
}

/// ‖image − truth‖₂ / ‖truth‖₂.
pub fn rel_l2_error(image: &ReconImage, truth: &ReconImage) -> Result<f64> {
    check_same_grid(image, truth)?;
    let den: f64 = truth.values.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::input("relative error against an all-zero truth"));
    }
    let num: f64 = image
        .values
        .iter()
        .zip(truth.values.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((num / den).sqrt())
}

/// Relative L² error restricted to the pixels where the truth is non-zero.
pub fn rel_l2_error_on_support(image: &ReconImage, truth: &ReconImage) -> Result<f64> {
    check_same_grid(image, truth)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in image.values.iter().zip(truth.values.iter()) {
        if *b != 0.0 {
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    if den == 0.0 {
        return Err(Error::input("relative error against an all-zero truth"));
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// The row at fixed y, running along x.
    X,
    /// The column at fixed x, running along y.
    Y,
}

/// Nearest row (axis X) or column (axis Y) to `coordinate`, with its abscissae.
pub fn cross_section(image: &ReconImage, axis: Axis, coordinate: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = &image.grid;
    let (fixed_origin, fixed_n, run_origin, run_n) = match axis {
        Axis::X => (g.origin[1], g.ny, g.origin[0], g.nx),
        Axis::Y => (g.origin[0], g.nx, g.origin[1], g.ny),
    };
    let s = (coordinate - fixed_origin) / g.spacing;
    if !(s > -0.5 && s < fixed_n as f64 - 0.5) {
        return Err(Error::input(format!("cross-section coordinate {coordinate} is outside the image")));
    }
    let k = (s.round() as usize).min(fixed_n - 1);
    let coords = (0..run_n).map(|i| run_origin + i as f64 * g.spacing).collect();
    let values = match axis {
        Axis::X => image.values.row(k).to_vec(),
        Axis::Y => image.values.column(k).to_vec(),
    };
    Ok((coords, values))
}
