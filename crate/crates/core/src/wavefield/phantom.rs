use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform ellipse used to build analytic phantoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    /// Semi-axes along the rotated x and y directions.
    pub axes: [f64; 2],
    /// Counter-clockwise rotation in radians.
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let (s, c) = self.angle.sin_cos();
        let u = (dx * c + dy * s) / self.axes[0];
        let v = (-dx * s + dy * c) / self.axes[1];
        u * u + v * v <= 1.0
    }

    fn bounding_radius(&self) -> f64 {
        self.center[0].hypot(self.center[1]) + self.axes[0].max(self.axes[1])
    }
}

/// Absorption density h on a cell-centred square raster.
///
/// `values[[iy, ix]]` is the sample at (origin[0] + ix·spacing, origin[1] + iy·spacing).
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub spacing: f64,
    pub origin: [f64; 2],
    pub values: Array2<f64>,
    pub ellipses: Option<Vec<Ellipse>>,
}

/// Shepp–Logan lengths are multiplied by this so the head fits in (−0.8, 0.8)².
pub const SHEPP_LOGAN_SCALE: f64 = 0.86;

// (intensity, semi-axis x, semi-axis y, centre x, centre y, angle in degrees)
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (2.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.98, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.02, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.02, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.01, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.01, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.01, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.01, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.01, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.01, 0.023, 0.046, 0.06, -0.605, 0.0),
];

impl Phantom {
    /// Point-samples a sum of ellipses at pixel centres of an n×n grid covering
    /// (−half_extent, half_extent)².
    pub fn from_ellipses(ellipses: Vec<Ellipse>, grid_size: usize, half_extent: f64) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::input("phantom grid needs at least 2 pixels per side"));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::input(format!("half_extent must be positive, got {half_extent}")));
        }
        let spacing = 2.0 * half_extent / grid_size as f64;
        let origin = [-half_extent + 0.5 * spacing; 2];
        let values = rasterize(&ellipses, grid_size, spacing, origin);
        Ok(Phantom {
            spacing,
            origin,
            values,
            ellipses: Some(ellipses),
        })
    }

    /// Re-rasterizes the analytic description on a different grid.
    pub fn resampled(&self, grid_size: usize, half_extent: f64) -> Result<Self> {
        match &self.ellipses {
            Some(e) => Phantom::from_ellipses(e.clone(), grid_size, half_extent),
            None => Err(Error::Unsupported(
                "raster-only phantom cannot be re-rasterized".into(),
            )),
        }
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn half_extent(&self) -> f64 {
        0.5 * self.spacing * self.size() as f64
    }

    pub fn coord(&self, i: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.spacing, self.origin[1] + i as f64 * self.spacing]
    }

    /// Analytic value when available, otherwise the nearest raster sample.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        if let Some(ell) = &self.ellipses {
            return ell
                .iter()
                .filter(|e| e.contains(x, y))
                .map(|e| e.intensity)
                .sum();
        }
        let ix = ((x - self.origin[0]) / self.spacing).round();
        let iy = ((y - self.origin[1]) / self.spacing).round();
        let n = self.size() as f64;
        if ix < 0.0 || iy < 0.0 || ix >= n || iy >= n {
            return 0.0;
        }
        self.values[[iy as usize, ix as usize]]
    }

    /// Radius of the smallest origin-centred disk containing every non-zero pixel
    /// (or the analytic support when known).
    pub fn support_radius(&self) -> f64 {
        if let Some(ell) = &self.ellipses {
            return ell.iter().map(Ellipse::bounding_radius).fold(0.0, f64::max);
        }
        let mut r: f64 = 0.0;
        for ((iy, ix), v) in self.values.indexed_iter() {
            if *v != 0.0 {
                let x = self.origin[0] + ix as f64 * self.spacing;
                let y = self.origin[1] + iy as f64 * self.spacing;
                r = r.max(x.hypot(y) + self.spacing);
            }
        }
        r
    }

    /// Σ h · pixel area.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.spacing * self.spacing
    }
}

fn rasterize(ellipses: &[Ellipse], n: usize, spacing: f64, origin: [f64; 2]) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(iy, ix)| {
        let x = origin[0] + ix as f64 * spacing;
        let y = origin[1] + iy as f64 * spacing;
        ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum()
    })
}

/// Classical 10-ellipse Shepp–Logan head, scaled by [`SHEPP_LOGAN_SCALE`].
pub fn make_shepp_logan(grid_size: usize, half_extent: f64) -> Result<Phantom> {
    if grid_size < 16 {
        return Err(Error::input(format!("Shepp-Logan grid_size must be >= 16, got {grid_size}")));
    }
    if half_extent < 0.8 {
        return Err(Error::input(format!(
            "half_extent {half_extent} < 0.8 would clip the phantom support"
        )));
    }
    let s = SHEPP_LOGAN_SCALE;
    let ellipses = SHEPP_LOGAN
        .iter()
        .map(|&(c, a, b, x0, y0, deg)| Ellipse {
            center: [s * x0, s * y0],
            axes: [s * a, s * b],
            angle: deg.to_radians(),
            intensity: c,
        })
        .collect();
    Phantom::from_ellipses(ellipses, grid_size, half_extent)
}

/// Centred uniform disk.
pub fn make_disk(radius: f64, intensity: f64, grid_size: usize, half_extent: f64) -> Result<Phantom> {
    if !(radius > 0.0 && radius < half_extent) {
        return Err(Error::input(format!(
            "disk radius {radius} must be positive and inside half_extent {half_extent}"
        )));
    }
    Phantom::from_ellipses(
        vec![Ellipse {
            center: [0.0, 0.0],
            axes: [radius, radius],
            angle: 0.0,
            intensity,
        }],
        grid_size,
        half_extent,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn shepp_logan_peak_and_outside() {
        let p = make_shepp_logan(128, 2.0).unwrap();
        let max = p.values.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, 2.0);
        assert_eq!(p.value_at(1.5, 1.5), 0.0);
        assert!(p.support_radius() < 0.8 * 2f64.sqrt());
        // the whole support sits inside (−0.8, 0.8)²
        for ((iy, ix), v) in p.values.indexed_iter() {
            if *v != 0.0 {
                let (x, y) = (p.origin[0] + ix as f64 * p.spacing, p.origin[1] + iy as f64 * p.spacing);
                assert!(x.abs() < 0.8 && y.abs() < 0.8);
            }
        }
    }

    #[test]
    fn shepp_logan_rejects_clipping_and_tiny_grids() {
        assert!(make_shepp_logan(128, 0.7).is_err());
        assert!(make_shepp_logan(8, 1.0).is_err());
    }

    #[test]
    fn single_ellipse_integral() {
        let e = Ellipse {
            center: [0.1, -0.2],
            axes: [0.5, 0.3],
            angle: 0.4,
            intensity: 1.5,
        };
        let p = Phantom::from_ellipses(vec![e], 256, 1.0).unwrap();
        let exact = PI * 0.5 * 0.3 * 1.5;
        assert!((p.integral() - exact).abs() < 0.01 * exact, "{} vs {exact}", p.integral());
    }

    #[test]
    fn grid_is_symmetric_about_origin() {
        let p = make_disk(0.4, 1.0, 64, 1.0).unwrap();
        let n = p.size();
        for iy in 0..n {
            for ix in 0..n {
                assert_eq!(p.values[[iy, ix]], p.values[[n - 1 - iy, n - 1 - ix]]);
                assert_eq!(p.values[[iy, ix]], p.values[[ix, iy]]);
            }
        }
    }
}
