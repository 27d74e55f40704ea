//! Closed-form 3D solution for a uniform ball, used as an independent oracle.

use std::f64::consts::PI;

/// Pressure at distance `d` from the centre of a unit-intensity ball of radius
/// `r0`: the N-wave p(t) = (d − t)/(2d) on |d − t| ≤ r0.
pub fn ball_nwave_pressure(r0: f64, d: f64, t: f64) -> f64 {
    debug_assert!(d > r0 && r0 > 0.0);
    if (d - t).abs() <= r0 {
        (d - t) / (2.0 * d)
    } else {
        0.0
    }
}

/// Time integral of [`ball_nwave_pressure`]: (r0² − (d − t)²)/(4d) on the same support.
pub fn ball_nwave_integrated(r0: f64, d: f64, t: f64) -> f64 {
    debug_assert!(d > r0 && r0 > 0.0);
    let s = d - t;
    if s.abs() <= r0 {
        (r0 * r0 - s * s) / (4.0 * d)
    } else {
        0.0
    }
}

/// Points on a sphere with outward normals and equal area weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalArray {
    pub radius: f64,
    pub points: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphericalArray {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Golden-angle (Fibonacci) lattice of `n` nearly uniform points.
pub fn fibonacci_sphere(radius: f64, n: usize) -> SphericalArray {
    let golden = PI * (3.0 - 5f64.sqrt());
    let normals: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect();
    let points = normals
        .iter()
        .map(|u| [radius * u[0], radius * u[1], radius * u[2]])
        .collect();
    SphericalArray {
        radius,
        points,
        normals,
        weights: vec![4.0 * PI * radius * radius / n as f64; n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nwave_values() {
        assert_eq!(ball_nwave_pressure(0.5, 1.7, 1.7), 0.0);
        assert!((ball_nwave_pressure(0.5, 1.7, 1.2) - 0.5 / 3.4).abs() < 1e-15);
        assert_eq!(ball_nwave_pressure(0.5, 1.7, 2.5), 0.0);
        assert!((ball_nwave_integrated(0.5, 1.7, 1.7) - 0.25 / 6.8).abs() < 1e-15);
    }

    #[test]
    fn nwave_matches_spherical_mean() {
        // p = ∂_t (t · mean of χ_ball over the sphere of radius t about the sensor);
        // the mean is the fractional cap area, (r0² − (d − t)²)/(4 d t)
        let (r0, d) = (0.5, 1.7);
        let mean = |t: f64| {
            // numerical cap fraction by quadrature over the polar angle
            let m = 200_000;
            let mut acc = 0.0;
            for k in 0..m {
                let c = -1.0 + (k as f64 + 0.5) * 2.0 / m as f64;
                // point on sphere at distance t from the sensor at (0,0,d), direction towards origin
                let z = d - t * c;
                let rho2 = t * t * (1.0 - c * c);
                if rho2 + z * z <= r0 * r0 {
                    acc += 1.0;
                }
            }
            acc / m as f64
        };
        // interior of the support; t = 1.2 is its edge where p jumps
        let t = 1.5;
        // p is linear in t on the support, so a wide central difference is exact
        let eps = 0.05;
        let p = ((t + eps) * mean(t + eps) - (t - eps) * mean(t - eps)) / (2.0 * eps);
        assert!((p - ball_nwave_pressure(r0, d, t)).abs() < 1e-3, "{p}");
    }

    #[test]
    fn integrated_derivative_is_pressure() {
        let (r0, d) = (0.5, 1.7);
        let h = 1e-3;
        for k in 0..50 {
            let t = 1.25 + k as f64 * 0.018;
            let fd = (ball_nwave_integrated(r0, d, t + h) - ball_nwave_integrated(r0, d, t - h)) / (2.0 * h);
            assert!((fd - ball_nwave_pressure(r0, d, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn fibonacci_weights_cover_sphere() {
        let s = fibonacci_sphere(1.7, 500);
        let area: f64 = s.weights.iter().sum();
        assert!((area - 4.0 * PI * 1.7 * 1.7).abs() < 1e-9);
        for (p, u) in s.points.iter().zip(&s.normals) {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((r - 1.7).abs() < 1e-12);
            assert!((u[0] * p[0] + u[1] * p[1] + u[2] * p[2] - 1.7).abs() < 1e-12);
        }
    }
}
