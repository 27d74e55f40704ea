use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement curve description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    /// N points ξ_j = R(cos jΔ, sin jΔ), Δ = 2π/N.
    Circle { radius: f64, count: usize },
    /// N points spread uniformly (endpoints included) over a horizontal segment of
    /// total `length`, centred below the origin at y = −standoff.
    Line {
        length: f64,
        standoff: f64,
        count: usize,
    },
}

impl Geometry {
    pub fn count(&self) -> usize {
        match *self {
            Geometry::Circle { count, .. } | Geometry::Line { count, .. } => count,
        }
    }

    pub fn with_count(&self, count: usize) -> Geometry {
        match *self {
            Geometry::Circle { radius, .. } => Geometry::Circle { radius, count },
            Geometry::Line {
                length, standoff, ..
            } => Geometry::Line {
                length,
                standoff,
                count,
            },
        }
    }

    /// Solid-angle normalisation Ω₀ of the 2D back-projection formula.
    pub fn omega0(&self) -> f64 {
        match self {
            Geometry::Circle { .. } => 4.0 * PI,
            Geometry::Line { .. } => 2.0 * PI,
        }
    }
}

/// Sensor positions ξ_j with outward normals and curve-length weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    pub geometry: Geometry,
    pub points: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl SensorArray {
    pub fn new(geometry: Geometry) -> Result<Self> {
        const MIN_COUNT: usize = 4;
        match geometry {
            Geometry::Circle { radius, count } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::input(format!("circle radius must be positive, got {radius}")));
                }
                if count < MIN_COUNT {
                    return Err(Error::input(format!("need at least {MIN_COUNT} sensors, got {count}")));
                }
                let step = 2.0 * PI / count as f64;
                let normals: Vec<[f64; 2]> = (0..count)
                    .map(|j| {
                        let a = j as f64 * step;
                        [a.cos(), a.sin()]
                    })
                    .collect();
                let points = normals.iter().map(|n| [radius * n[0], radius * n[1]]).collect();
                Ok(SensorArray {
                    geometry,
                    points,
                    normals,
                    weights: vec![radius * step; count],
                })
            }
            Geometry::Line {
                length,
                standoff,
                count,
            } => {
                if !(length.is_finite() && length > 0.0) {
                    return Err(Error::input(format!("line length must be positive, got {length}")));
                }
                if !(standoff.is_finite() && standoff > 0.0) {
                    return Err(Error::input(format!("line standoff must be positive, got {standoff}")));
                }
                if count < MIN_COUNT {
                    return Err(Error::input(format!("need at least {MIN_COUNT} sensors, got {count}")));
                }
                let dx = length / (count - 1) as f64;
                let points = (0..count)
                    .map(|j| [-0.5 * length + j as f64 * dx, -standoff])
                    .collect();
                Ok(SensorArray {
                    geometry,
                    points,
                    normals: vec![[0.0, -1.0]; count],
                    weights: vec![dx; count],
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Curve parameter of each sensor: angle for circles, abscissa for lines.
    pub fn arc_parameter(&self) -> Vec<f64> {
        match self.geometry {
            Geometry::Circle { count, .. } => {
                (0..count).map(|j| 2.0 * PI * j as f64 / count as f64).collect()
            }
            Geometry::Line { .. } => self.points.iter().map(|p| p[0]).collect(),
        }
    }

    /// Largest distance of a sensor from the origin.
    pub fn max_radius(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p[0].hypot(p[1]))
            .fold(0.0, f64::max)
    }

    /// Whether `x` lies in the region the back-projection formula applies to.
    pub fn is_interior(&self, x: [f64; 2]) -> bool {
        match self.geometry {
            Geometry::Circle { radius, .. } => x[0].hypot(x[1]) < radius,
            Geometry::Line { standoff, .. } => x[1] > -standoff,
        }
    }

    pub fn same_as(&self, other: &SensorArray) -> bool {
        self.geometry == other.geometry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_circle() {
        let s = SensorArray::new(Geometry::Circle {
            radius: 1.7,
            count: 4,
        })
        .unwrap();
        let want = [[1.7, 0.0], [0.0, 1.7], [-1.7, 0.0], [0.0, -1.7]];
        for (p, w) in s.points.iter().zip(want) {
            assert!((p[0] - w[0]).abs() < 1e-15 && (p[1] - w[1]).abs() < 1e-15, "{p:?}");
        }
    }

    #[test]
    fn circle_normals_are_radial() {
        let s = SensorArray::new(Geometry::Circle {
            radius: 1.7,
            count: 97,
        })
        .unwrap();
        for (p, n) in s.points.iter().zip(&s.normals) {
            assert!((n[0] * p[0] + n[1] * p[1] - 1.7).abs() < 1e-14);
        }
        let total: f64 = s.weights.iter().sum();
        assert!((total - 2.0 * PI * 1.7).abs() < 1e-12);
    }

    #[test]
    fn line_layout() {
        let s = SensorArray::new(Geometry::Line {
            length: 10.2,
            standoff: 1.7,
            count: 849,
        })
        .unwrap();
        assert_eq!(s.len(), 849);
        let first = s.points[0];
        let last = s.points[848];
        assert!((last[0] - first[0] - 10.2).abs() < 1e-12);
        assert!(s.points.iter().all(|p| p[1] == -1.7));
        assert!(s.normals.iter().all(|n| *n == [0.0, -1.0]));
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(SensorArray::new(Geometry::Circle { radius: 0.0, count: 8 }).is_err());
        assert!(SensorArray::new(Geometry::Circle { radius: 1.0, count: 2 }).is_err());
        assert!(SensorArray::new(Geometry::Line {
            length: -1.0,
            standoff: 1.0,
            count: 8
        })
        .is_err());
        assert!(SensorArray::new(Geometry::Line {
            length: 1.0,
            standoff: 0.0,
            count: 8
        })
        .is_err());
    }
}
