//! Back-projection and the reconstruction pipelines built on it.

mod calculus;
mod ubp;

pub use calculus::{
    differentiate_columns, integrate_columns, time_differentiate, time_integrate, undo_constant_attenuation,
};
pub use ubp::{ubp_2d, ubp_3d, UbpOptions};

use std::hash::{Hash, Hasher};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::operator::{AttenuationSystem, Regularization};
use crate::wavefield::{DataKind, Phantom, SphericalArray, TimeGrid, WaveData};

/// Cell-centred raster: pixel (ix, iy) sits at origin + spacing·(ix, iy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
}

impl ImageGrid {
    /// n × n pixels tiling (−half_extent, half_extent)².
    pub fn square(n: usize, half_extent: f64) -> Result<Self> {
        if n < 2 || !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::input(format!(
                "image grid needs n >= 2 and half_extent > 0 (got {n}, {half_extent})"
            )));
        }
        let spacing = 2.0 * half_extent / n as f64;
        let o = -half_extent + 0.5 * spacing;
        Ok(ImageGrid {
            nx: n,
            ny: n,
            spacing,
            origin: [o, o],
        })
    }

    pub fn of_phantom(ph: &Phantom) -> Self {
        let (ny, nx) = ph.values.dim();
        ImageGrid {
            nx,
            ny,
            spacing: ph.spacing,
            origin: ph.origin,
        }
    }

    #[inline]
    pub fn coord(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.spacing,
            self.origin[1] + iy as f64 * self.spacing,
        ]
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (a, b) = (self.nx - 1, self.ny - 1);
        [self.coord(0, 0), self.coord(a, 0), self.coord(0, b), self.coord(a, b)]
    }

    pub fn same_as(&self, other: &ImageGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
            && (0..2).all(|k| (self.origin[k] - other.origin[k]).abs() <= 1e-12 * self.spacing)
    }
}

/// Which reconstruction produced an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NaiveUbp,
    ConstAtten,
    Compensated,
    Full,
    /// Not a reconstruction: the phantom itself on the image grid.
    Truth,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::NaiveUbp => "naive-ubp",
            Method::ConstAtten => "const-atten",
            Method::Compensated => "compensated",
            Method::Full => "full",
            Method::Truth => "truth",
        }
    }
}

/// `values[[iy, ix]]` on `grid`, tagged with the method and the input data hash.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconImage {
    pub grid: ImageGrid,
    pub values: Array2<f64>,
    pub method: Method,
    pub data_fingerprint: String,
}

impl ReconImage {
    pub(crate) fn new(grid: ImageGrid, values: Array2<f64>, method: Method, data: &WaveData) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("reconstruction produced non-finite pixels".into()));
        }
        Ok(ReconImage {
            grid,
            values,
            method,
            data_fingerprint: fingerprint(data),
        })
    }

    pub fn truth(ph: &Phantom) -> Self {
        ReconImage {
            grid: ImageGrid::of_phantom(ph),
            values: ph.values.clone(),
            method: Method::Truth,
            data_fingerprint: String::new(),
        }
    }

    fn tagged(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Hash of the data kind, grid and sample bits.
pub fn fingerprint(data: &WaveData) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    format!("{:?}", data.kind).hash(&mut h);
    data.time.n.hash(&mut h);
    data.time.dt.to_bits().hash(&mut h);
    data.sensors.len().hash(&mut h);
    for v in data.values.iter() {
        v.to_bits().hash(&mut h);
    }
    format!("{:016x}", h.finish())
}

fn expect_attenuated(pa: &WaveData) -> Result<()> {
    if pa.kind != DataKind::Attenuated {
        return Err(Error::input(format!("expected attenuated pressure, got {:?}", pa.kind)));
    }
    Ok(())
}

/// UBP applied to attenuated data as if it were lossless.
pub fn reconstruct_naive(pa: &WaveData, grid: &ImageGrid, opts: &UbpOptions) -> Result<ReconImage> {
    ubp_2d(pa, grid, opts).stage("back-projection")
}

fn rescaled_pressure(pa: &WaveData, k_inf: f64) -> Result<WaveData> {
    expect_attenuated(pa)?;
    if !(k_inf.is_finite() && k_inf >= 0.0) {
        return Err(Error::input(format!("k_inf must be finite and >= 0, got {k_inf}")));
    }
    let qa = time_integrate(pa)?;
    let q = undo_constant_attenuation(&qa.values, k_inf, pa.time.dt);
    let q = qa.with_values(DataKind::Integrated, q);
    time_differentiate(&q)
}

/// Constant-attenuation route: p = ∂_t(e^{k∞t}·∫p^a), then UBP.
pub fn reconstruct_constant(pa: &WaveData, k_inf: f64, grid: &ImageGrid, opts: &UbpOptions) -> Result<ReconImage> {
    let p = rescaled_pressure(pa, k_inf).stage("rescale")?;
    let img = ubp_2d(&p, grid, opts).stage("back-projection")?;
    Ok(img.tagged(Method::ConstAtten))
}

/// Same computation as [`reconstruct_constant`] for a law whose k_* is ignored.
pub fn reconstruct_compensated(
    pa: &WaveData,
    k_inf: f64,
    grid: &ImageGrid,
    opts: &UbpOptions,
) -> Result<ReconImage> {
    Ok(reconstruct_constant(pa, k_inf, grid, opts)?.tagged(Method::Compensated))
}

/// q^a = ∫p^a, q = M⁻¹q^a, p = ∂_t q, then UBP.
pub fn reconstruct_full(
    pa: &WaveData,
    system: &AttenuationSystem,
    reg: Regularization,
    grid: &ImageGrid,
    opts: &UbpOptions,
) -> Result<ReconImage> {
    expect_attenuated(pa)?;
    let qa = time_integrate(pa)?;
    let q = system.invert(&qa, reg).stage("inversion")?;
    let p = time_differentiate(&q)?;
    let img = ubp_2d(&p, grid, opts).stage("back-projection")?;
    Ok(img.tagged(Method::Full))
}

/// 3D constant-attenuation reconstruction at the given points from traces on a sphere.
pub fn reconstruct_constant_3d(
    pa: &Array2<f64>,
    k_inf: f64,
    time: &TimeGrid,
    array: &SphericalArray,
    points: &[[f64; 3]],
) -> Result<Vec<f64>> {
    let qa = integrate_columns(pa, time.dt);
    let q = undo_constant_attenuation(&qa, k_inf, time.dt);
    let p = differentiate_columns(&q, time.dt);
    ubp_3d(&p, time, array, points)
}
