//! Phantoms, measurement geometry, sampled wave data and the lossless forward
//! solver.

mod oracle;
mod phantom;
mod sensors;
mod spectral;

pub use oracle::{ball_nwave_integrated, ball_nwave_pressure, fibonacci_sphere, SphericalArray};
pub use phantom::{make_disk, make_shepp_logan, Ellipse, Phantom, SHEPP_LOGAN_SCALE};
pub use sensors::{Geometry, SensorArray};
pub use spectral::{
    padded_grid_size, propagate, spectral_energy, spectral_forward, ForwardOptions, PeriodicGrid,
};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling t_i = i·Δ_T, i = 1..=N_T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    /// N_T samples covering (0, T].
    pub fn new(t_final: f64, n: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) || n < 2 {
            return Err(Error::input(format!(
                "time grid needs T > 0 and N_T >= 2 (got T = {t_final}, N_T = {n})"
            )));
        }
        Ok(TimeGrid {
            dt: t_final / n as f64,
            n,
        })
    }

    /// Time of the sample with zero-based index `i`, i.e. t_{i+1}.
    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n == other.n && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }
}

/// What physical quantity a [`WaveData`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// Lossless pressure p.
    Pressure,
    /// Time-integrated lossless pressure q.
    Integrated,
    /// Attenuated pressure p^a.
    Attenuated,
    /// Time-integrated attenuated pressure q^a.
    AttenuatedIntegrated,
}

impl DataKind {
    pub fn integrated(self) -> DataKind {
        match self {
            DataKind::Pressure | DataKind::Integrated => DataKind::Integrated,
            DataKind::Attenuated | DataKind::AttenuatedIntegrated => DataKind::AttenuatedIntegrated,
        }
    }

    pub fn differentiated(self) -> DataKind {
        match self {
            DataKind::Pressure | DataKind::Integrated => DataKind::Pressure,
            DataKind::Attenuated | DataKind::AttenuatedIntegrated => DataKind::Attenuated,
        }
    }
}

/// Time × sensor samples m(t_i, ξ_j), rows indexed by time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveData {
    pub kind: DataKind,
    pub time: TimeGrid,
    pub sensors: SensorArray,
    pub values: Array2<f64>,
}

impl WaveData {
    pub fn new(kind: DataKind, time: TimeGrid, sensors: SensorArray, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (time.n, sensors.len()) {
            return Err(Error::GridMismatch(format!(
                "data is {:?} but metadata says {} times x {} sensors",
                values.dim(),
                time.n,
                sensors.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("wave data contains non-finite samples".into()));
        }
        Ok(WaveData {
            kind,
            time,
            sensors,
            values,
        })
    }

    pub fn zeros(kind: DataKind, time: TimeGrid, sensors: SensorArray) -> Self {
        let values = Array2::zeros((time.n, sensors.len()));
        WaveData {
            kind,
            time,
            sensors,
            values,
        }
    }

    pub fn with_values(&self, kind: DataKind, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        WaveData {
            kind,
            time: self.time,
            sensors: self.sensors.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
