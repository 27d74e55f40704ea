//! Discrete time integration and differentiation along the time axis.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::wavefield::{DataKind, WaveData};

/// Left Riemann cumulative sum q_i = Δ_T·Σ_{n ≤ i} p_n, per column.
pub fn integrate_columns(p: &Array2<f64>, dt: f64) -> Array2<f64> {
    let mut q = p.clone();
    q.accumulate_axis_inplace(Axis(0), |prev, cur| *cur += *prev);
    q.mapv_inplace(|v| v * dt);
    q
}

/// Backward difference p_i = (q_i − q_{i−1})/Δ_T with q_0 = 0.
///
/// Inverts [`integrate_columns`] up to rounding: the sum is rebuilt and then
/// differenced, so errors do not accumulate along the column.
pub fn differentiate_columns(q: &Array2<f64>, dt: f64) -> Array2<f64> {
    let (n, m) = q.dim();
    let mut p = Array2::zeros((n, m));
    for j in 0..m {
        let mut prev = 0.0;
        for i in 0..n {
            let cur = q[[i, j]];
            p[[i, j]] = (cur - prev) / dt;
            prev = cur;
        }
    }
    p
}

/// Integrates pressure-type data (p or p^a) into q or q^a.
pub fn time_integrate(p: &WaveData) -> Result<WaveData> {
    match p.kind {
        DataKind::Pressure | DataKind::Attenuated => {
            Ok(p.with_values(p.kind.integrated(), integrate_columns(&p.values, p.time.dt)))
        }
        other => Err(Error::input(format!("cannot integrate {other:?} data: already integrated"))),
    }
}

/// Differentiates integrated data (q or q^a) back to pressure.
pub fn time_differentiate(q: &WaveData) -> Result<WaveData> {
    match q.kind {
        DataKind::Integrated | DataKind::AttenuatedIntegrated => {
            Ok(q.with_values(q.kind.differentiated(), differentiate_columns(&q.values, q.time.dt)))
        }
        other => Err(Error::input(format!("cannot differentiate {other:?} data: not integrated"))),
    }
}

/// Multiplies each row by e^{k∞ t_i}: the exact inverse of constant attenuation.
pub fn undo_constant_attenuation(qa: &Array2<f64>, k_inf: f64, dt: f64) -> Array2<f64> {
    let mut q = qa.clone();
    for (i, mut row) in q.axis_iter_mut(Axis(0)).enumerate() {
        let g = (k_inf * (i + 1) as f64 * dt).exp();
        row.mapv_inplace(|v| v * g);
    }
    q
}
