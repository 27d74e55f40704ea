use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::kernel::{ConvolutionMode, KernelQuadrature, KernelSeries, LagGrid};
use crate::error::{Error, Result};
use crate::model::AttenuationModel;
use crate::wavefield::{DataKind, TimeGrid, WaveData};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Relative imaginary residue tolerated when realising M as a real matrix.
pub const REAL_RESIDUE_TOL: f64 = 1e-10;

/// Condition numbers above this are treated as singular to working precision.
pub const SINGULAR_CONDITION: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemOptions {
    /// Taylor truncation order K.
    pub order: usize,
    pub quadrature: KernelQuadrature,
    pub convolution: ConvolutionMode,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            order: 10,
            quadrature: KernelQuadrature::default(),
            convolution: ConvolutionMode::FullLine,
        }
    }
}

/// Stabilisation of the inverse.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Regularization {
    #[default]
    None,
    /// Solve (MᵀM + λI)q = Mᵀq^a.
    Tikhonov { lambda: f64 },
}

/// Dense realisation of the attenuation solution operator on one time grid:
/// M = diag(e^{−k∞ t_m}) + B, acting on the time index of each sensor column.
#[derive(Debug, Clone)]
pub struct AttenuationSystem {
    pub time: TimeGrid,
    pub model_fingerprint: String,
    pub k_inf: f64,
    pub options: SystemOptions,
    /// Largest |Im M_im| discarded when taking the real part.
    pub imag_residue: f64,
    matrix: DMatrix<f64>,
}

/// Builds M with entries b_im = Δ_T/√(2π)·e^{−k∞ t_m}·Σ_{k=1..K} t_m^k/k!·r_k(t_i − t_m).
pub fn build_system(model: &AttenuationModel, time: &TimeGrid, opts: &SystemOptions) -> Result<AttenuationSystem> {
    model.check()?;
    if !model.is_weak() {
        return Err(Error::Unsupported(
            "attenuation systems exist only for weak attenuation laws".into(),
        ));
    }
    if opts.order < 1 {
        return Err(Error::input("Taylor order K must be >= 1"));
    }
    let k_inf = model.k_infinity()?;
    let n = time.n;
    let times = time.times();

    // t_m^k/k! for every column and order, guarded against overflow
    let mut powers = vec![vec![0.0; opts.order]; n];
    for (m, row) in powers.iter_mut().enumerate() {
        let mut c = 1.0;
        for (k, slot) in row.iter_mut().enumerate() {
            c *= times[m] / (k + 1) as f64;
            *slot = c;
        }
        if !c.is_finite() {
            return Err(Error::Numerical(format!(
                "t^K/K! overflows at t = {} for K = {}",
                times[m], opts.order
            )));
        }
    }

    let diag: Vec<f64> = times.iter().map(|t| (-k_inf * t).exp()).collect();
    let mut re = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));

    let is_trivial = matches!(model, AttenuationModel::Constant { .. });
    let mut imag_residue = 0.0_f64;
    if !is_trivial {
        let lag = LagGrid::new(time.dt, n);
        let series = KernelSeries::build(model, lag, opts.order, &opts.quadrature, opts.convolution)?;
        let zero = lag.zero();
        for m in 0..n {
            let col_scale = time.dt * INV_SQRT_2PI * diag[m];
            for i in 0..n {
                let idx = zero + i - m;
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for k in 1..=opts.order {
                    acc += series.term(k)[idx] * powers[m][k - 1];
                }
                acc *= col_scale;
                re[(i, m)] += acc.re;
                imag_residue = imag_residue.max(acc.im.abs());
            }
        }
    }

    let max_entry = re.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if imag_residue > REAL_RESIDUE_TOL * max_entry {
        return Err(Error::Numerical(format!(
            "attenuation matrix is not real: imaginary residue {imag_residue:.3e} vs max entry {max_entry:.3e}"
        )));
    }
    if re.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("attenuation matrix has non-finite entries".into()));
    }

    Ok(AttenuationSystem {
        time: *time,
        model_fingerprint: model.fingerprint(),
        k_inf,
        options: *opts,
        imag_residue,
        matrix: re,
    })
}

impl AttenuationSystem {
    /// Reassembles a system from a stored matrix.
    pub fn from_parts(
        time: TimeGrid,
        model_fingerprint: String,
        k_inf: f64,
        options: SystemOptions,
        matrix: DMatrix<f64>,
    ) -> Result<Self> {
        if matrix.nrows() != time.n || matrix.ncols() != time.n {
            return Err(Error::GridMismatch(format!(
                "matrix is {}x{} but the time grid has {} samples",
                matrix.nrows(),
                matrix.ncols(),
                time.n
            )));
        }
        Ok(AttenuationSystem {
            time,
            model_fingerprint,
            k_inf,
            options,
            imag_residue: 0.0,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// B = M − diag(e^{−k∞ t}).
    pub fn off_diagonal_part(&self) -> DMatrix<f64> {
        let mut b = self.matrix.clone();
        for m in 0..self.size() {
            b[(m, m)] -= (-self.k_inf * self.time.t(m)).exp();
        }
        b
    }

    /// 2-norm condition number from the singular values.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Largest ratio, over columns, of the strictly upper-triangular (anti-causal)
    /// part's norm to the full column norm.
    pub fn causal_leakage(&self) -> f64 {
        let n = self.size();
        (0..n)
            .map(|m| {
                let col = self.matrix.column(m);
                let total = col.norm();
                let upper: f64 = (0..m).map(|i| col[i] * col[i]).sum::<f64>().sqrt();
                if total > 0.0 {
                    upper / total
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    fn check_grid(&self, data: &WaveData) -> Result<()> {
        if !self.time.same_as(&data.time) {
            return Err(Error::GridMismatch(format!(
                "system built for N_T = {}, dt = {:e}; data has N_T = {}, dt = {:e}",
                self.time.n, self.time.dt, data.time.n, data.time.dt
            )));
        }
        Ok(())
    }

    /// q^a_j = M·q_j for every sensor column.
    pub fn apply(&self, q: &WaveData) -> Result<WaveData> {
        self.check_grid(q)?;
        if q.kind != DataKind::Integrated {
            return Err(Error::input(format!(
                "attenuation acts on integrated lossless data, got {:?}",
                q.kind
            )));
        }
        let out = &self.matrix * to_matrix(&q.values);
        Ok(q.with_values(DataKind::AttenuatedIntegrated, from_matrix(&out)))
    }

    /// Solves M·q_j = q^a_j for every sensor column.
    pub fn invert(&self, qa: &WaveData, reg: Regularization) -> Result<WaveData> {
        self.check_grid(qa)?;
        if qa.kind != DataKind::AttenuatedIntegrated {
            return Err(Error::input(format!(
                "inversion expects integrated attenuated data, got {:?}",
                qa.kind
            )));
        }
        let rhs = to_matrix(&qa.values);
        let sol = match reg {
            Regularization::None => {
                let lu = self.matrix.clone().lu();
                let inv = lu
                    .try_inverse()
                    .ok_or(Error::Conditioning { condition: f64::INFINITY })?;
                let cond = one_norm(&self.matrix) * one_norm(&inv);
                if !(cond < SINGULAR_CONDITION) {
                    return Err(Error::Conditioning { condition: cond });
                }
                self.matrix
                    .clone()
                    .lu()
                    .solve(&rhs)
                    .ok_or(Error::Conditioning { condition: cond })?
            }
            Regularization::Tikhonov { lambda } => {
                if !(lambda.is_finite() && lambda >= 0.0) {
                    return Err(Error::input(format!("Tikhonov lambda must be >= 0, got {lambda}")));
                }
                let mt = self.matrix.transpose();
                let mut normal = &mt * &self.matrix;
                for d in 0..self.size() {
                    normal[(d, d)] += lambda;
                }
                let chol = normal.cholesky().ok_or(Error::Conditioning {
                    condition: f64::INFINITY,
                })?;
                chol.solve(&(&mt * rhs))
            }
        };
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("inversion produced non-finite values".into()));
        }
        Ok(qa.with_values(DataKind::Integrated, from_matrix(&sol)))
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn to_matrix(a: &Array2<f64>) -> DMatrix<f64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{Geometry, SensorArray};

    fn sensors(n: usize) -> SensorArray {
        SensorArray::new(Geometry::Circle { radius: 1.7, count: n }).unwrap()
    }

    #[test]
    fn constant_law_is_diagonal() {
        let tg = TimeGrid::new(6.0, 50).unwrap();
        let sys = build_system(&AttenuationModel::constant(0.45), &tg, &SystemOptions::default()).unwrap();
        for i in 0..50 {
            for m in 0..50 {
                let want = if i == m { (-0.45 * tg.t(m)).exp() } else { 0.0 };
                assert_eq!(sys.matrix()[(i, m)], want);
            }
        }
        assert!(sys.off_diagonal_part().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lossless_is_identity() {
        let tg = TimeGrid::new(2.0, 20).unwrap();
        let sys = build_system(&AttenuationModel::constant(0.0), &tg, &SystemOptions::default()).unwrap();
        assert_eq!(sys.matrix(), &DMatrix::<f64>::identity(20, 20));
    }

    #[test]
    fn power_law_is_rejected() {
        let tg = TimeGrid::new(2.0, 20).unwrap();
        let r = build_system(&AttenuationModel::power_law(0.005, 2.0), &tg, &SystemOptions::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
        let bad = SystemOptions {
            order: 0,
            ..Default::default()
        };
        assert!(build_system(&AttenuationModel::constant(0.1), &tg, &bad).is_err());
    }

    #[test]
    fn overflow_guard() {
        let tg = TimeGrid::new(1e6, 20).unwrap();
        let opts = SystemOptions {
            order: 200,
            ..Default::default()
        };
        let r = build_system(&AttenuationModel::nsw(0.11, 0.1), &tg, &opts);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    #[test]
    fn apply_constant_matches_exponential() {
        let tg = TimeGrid::new(4.0, 40).unwrap();
        let sys = build_system(&AttenuationModel::constant(0.45), &tg, &SystemOptions::default()).unwrap();
        let q = WaveData::new(DataKind::Integrated, tg, sensors(8), Array2::ones((40, 8))).unwrap();
        let qa = sys.apply(&q).unwrap();
        // t = 2 is sample index 19
        assert!((tg.t(19) - 2.0).abs() < 1e-15);
        assert!((qa.values[[19, 3]] - (-0.9f64).exp()).abs() < 1e-15);
        assert!((qa.values[[19, 3]] - 0.40657).abs() < 1e-5);
        let back = sys.invert(&qa, Regularization::None).unwrap();
        for (a, b) in back.values.iter().zip(q.values.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn kind_and_grid_checks() {
        let tg = TimeGrid::new(4.0, 40).unwrap();
        let other = TimeGrid::new(4.0, 41).unwrap();
        let sys = build_system(&AttenuationModel::constant(0.45), &tg, &SystemOptions::default()).unwrap();
        let wrong_kind = WaveData::zeros(DataKind::Pressure, tg, sensors(8));
        assert!(sys.apply(&wrong_kind).is_err());
        let wrong_grid = WaveData::zeros(DataKind::Integrated, other, sensors(8));
        assert!(matches!(sys.apply(&wrong_grid), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn singular_matrix_reports_condition() {
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let mut m = DMatrix::<f64>::identity(4, 4);
        m[(3, 3)] = 1e-300;
        let sys = AttenuationSystem::from_parts(tg, "test".into(), 0.0, SystemOptions::default(), m).unwrap();
        let qa = WaveData::zeros(DataKind::AttenuatedIntegrated, tg, sensors(4));
        match sys.invert(&qa, Regularization::None) {
            Err(Error::Conditioning { condition }) => assert!(condition > SINGULAR_CONDITION),
            other => panic!("expected conditioning error, got {other:?}"),
        }
        // Tikhonov still produces an answer
        assert!(sys.invert(&qa, Regularization::Tikhonov { lambda: 1e-8 }).is_ok());
    }
}
