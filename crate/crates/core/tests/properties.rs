mod common;

use ndarray::Array2;
use num_complex::Complex64;
use pat_atten::experiments::resample_data;
use pat_atten::model::AttenuationModel;
use pat_atten::recon::{differentiate_columns, integrate_columns, ubp_2d, ImageGrid, UbpOptions};
use pat_atten::wavefield::{DataKind, Geometry, SensorArray, TimeGrid, WaveData};
use proptest::prelude::*;

fn nsw_params() -> impl Strategy<Value = (f64, f64)> {
    (0.01f64..1.0, 1.0001f64..3.0).prop_map(|(tt, ratio)| (tt * ratio, tt))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-10.0f64..10.0, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_is_odd_up_to_conjugation((tau, tt) in nsw_params(), w in -500.0f64..500.0) {
        let m = AttenuationModel::nsw(tau, tt);
        let a = m.kappa(w).unwrap();
        let b = m.kappa(-w).unwrap();
        prop_assert!((a + b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        prop_assert!(a.im >= -1e-12);
    }

    #[test]
    fn kappa_splits_into_its_parts((tau, tt) in nsw_params(), w in -500.0f64..500.0) {
        let m = AttenuationModel::nsw(tau, tt);
        let k = m.kappa(w).unwrap();
        let rebuilt = w + Complex64::i() * m.k_infinity().unwrap() + m.kstar(w).unwrap();
        prop_assert!((k - rebuilt).norm() <= 1e-12 * (1.0 + k.norm()));
        // and against the independent evaluation
        prop_assert!((k - common::nsw_kappa(tau, tt, w)).norm() <= 1e-10 * (1.0 + k.norm()));
    }

    #[test]
    fn constant_law_is_pure_damping(k in 0.0f64..5.0, w in -100.0f64..100.0) {
        let m = AttenuationModel::constant(k);
        prop_assert_eq!(m.kappa(w).unwrap(), Complex64::new(w, k));
        prop_assert_eq!(m.kstar(w).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn differentiation_undoes_integration(p in matrix(40, 3), dt in 0.001f64..1.0) {
        let back = differentiate_columns(&integrate_columns(&p, dt), dt);
        let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for (a, b) in back.iter().zip(p.iter()) {
            prop_assert!((a - b).abs() <= 1e-14 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn back_projection_is_linear(a in matrix(60, 8), b in matrix(60, 8), c in -3.0f64..3.0) {
        let time = TimeGrid::new(4.0, 60).unwrap();
        let s = SensorArray::new(Geometry::Circle { radius: 1.7, count: 8 }).unwrap();
        let grid = ImageGrid::square(16, 1.0).unwrap();
        let opts = UbpOptions::default();
        let da = WaveData::new(DataKind::Pressure, time, s.clone(), a.clone()).unwrap();
        let db = WaveData::new(DataKind::Pressure, time, s.clone(), b.clone()).unwrap();
        let dm = WaveData::new(DataKind::Pressure, time, s, &a * c + &b).unwrap();
        let ia = ubp_2d(&da, &grid, &opts).unwrap().values;
        let ib = ubp_2d(&db, &grid, &opts).unwrap().values;
        let im = ubp_2d(&dm, &grid, &opts).unwrap().values;
        let want = &ia * c + &ib;
        let num = (&im - &want).mapv(|v| v * v).sum().sqrt();
        let den = want.mapv(|v| v * v).sum().sqrt().max(1e-300);
        prop_assert!(num <= 1e-12 * den);
    }

    #[test]
    fn resampling_to_the_same_grid_is_exact(v in matrix(30, 6), line in any::<bool>()) {
        let g = if line {
            Geometry::Line { length: 4.0, standoff: 1.0, count: 6 }
        } else {
            Geometry::Circle { radius: 1.7, count: 6 }
        };
        let s = SensorArray::new(g).unwrap();
        let time = TimeGrid::new(3.0, 30).unwrap();
        let d = WaveData::new(DataKind::Attenuated, time, s.clone(), v).unwrap();
        let r = resample_data(&d, &time, &s).unwrap();
        prop_assert_eq!(r.values, d.values);
    }

    #[test]
    fn resampling_keeps_shared_samples(v in matrix(61, 12)) {
        // every other time sample and every other sensor coincide with the source grid
        let g = Geometry::Circle { radius: 1.7, count: 12 };
        let s = SensorArray::new(g).unwrap();
        let time = TimeGrid::new(6.1, 61).unwrap();
        let d = WaveData::new(DataKind::Attenuated, time, s, v.clone()).unwrap();
        let coarse_t = TimeGrid { dt: 2.0 * time.dt, n: 30 };
        let coarse_s = SensorArray::new(g.with_count(6)).unwrap();
        let r = resample_data(&d, &coarse_t, &coarse_s).unwrap();
        for i in 0..30 {
            for j in 0..6 {
                let want = v[[2 * i + 1, 2 * j]];
                prop_assert!((r.values[[i, j]] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }
}
