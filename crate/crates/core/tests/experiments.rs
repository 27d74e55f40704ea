use ndarray::Array2;
use pat_atten::experiments::*;
use pat_atten::model::AttenuationModel;
use pat_atten::operator::SystemOptions;
use pat_atten::recon::Method;
use pat_atten::wavefield::{DataKind, Geometry, SensorArray, TimeGrid, WaveData};

fn small(model: AttenuationModel, noise: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: "small".into(),
        model,
        setup: Setup::Circle { radius: 1.7 },
        t_final: 6.0,
        phantom: PhantomSpec::SheppLogan,
        image_size: 48,
        half_extent: 1.0,
        forward: Resolution {
            n_t: 260,
            sensors: 240,
            system: SystemOptions::default(),
        },
        inversion: Resolution {
            n_t: 230,
            sensors: 200,
            system: SystemOptions::default(),
        },
        avoid_inverse_crime: true,
        noise,
        seed: 11,
        regularization: Default::default(),
        ubp: Default::default(),
    }
}

fn bits(v: &Array2<f64>) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn same_seed_gives_identical_results() {
    let cfg = small(AttenuationModel::nsw(0.11, 0.1), 0.2);
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(bits(&a.data.values), bits(&b.data.values));
    for (x, y) in a.reconstructions.iter().zip(&b.reconstructions) {
        assert_eq!(x.method, y.method);
        assert_eq!(bits(&x.values), bits(&y.values));
    }
    assert_eq!(a.errors, b.errors);
    assert_eq!(a.section.methods.len(), 3);
}

#[test]
fn inverse_crime_does_not_flatter_the_error() {
    let honest = small(AttenuationModel::nsw(0.11, 0.1), 0.0);
    let crime = ScenarioConfig {
        avoid_inverse_crime: false,
        ..honest.clone()
    };
    let e_honest = run_scenario(&honest).unwrap().error(Method::Full).unwrap();
    let e_crime = run_scenario(&crime).unwrap().error(Method::Full).unwrap();
    assert!(e_crime >= 0.7 * e_honest, "crime {e_crime} vs avoided {e_honest}");
}

#[test]
fn noise_has_the_requested_standard_deviation() {
    let time = TimeGrid::new(6.0, 500).unwrap();
    let sensors = SensorArray::new(Geometry::Circle { radius: 1.7, count: 300 }).unwrap();
    let v = Array2::from_shape_fn((500, 300), |(i, j)| ((i * 7 + j * 3) % 23) as f64 / 23.0 - 0.3);
    let data = WaveData::new(DataKind::Attenuated, time, sensors, v).unwrap();
    let noisy = add_noise(&data, 0.2, 5).unwrap();
    let diff = &noisy.values - &data.values;
    let n = diff.len() as f64;
    let mean = diff.sum() / n;
    let std = (diff.mapv(|d| (d - mean).powi(2)).sum() / (n - 1.0)).sqrt();
    let want = 0.2 * data.max_abs();
    assert!((std - want).abs() <= 0.02 * want, "{std} vs {want}");
    // a different seed gives a different draw
    let other = add_noise(&data, 0.2, 6).unwrap();
    assert_ne!(bits(&other.values), bits(&noisy.values));
}

#[test]
fn shared_lossless_run_matches_full_pipeline() {
    let cfg = small(AttenuationModel::constant(0.2), 0.0);
    let direct = run_scenario(&cfg).unwrap();
    let lossless = simulate_lossless(&cfg).unwrap();
    let shared = run_from_lossless(&cfg, &lossless).unwrap();
    assert_eq!(direct.errors, shared.errors);
    assert_eq!(
        shared.reconstructions.iter().map(|r| r.method).collect::<Vec<_>>(),
        vec![Method::NaiveUbp, Method::Full]
    );
    // grids of another config are refused
    let other = ScenarioConfig {
        forward: Resolution {
            n_t: 270,
            ..cfg.forward
        },
        ..cfg
    };
    assert!(run_from_lossless(&other, &lossless).is_err());
}

#[test]
fn presets_round_trip_through_toml() {
    for p in Preset::ALL {
        let cfg = ScenarioConfig::preset(p);
        cfg.check().unwrap();
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(p.name().parse::<Preset>().unwrap(), p);
    }
}

#[test]
fn config_errors_name_the_field() {
    let mut cfg = small(AttenuationModel::nsw(0.11, 0.1), 0.0);
    cfg.t_final = -1.0;
    assert!(cfg.check().unwrap_err().to_string().contains("t_final"));
    let mut cfg = small(AttenuationModel::nsw(0.11, 0.1), 0.0);
    cfg.inversion.n_t = cfg.forward.n_t;
    cfg.inversion.sensors = cfg.forward.sensors;
    assert!(cfg.check().unwrap_err().to_string().contains("forward"));
    let err = ScenarioConfig::from_toml_str("t_final = 1.0\nbogus = 3\n").unwrap_err();
    assert!(err.to_string().contains("bogus") || err.to_string().contains("missing"));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = pat_atten::io::load_config(&path).unwrap();
        cfg.check().unwrap();
        if let Ok(p) = cfg.name.parse::<Preset>() {
            assert_eq!(cfg, ScenarioConfig::preset(p), "{}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, Preset::ALL.len());
}
