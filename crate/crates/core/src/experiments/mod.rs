//! The four desk-scale experiments (constant/NSW law × circle/line curve).

mod metrics;

pub use metrics::{add_noise, cross_section, rel_l2_error, rel_l2_error_on_support, resample_data, Axis};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::model::AttenuationModel;
use crate::operator::{build_system, AttenuationSystem, KernelQuadrature, Regularization, SystemOptions};
use crate::recon::{
    reconstruct_compensated, reconstruct_full, reconstruct_naive, time_differentiate, time_integrate, ImageGrid,
    Method, ReconImage, UbpOptions,
};
use crate::wavefield::{
    make_disk, make_shepp_logan, spectral_forward, DataKind, ForwardOptions, Geometry, Phantom, SensorArray,
    TimeGrid, WaveData,
};

/// Measurement curve without a sensor count; the count comes from a [`Resolution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Setup {
    Circle { radius: f64 },
    /// `length` is the total segment length.
    Line { length: f64, standoff: f64 },
}

impl Setup {
    pub fn geometry(&self, count: usize) -> Geometry {
        match *self {
            Setup::Circle { radius } => Geometry::Circle { radius, count },
            Setup::Line { length, standoff } => Geometry::Line {
                length,
                standoff,
                count,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomSpec {
    SheppLogan,
    Disk { radius: f64, intensity: f64 },
}

/// One discretisation: time samples, sensor count and attenuation operator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub n_t: usize,
    pub sensors: usize,
    #[serde(default)]
    pub system: SystemOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub model: AttenuationModel,
    pub setup: Setup,
    pub t_final: f64,
    #[serde(default = "default_phantom")]
    pub phantom: PhantomSpec,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_half_extent")]
    pub half_extent: f64,
    pub forward: Resolution,
    pub inversion: Resolution,
    /// When false the forward data are generated on the inversion grids.
    #[serde(default = "default_true")]
    pub avoid_inverse_crime: bool,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub regularization: Regularization,
    #[serde(default)]
    pub ubp: UbpOptions,
}

fn default_phantom() -> PhantomSpec {
    PhantomSpec::SheppLogan
}
fn default_image_size() -> usize {
    128
}
fn default_half_extent() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

/// The four scenarios of the desk-scale study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    ConstantCircle,
    NswCircle,
    ConstantLine,
    NswLine,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::ConstantCircle,
        Preset::NswCircle,
        Preset::ConstantLine,
        Preset::NswLine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::ConstantCircle => "constant-circle",
            Preset::NswCircle => "nsw-circle",
            Preset::ConstantLine => "constant-line",
            Preset::NswLine => "nsw-line",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::input(format!("unknown preset `{s}`")))
    }
}

impl ScenarioConfig {
    pub fn preset(p: Preset) -> Self {
        let (model, circle) = match p {
            Preset::ConstantCircle => (AttenuationModel::constant(0.45), true),
            Preset::NswCircle => (AttenuationModel::nsw(0.11, 0.1), true),
            Preset::ConstantLine => (AttenuationModel::constant(0.45), false),
            Preset::NswLine => (AttenuationModel::nsw(0.11, 0.1), false),
        };
        let (setup, t_final) = if circle {
            (Setup::Circle { radius: 1.7 }, 6.0)
        } else {
            (
                Setup::Line {
                    length: 10.2,
                    standoff: 1.7,
                },
                8.0,
            )
        };
        ScenarioConfig {
            name: p.name().into(),
            model,
            setup,
            t_final,
            phantom: PhantomSpec::SheppLogan,
            image_size: 128,
            half_extent: 1.0,
            forward: Resolution {
                n_t: 500,
                sensors: 896,
                system: SystemOptions {
                    order: 14,
                    quadrature: KernelQuadrature {
                        nodes: 1 << 17,
                        ..Default::default()
                    },
                    ..Default::default()
                },
            },
            inversion: Resolution {
                n_t: 443,
                sensors: 849,
                system: SystemOptions::default(),
            },
            avoid_inverse_crime: true,
            noise: 0.0,
            seed: 0,
            regularization: Regularization::None,
            ubp: UbpOptions::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn check(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if let Err(e) = self.model.check() {
            return bad("model", e.to_string());
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return bad("t_final", format!("must be positive, got {}", self.t_final));
        }
        if self.image_size < 16 {
            return bad("image_size", format!("must be >= 16, got {}", self.image_size));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise", format!("must be >= 0, got {}", self.noise));
        }
        for (field, r) in [("forward", &self.forward), ("inversion", &self.inversion)] {
            if r.n_t < 2 || r.sensors < 4 {
                return bad(field, format!("needs n_t >= 2 and sensors >= 4, got {} / {}", r.n_t, r.sensors));
            }
            if let Err(e) = r.system.quadrature.check() {
                return bad(field, e.to_string());
            }
        }
        if self.avoid_inverse_crime
            && self.forward.n_t == self.inversion.n_t
            && self.forward.sensors == self.inversion.sensors
        {
            return bad(
                "forward",
                "equal forward and inversion grids while avoid_inverse_crime is set".into(),
            );
        }
        if self.avoid_inverse_crime
            && (self.forward.n_t < self.inversion.n_t || self.forward.sensors < self.inversion.sensors)
        {
            return bad("forward", "forward grids must be at least as fine as the inversion grids".into());
        }
        Ok(())
    }

    /// Resolution actually used for data generation.
    pub fn forward_resolution(&self) -> Resolution {
        if self.avoid_inverse_crime {
            self.forward
        } else {
            self.inversion
        }
    }

    pub fn forward_grids(&self) -> Result<(TimeGrid, SensorArray)> {
        let r = self.forward_resolution();
        Ok((
            TimeGrid::new(self.t_final, r.n_t)?,
            SensorArray::new(self.setup.geometry(r.sensors))?,
        ))
    }

    pub fn inversion_grids(&self) -> Result<(TimeGrid, SensorArray)> {
        Ok((
            TimeGrid::new(self.t_final, self.inversion.n_t)?,
            SensorArray::new(self.setup.geometry(self.inversion.sensors))?,
        ))
    }

    pub fn make_phantom(&self) -> Result<Phantom> {
        match self.phantom {
            PhantomSpec::SheppLogan => make_shepp_logan(self.image_size, self.half_extent),
            PhantomSpec::Disk { radius, intensity } => make_disk(radius, intensity, self.image_size, self.half_extent),
        }
    }

    pub fn image_grid(&self) -> Result<ImageGrid> {
        ImageGrid::square(self.image_size, self.half_extent)
    }

    /// Reconstruction methods compared for this model.
    pub fn methods(&self) -> Vec<Method> {
        match self.model {
            AttenuationModel::Constant { .. } => vec![Method::NaiveUbp, Method::Full],
            _ => vec![Method::NaiveUbp, Method::Compensated, Method::Full],
        }
    }
}

/// Lossless pressure on the forward grids; independent of the attenuation law.
#[derive(Debug, Clone)]
pub struct LosslessData {
    pub truth: Phantom,
    pub pressure: WaveData,
}

/// Wall-clock time of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub coords: Vec<f64>,
    pub truth: Vec<f64>,
    pub methods: Vec<(Method, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub truth: ReconImage,
    /// Measured p^a on the inversion grids (after noise and resampling).
    pub data: WaveData,
    pub reconstructions: Vec<ReconImage>,
    pub errors: Vec<(Method, f64)>,
    /// Horizontal section through y = 0.
    pub section: Section,
    pub runtimes: Vec<StageTime>,
}

impl ScenarioResult {
    pub fn error(&self, m: Method) -> Option<f64> {
        self.errors.iter().find(|(k, _)| *k == m).map(|(_, e)| *e)
    }

    pub fn image(&self, m: Method) -> Option<&ReconImage> {
        self.reconstructions.iter().find(|r| r.method == m)
    }
}

struct Clock {
    start: Instant,
    log: Vec<StageTime>,
}

impl Clock {
    fn new() -> Self {
        Clock {
            start: Instant::now(),
            log: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.log.push(StageTime {
            stage: stage.into(),
            seconds: (now - self.start).as_secs_f64(),
        });
        self.start = now;
    }
}

/// Phantom and lossless pressure on the forward grids.
pub fn simulate_lossless(cfg: &ScenarioConfig) -> Result<LosslessData> {
    cfg.check()?;
    let truth = cfg.make_phantom().stage("phantom")?;
    let (time, sensors) = cfg.forward_grids().stage("forward grids")?;
    let pressure = spectral_forward(&truth, &time, &sensors, ForwardOptions::default()).stage("forward")?;
    Ok(LosslessData { truth, pressure })
}

/// p ↦ p^a through q = ∫p, q^a = M q, p^a = ∂_t q^a with the forward-side operator.
pub fn attenuate(cfg: &ScenarioConfig, p: &WaveData) -> Result<WaveData> {
    let opts = cfg.forward_resolution().system;
    let system = build_system(&cfg.model, &p.time, &opts).stage("forward attenuation operator")?;
    attenuate_with(&system, p)
}

pub fn attenuate_with(system: &AttenuationSystem, p: &WaveData) -> Result<WaveData> {
    if p.kind != DataKind::Pressure {
        return Err(Error::input(format!("attenuation acts on lossless pressure, got {:?}", p.kind)));
    }
    let q = time_integrate(p)?;
    let qa = system.apply(&q).stage("apply attenuation")?;
    time_differentiate(&qa)
}

/// Noise on the forward grid, then transfer to the inversion grids.
pub fn measure(cfg: &ScenarioConfig, pa: &WaveData) -> Result<WaveData> {
    let noisy = add_noise(pa, cfg.noise, cfg.seed).stage("noise")?;
    let (time, sensors) = cfg.inversion_grids()?;
    resample_data(&noisy, &time, &sensors).stage("resample")
}

/// Runs every method on measured data and scores it against the phantom.
pub fn reconstruct_methods(
    cfg: &ScenarioConfig,
    data: &WaveData,
    system: Option<&AttenuationSystem>,
) -> Result<(Vec<ReconImage>, Vec<StageTime>)> {
    let grid = cfg.image_grid()?;
    let mut clock = Clock::new();
    let built;
    let system = match system {
        Some(s) => s,
        None => {
            built = build_system(&cfg.model, &data.time, &cfg.inversion.system).stage("inversion operator")?;
            clock.lap("inversion operator");
            &built
        }
    };
    let mut images = Vec::new();
    for m in cfg.methods() {
        let img = match m {
            Method::NaiveUbp => reconstruct_naive(data, &grid, &cfg.ubp),
            Method::Compensated => reconstruct_compensated(data, system.k_inf, &grid, &cfg.ubp),
            Method::Full => reconstruct_full(data, system, cfg.regularization, &grid, &cfg.ubp),
            _ => unreachable!("not a reconstruction method"),
        }
        .stage(m.tag())?;
        clock.lap(m.tag());
        images.push(img);
    }
    Ok((images, clock.log))
}

/// Scores reconstructions and extracts the y = 0 cross-section.
pub fn score(truth: &ReconImage, images: &[ReconImage]) -> Result<(Vec<(Method, f64)>, Section)> {
    let errors = images
        .iter()
        .map(|img| Ok((img.method, rel_l2_error(img, truth)?)))
        .collect::<Result<Vec<_>>>()?;
    let (coords, t) = cross_section(truth, Axis::X, 0.0)?;
    let methods = images
        .iter()
        .map(|img| Ok((img.method, cross_section(img, Axis::X, 0.0)?.1)))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        errors,
        Section {
            coords,
            truth: t,
            methods,
        },
    ))
}

/// Attenuation, measurement and reconstruction from precomputed lossless data.
pub fn run_from_lossless(cfg: &ScenarioConfig, lossless: &LosslessData) -> Result<ScenarioResult> {
    cfg.check()?;
    let (time, sensors) = cfg.forward_grids()?;
    if !lossless.pressure.time.same_as(&time) || !lossless.pressure.sensors.same_as(&sensors) {
        return Err(Error::GridMismatch(
            "lossless data were simulated on different forward grids".into(),
        ));
    }
    let mut clock = Clock::new();
    let pa = attenuate(cfg, &lossless.pressure).stage("attenuate")?;
    clock.lap("attenuate");
    let data = measure(cfg, &pa)?;
    clock.lap("measure");
    let (reconstructions, times) = reconstruct_methods(cfg, &data, None)?;
    let truth = ReconImage::truth(&lossless.truth);
    let (errors, section) = score(&truth, &reconstructions).stage("metrics")?;
    let mut runtimes = clock.log;
    runtimes.extend(times);
    Ok(ScenarioResult {
        config: cfg.clone(),
        truth,
        data,
        reconstructions,
        errors,
        section,
        runtimes,
    })
}

/// phantom → lossless forward → attenuation → noise → resampling → reconstructions → metrics.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let t0 = Instant::now();
    let lossless = simulate_lossless(cfg)?;
    let forward_secs = t0.elapsed().as_secs_f64();
    let mut res = run_from_lossless(cfg, &lossless)?;
    res.runtimes.insert(
        0,
        StageTime {
            stage: "forward".into(),
            seconds: forward_secs,
        },
    );
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_round_trip_through_toml() {
        for p in Preset::ALL {
            let cfg = ScenarioConfig::preset(p);
            cfg.check().unwrap();
            let text = cfg.to_toml_string().unwrap();
            assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn config_errors_name_the_field() {
        let mut cfg = ScenarioConfig::preset(Preset::NswCircle);
        cfg.forward = cfg.inversion;
        let e = cfg.check().unwrap_err().to_string();
        assert!(e.contains("forward"), "{e}");
        let e = ScenarioConfig::from_toml_str("t_final = 6.0\nbogus = 1\n").unwrap_err().to_string();
        assert!(e.contains("bogus") || e.contains("model"), "{e}");
        let mut cfg = ScenarioConfig::preset(Preset::NswCircle);
        cfg.noise = -1.0;
        assert!(cfg.check().unwrap_err().to_string().contains("noise"));
    }

    #[test]
    fn crime_mode_uses_inversion_grids() {
        let mut cfg = ScenarioConfig::preset(Preset::ConstantCircle);
        cfg.avoid_inverse_crime = false;
        let (t, s) = cfg.forward_grids().unwrap();
        assert_eq!((t.n, s.len()), (443, 849));
    }

    #[test]
    fn methods_per_law() {
        assert_eq!(ScenarioConfig::preset(Preset::ConstantLine).methods().len(), 2);
        assert_eq!(ScenarioConfig::preset(Preset::NswLine).methods().len(), 3);
    }
}
