//! `pat-atten`: simulate attenuated photoacoustic data and reconstruct from it.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pat_atten::experiments::{
    reconstruct_methods, run_scenario, score, simulate_lossless, attenuate, measure, Preset, ScenarioConfig,
    ScenarioResult, StageTime,
};
use pat_atten::io::{load_config, write_scenario_result, GridFile, GridKind};
use pat_atten::model::{symmetric_grid, validate_model, AttenuationModel, ValidationOptions};
use pat_atten::recon::{Method, ReconImage};
use pat_atten::Error;

#[derive(Parser, Debug)]
#[command(name = "pat-atten", version, about = "Photoacoustic reconstruction in weakly attenuating media")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate attenuated data p^a on the inversion grids.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Reconstruct images from a data grid file.
    Reconstruct {
        /// p^a data written by `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Ground truth image or phantom grid; defaults to the config's phantom.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Audit an attenuation law on a symmetric frequency grid.
    ValidateModel {
        #[command(flatten)]
        law: LawArgs,
        /// Grid covers [-omega_max, omega_max].
        #[arg(long, default_value_t = 100.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 20001)]
        samples: usize,
        /// Finite-difference step for κ'.
        #[arg(long)]
        fd_step: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Toml)]
        format: Format,
    },
    /// Forward simulation, attenuation, noise and every reconstruction.
    RunScenario {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Relative L2 error of one image against another.
    Compare {
        image: PathBuf,
        reference: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Built-in scenario, used when no --config is given.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the config's noise level (std as a fraction of max |p^a|).
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory.
    #[arg(long, env = "PAT_OUTPUT_DIR", default_value = "pat-output")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LawArgs {
    #[arg(long, value_enum)]
    law: Option<Law>,
    #[arg(long)]
    k_inf: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tau_tilde: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    exponent: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum Law {
    Constant,
    Nsw,
    PowerLaw,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Toml,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ");
            eprintln!("error: {msg}");
            let numerical = e
                .chain()
                .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_numerical));
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let common = &cli.common;
    match cli.command {
        Command::Simulate { scenario } => simulate(common, &scenario),
        Command::Reconstruct {
            data,
            truth,
            scenario,
        } => reconstruct(common, &scenario, &data, truth.as_deref()),
        Command::ValidateModel {
            law,
            omega_max,
            samples,
            fd_step,
            format,
        } => validate(common, &law, omega_max, samples, fd_step, format),
        Command::RunScenario { scenario } => scenario_cmd(common, &scenario),
        Command::Compare { image, reference } => compare(&image, &reference),
    }
}

fn scenario_config(common: &Common, args: &ScenarioArgs) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = match (&common.config, &args.preset) {
        (Some(_), Some(_)) => bail!("give either --config or --preset, not both"),
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => ScenarioConfig::preset(name.parse::<Preset>()?),
        (None, None) => bail!(
            "no scenario: pass --config FILE or --preset {{{}}}",
            Preset::ALL.map(|p| p.name()).join(",")
        ),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.noise {
        cfg.noise = n;
    }
    cfg.check()?;
    Ok(cfg)
}

fn simulate(common: &Common, args: &ScenarioArgs) -> anyhow::Result<()> {
    let cfg = scenario_config(common, args)?;
    let lossless = simulate_lossless(&cfg)?;
    let pa = attenuate(&cfg, &lossless.pressure)?;
    let data = measure(&cfg, &pa)?;
    let out = &args.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    GridFile::from_wave(&data).save(&out.join("data.atwv"))?;
    GridFile::from_wave(&lossless.pressure).save(&out.join("pressure.atwv"))?;
    GridFile::from_phantom(&lossless.truth).save(&out.join("phantom.atwv"))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
    println!(
        "wrote {} ({} times x {} sensors)",
        out.join("data.atwv").display(),
        data.time.n,
        data.sensors.len()
    );
    Ok(())
}

fn load_truth(path: &Path) -> anyhow::Result<ReconImage> {
    let g = GridFile::load(path)?;
    let mut img = g.to_image()?;
    img.method = Method::Truth;
    Ok(img)
}

fn reconstruct(common: &Common, args: &ScenarioArgs, data: &Path, truth: Option<&Path>) -> anyhow::Result<()> {
    let cfg = scenario_config(common, args)?;
    let grid = GridFile::load(data)?;
    if grid.kind != GridKind::Attenuated {
        bail!("{}: expected attenuated pressure data, found {:?}", data.display(), grid.kind);
    }
    let data = grid.to_wave()?;
    let truth = match truth {
        Some(p) => load_truth(p)?,
        None => ReconImage::truth(&cfg.make_phantom()?),
    };
    let (reconstructions, runtimes) = reconstruct_methods(&cfg, &data, None)?;
    let (errors, section) = score(&truth, &reconstructions)?;
    let res = ScenarioResult {
        config: cfg,
        truth,
        data,
        reconstructions,
        errors,
        section,
        runtimes,
    };
    finish(&args.out, &res)
}

fn scenario_cmd(common: &Common, args: &ScenarioArgs) -> anyhow::Result<()> {
    let cfg = scenario_config(common, args)?;
    let t0 = Instant::now();
    let mut res = run_scenario(&cfg)?;
    res.runtimes.push(StageTime {
        stage: "total".into(),
        seconds: t0.elapsed().as_secs_f64(),
    });
    finish(&args.out, &res)
}

fn finish(out: &Path, res: &ScenarioResult) -> anyhow::Result<()> {
    write_scenario_result(out, res)?;
    for (m, e) in &res.errors {
        println!("{:<12} rel_l2_error = {e:.6}", m.tag());
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn model_from_file(path: &Path) -> anyhow::Result<AttenuationModel> {
    #[derive(serde::Deserialize)]
    struct Wrapper {
        model: AttenuationModel,
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(cfg) = ScenarioConfig::from_toml_str(&text) {
        return Ok(cfg.model);
    }
    if let Ok(w) = toml::from_str::<Wrapper>(&text) {
        return Ok(w.model);
    }
    toml::from_str::<AttenuationModel>(&text)
        .map_err(|e| anyhow!(Error::Config(format!("{}: model: {e}", path.display()))))
}

fn model_from_args(common: &Common, law: &LawArgs) -> anyhow::Result<AttenuationModel> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| anyhow!("--{flag} is required for this law"));
    let model = match (law.law, &common.config) {
        (Some(_), Some(_)) => bail!("give either --config or --law, not both"),
        (None, Some(path)) => model_from_file(path)?,
        (None, None) => bail!("no model: pass --config FILE or --law {{constant,nsw,power-law}}"),
        (Some(Law::Constant), None) => AttenuationModel::constant(need(law.k_inf, "k-inf")?),
        (Some(Law::Nsw), None) => AttenuationModel::nsw(need(law.tau, "tau")?, need(law.tau_tilde, "tau-tilde")?),
        (Some(Law::PowerLaw), None) => {
            AttenuationModel::power_law(need(law.amplitude, "amplitude")?, need(law.exponent, "exponent")?)
        }
    };
    model.check()?;
    Ok(model)
}

fn validate(
    common: &Common,
    law: &LawArgs,
    omega_max: f64,
    samples: usize,
    fd_step: Option<f64>,
    format: Format,
) -> anyhow::Result<()> {
    if !(omega_max.is_finite() && omega_max > 0.0) || samples < 3 {
        bail!("--omega-max must be positive and --samples at least 3");
    }
    let model = model_from_args(common, law)?;
    let grid = symmetric_grid(omega_max, samples);
    let opts = ValidationOptions {
        fd_step,
        ..Default::default()
    };
    let report = validate_model(&model, &grid, opts)?;
    match format {
        Format::Toml => print!("{}", toml::to_string_pretty(&report)?),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn compare(image: &Path, reference: &Path) -> anyhow::Result<()> {
    let a = GridFile::load(image)?.to_image()?;
    let b = GridFile::load(reference)?.to_image()?;
    let err = pat_atten::experiments::rel_l2_error(&a, &b)?;
    let max_abs = a
        .values
        .iter()
        .zip(b.values.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    println!("rel_l2_error = {err:.17e}");
    println!("max_abs_diff = {max_abs:.17e}");
    Ok(())
}
