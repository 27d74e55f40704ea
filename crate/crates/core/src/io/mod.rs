//! Persistence: binary grids, CSV tables, PGM previews and the operator cache.

mod grid_file;

pub use grid_file::{GridFile, GridKind, HEADER_LEN, MAGIC};

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{ScenarioConfig, ScenarioResult, StageTime};
use crate::model::AttenuationModel;
use crate::operator::{build_system, AttenuationSystem, SystemOptions};
use crate::recon::{Method, ReconImage};
use crate::wavefield::TimeGrid;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

/// 17 significant digits: enough for every f64 to parse back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes equal-length columns under a header row.
pub fn write_csv(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    if headers.len() != columns.len() {
        return Err(Error::input(format!(
            "{} headers for {} columns",
            headers.len(),
            columns.len()
        )));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::input("CSV columns differ in length"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(headers).map_err(|e| csv_err(path, e))?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| format_f64(c[i])))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a numeric CSV written by [`write_csv`] as (headers, columns).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                msg: format!("row {}: `{field}` is not a number", line + 2),
            })?;
            cols[k].push(v);
        }
    }
    Ok((headers, cols))
}

/// Grey-level mapping of a PGM render.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Normalization {
    MinMax,
    Window { lo: f64, hi: f64 },
}

/// Sidecar written next to every PGM so the render can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub normalization: Normalization,
    /// Values mapped to 0 and 65535.
    pub lo: f64,
    pub hi: f64,
    pub method: String,
    /// The first PGM row is the largest y.
    pub top_row_is_max_y: bool,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

/// 16-bit binary PGM (P5) plus a `<path>.toml` sidecar recording the window.
pub fn write_image_pgm(img: &ReconImage, path: &Path, norm: Normalization) -> Result<()> {
    if img.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("cannot render an image with non-finite pixels"));
    }
    let (lo, hi) = match norm {
        Normalization::MinMax => img
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
        Normalization::Window { lo, hi } => {
            if !(hi > lo) {
                return Err(Error::input(format!("PGM window needs hi > lo, got [{lo}, {hi}]")));
            }
            (lo, hi)
        }
    };
    let span = hi - lo;
    let (ny, nx) = img.values.dim();
    let mut buf = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = img.values[[iy, ix]];
            // a constant image renders mid-grey
            let level = if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
            let g = (level * 65535.0).round() as u16;
            buf.extend_from_slice(&g.to_be_bytes());
        }
    }
    fs::write(path, buf).map_err(io_err(path))?;
    let side = PgmSidecar {
        normalization: norm,
        lo,
        hi,
        method: img.method.tag().into(),
        top_row_is_max_y: true,
    };
    let side_path = sidecar_path(path);
    let text = toml::to_string_pretty(&side).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&side_path, text).map_err(io_err(&side_path))
}

/// Reads a 16-bit P5 file written by [`write_image_pgm`] as (width, height, samples).
pub fn read_pgm16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |m: &str| Error::Format {
        path: path.to_path_buf(),
        msg: m.into(),
    };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(bad("not a 16-bit binary PGM"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let px = bytes.get(pos..).ok_or_else(|| bad("missing pixels"))?;
    if px.len() != 2 * w * h {
        return Err(bad("pixel payload has the wrong length"));
    }
    Ok((w, h, px.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

/// Reads a scenario config; errors name the offending field.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ScenarioConfig::from_toml_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Attenuation matrices keyed by (model, N_T, Δ_T, K, quadrature, convolution mode).
#[derive(Debug, Clone)]
pub struct SystemCache {
    pub dir: PathBuf,
}

impl SystemCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SystemCache { dir: dir.into() }
    }

    pub fn key(model: &AttenuationModel, time: &TimeGrid, opts: &SystemOptions) -> String {
        let mut h = DefaultHasher::new();
        model.fingerprint().hash(&mut h);
        time.n.hash(&mut h);
        time.dt.to_bits().hash(&mut h);
        opts.order.hash(&mut h);
        opts.quadrature.omega_max.to_bits().hash(&mut h);
        opts.quadrature.nodes.hash(&mut h);
        opts.quadrature.tail_subtraction.hash(&mut h);
        format!("{:?}", opts.convolution).hash(&mut h);
        format!("system-{:016x}.atwv", h.finish())
    }

    /// Loads a cached matrix or builds and stores it.
    pub fn get_or_build(
        &self,
        model: &AttenuationModel,
        time: &TimeGrid,
        opts: &SystemOptions,
    ) -> Result<AttenuationSystem> {
        let path = self.dir.join(Self::key(model, time, opts));
        if path.exists() {
            let g = GridFile::load(&path)?;
            if g.spacing[0].to_bits() == time.dt.to_bits() {
                return AttenuationSystem::from_parts(
                    *time,
                    model.fingerprint(),
                    model.k_infinity()?,
                    *opts,
                    g.to_matrix()?,
                );
            }
        }
        let sys = build_system(model, time, opts)?;
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        // write then rename so a concurrent reader never sees a partial file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        GridFile::from_matrix(sys.matrix(), time.dt).save(&tmp)?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(sys)
    }
}

#[derive(Debug, Serialize)]
struct MetricsFile<'a> {
    scenario: &'a str,
    errors: Vec<MetricRow>,
    runtimes: &'a [StageTime],
}

#[derive(Debug, Serialize)]
struct MetricRow {
    method: String,
    rel_l2_error: f64,
}

/// Writes config, measured data, images (grid + PGM), cross-section CSV and metrics.
pub fn write_scenario_result(dir: &Path, res: &ScenarioResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cfg = res.config.to_toml_string()?;
    let p = dir.join("config.toml");
    fs::write(&p, cfg).map_err(io_err(&p))?;
    GridFile::from_wave(&res.data).save(&dir.join("data.atwv"))?;
    GridFile::from_image(&res.truth).save(&dir.join("truth.atwv"))?;
    write_image_pgm(&res.truth, &dir.join("truth.pgm"), Normalization::MinMax)?;
    for img in &res.reconstructions {
        let tag = short_name(img.method);
        GridFile::from_image(img).save(&dir.join(format!("{tag}.atwv")))?;
        write_image_pgm(img, &dir.join(format!("{tag}.pgm")), Normalization::MinMax)?;
    }
    write_section_csv(&dir.join("section.csv"), res)?;
    write_metrics(&dir.join("metrics.toml"), res)
}

fn write_section_csv(path: &Path, res: &ScenarioResult) -> Result<()> {
    let s = &res.section;
    let mut headers = vec!["x", "truth"];
    let mut cols: Vec<&[f64]> = vec![&s.coords, &s.truth];
    for (m, v) in &s.methods {
        headers.push(short_name(*m));
        cols.push(v);
    }
    write_csv(path, &headers, &cols)
}

/// Column name used in section tables.
pub fn short_name(m: Method) -> &'static str {
    match m {
        Method::NaiveUbp => "naive",
        other => other.tag(),
    }
}

fn write_metrics(path: &Path, res: &ScenarioResult) -> Result<()> {
    let m = MetricsFile {
        scenario: &res.config.name,
        errors: res
            .errors
            .iter()
            .map(|(k, e)| MetricRow {
                method: k.tag().into(),
                rel_l2_error: *e,
            })
            .collect(),
        runtimes: &res.runtimes,
    };
    let text = toml::to_string_pretty(&m).map_err(|e| Error::Config(e.to_string()))?;
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon::ImageGrid;
    use ndarray::Array2;

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let a = [0.1, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE, -0.0];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        write_csv(&p, &["x", "y"], &[&a, &b]).unwrap();
        let (h, cols) = read_csv(&p).unwrap();
        assert_eq!(h, vec!["x", "y"]);
        assert!(cols[0].iter().zip(&a).all(|(u, v)| u.to_bits() == v.to_bits()));
        let empty = dir.path().join("e.csv");
        write_csv(&empty, &["x"], &[&[]]).unwrap();
        assert_eq!(fs::read_to_string(&empty).unwrap(), "x\n");
        assert!(write_csv(&p, &["x", "y"], &[&a, &b[..2]]).is_err());
    }

    #[test]
    fn constant_image_renders_uniform_grey() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.pgm");
        let img = ReconImage {
            grid: ImageGrid::square(4, 1.0).unwrap(),
            values: Array2::from_elem((4, 4), 0.7),
            method: Method::Full,
            data_fingerprint: String::new(),
        };
        write_image_pgm(&img, &p, Normalization::MinMax).unwrap();
        let (w, h, px) = read_pgm16(&p).unwrap();
        assert_eq!((w, h), (4, 4));
        assert!(px.iter().all(|&g| g == px[0]));
        let side: PgmSidecar = toml::from_str(&fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side.method, "full");
        assert!(write_image_pgm(&img, &p, Normalization::Window { lo: 1.0, hi: 1.0 }).is_err());
    }

    #[test]
    fn pgm_puts_max_y_on_top() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.pgm");
        let img = ReconImage {
            grid: ImageGrid::square(2, 1.0).unwrap(),
            values: Array2::from_shape_vec((2, 2), vec![0.0, 0.0, 1.0, 1.0]).unwrap(),
            method: Method::Truth,
            data_fingerprint: String::new(),
        };
        write_image_pgm(&img, &p, Normalization::Window { lo: 0.0, hi: 1.0 }).unwrap();
        assert_eq!(read_pgm16(&p).unwrap().2, vec![65535, 65535, 0, 0]);
    }

    #[test]
    fn cache_returns_the_same_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SystemCache::new(dir.path());
        let model = AttenuationModel::nsw(0.11, 0.1);
        let tg = TimeGrid::new(2.0, 40).unwrap();
        let opts = SystemOptions::default();
        let a = cache.get_or_build(&model, &tg, &opts).unwrap();
        let b = cache.get_or_build(&model, &tg, &opts).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let other = SystemOptions { order: 8, ..opts };
        assert_ne!(SystemCache::key(&model, &tg, &opts), SystemCache::key(&model, &tg, &other));
    }
}
