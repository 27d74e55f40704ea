//! `ATWV1` binary grids: fixed 80-byte header then row-major f64 LE payload.
//!
//! Header layout (all little-endian):
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 5 | magic `ATWV1` |
//! | 5 | 1 | kind |
//! | 6 | 1 | ndim (1..=3) |
//! | 7 | 1 | aux code (image method, sensor curve) |
//! | 8 | 24 | dims, 3 × u64, unused = 1 |
//! | 32 | 24 | spacing, 3 × f64 |
//! | 56 | 24 | origin, 3 × f64 |
//!
//! Axis 0 is the slowest-varying index.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::recon::{ImageGrid, Method, ReconImage};
use crate::wavefield::{DataKind, Geometry, Phantom, SensorArray, TimeGrid, WaveData};

pub const MAGIC: &[u8; 5] = b"ATWV1";
pub const HEADER_LEN: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum GridKind {
    Image = 1,
    Pressure = 2,
    Integrated = 3,
    Attenuated = 4,
    AttenuatedIntegrated = 5,
    Phantom = 6,
    Matrix = 7,
}

impl GridKind {
    fn from_code(c: u8) -> Option<Self> {
        use GridKind::*;
        [Image, Pressure, Integrated, Attenuated, AttenuatedIntegrated, Phantom, Matrix]
            .into_iter()
            .find(|k| *k as u8 == c)
    }

    fn of_data(k: DataKind) -> Self {
        match k {
            DataKind::Pressure => GridKind::Pressure,
            DataKind::Integrated => GridKind::Integrated,
            DataKind::Attenuated => GridKind::Attenuated,
            DataKind::AttenuatedIntegrated => GridKind::AttenuatedIntegrated,
        }
    }

    fn data_kind(self) -> Option<DataKind> {
        match self {
            GridKind::Pressure => Some(DataKind::Pressure),
            GridKind::Integrated => Some(DataKind::Integrated),
            GridKind::Attenuated => Some(DataKind::Attenuated),
            GridKind::AttenuatedIntegrated => Some(DataKind::AttenuatedIntegrated),
            _ => None,
        }
    }
}

const METHODS: [Method; 5] = [
    Method::NaiveUbp,
    Method::ConstAtten,
    Method::Compensated,
    Method::Full,
    Method::Truth,
];

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub kind: GridKind,
    pub aux: u8,
    pub dims: Vec<usize>,
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub data: Vec<f64>,
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl GridFile {
    pub fn new(kind: GridKind, dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::input(format!("grid files hold 1 to 3 dimensions, got {}", dims.len())));
        }
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::input(format!("dims {dims:?} do not match {} values", data.len())));
        }
        Ok(GridFile {
            kind,
            aux: 0,
            dims,
            spacing: [0.0; 3],
            origin: [0.0; 3],
            data,
        })
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut h = [0u8; HEADER_LEN];
        h[..5].copy_from_slice(MAGIC);
        h[5] = self.kind as u8;
        h[6] = self.dims.len() as u8;
        h[7] = self.aux;
        for k in 0..3 {
            let d = self.dims.get(k).copied().unwrap_or(1) as u64;
            h[8 + 8 * k..16 + 8 * k].copy_from_slice(&d.to_le_bytes());
            h[32 + 8 * k..40 + 8 * k].copy_from_slice(&self.spacing[k].to_le_bytes());
            h[56 + 8 * k..64 + 8 * k].copy_from_slice(&self.origin[k].to_le_bytes());
        }
        w.write_all(&h)?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Parses a grid; `path` only labels errors.
    pub fn read_from(r: &mut impl Read, path: &Path) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN];
        r.read_exact(&mut h).map_err(|_| format_err(path, "truncated header"))?;
        if &h[..5] != MAGIC {
            return Err(format_err(path, "bad magic, not an ATWV1 grid"));
        }
        let kind = GridKind::from_code(h[5]).ok_or_else(|| format_err(path, format!("unknown kind {}", h[5])))?;
        let ndim = h[6] as usize;
        if !(1..=3).contains(&ndim) {
            return Err(format_err(path, format!("ndim {ndim} out of range")));
        }
        let u = |o: usize| u64::from_le_bytes(h[o..o + 8].try_into().unwrap());
        let f = |o: usize| f64::from_le_bytes(h[o..o + 8].try_into().unwrap());
        let dims: Vec<usize> = (0..ndim).map(|k| u(8 + 8 * k) as usize).collect();
        let len = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|n| n.checked_mul(8).is_some())
            .ok_or_else(|| format_err(path, "dimensions overflow"))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io_err(path))?;
        if bytes.len() != len * 8 {
            return Err(format_err(
                path,
                format!("payload is {} bytes, dims {:?} need {}", bytes.len(), dims, len * 8),
            ));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(GridFile {
            kind,
            aux: h[7],
            dims,
            spacing: [f(32), f(40), f(48)],
            origin: [f(56), f(64), f(72)],
            data,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(io_err(path))?;
        Self::read_from(&mut BufReader::new(file), path)
    }

    fn array2(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.dims[0], self.dims[1]), self.data.clone()).expect("checked dims")
    }

    fn expect_2d(&self, what: &str) -> Result<()> {
        if self.dims.len() != 2 {
            return Err(Error::input(format!("{what} grid must be 2D, got dims {:?}", self.dims)));
        }
        Ok(())
    }

    pub fn from_image(img: &ReconImage) -> Self {
        let g = img.grid;
        GridFile {
            kind: GridKind::Image,
            aux: METHODS.iter().position(|m| *m == img.method).unwrap() as u8,
            dims: vec![g.ny, g.nx],
            spacing: [g.spacing, g.spacing, 0.0],
            origin: [g.origin[1], g.origin[0], 0.0],
            data: img.values.iter().copied().collect(),
        }
    }

    pub fn to_image(&self) -> Result<ReconImage> {
        if !matches!(self.kind, GridKind::Image | GridKind::Phantom) {
            return Err(Error::input(format!("expected an image grid, found {:?}", self.kind)));
        }
        self.expect_2d("image")?;
        let method = if self.kind == GridKind::Phantom {
            Method::Truth
        } else {
            *METHODS
                .get(self.aux as usize)
                .ok_or_else(|| Error::input(format!("unknown method code {}", self.aux)))?
        };
        Ok(ReconImage {
            grid: ImageGrid {
                nx: self.dims[1],
                ny: self.dims[0],
                spacing: self.spacing[0],
                origin: [self.origin[1], self.origin[0]],
            },
            values: self.array2(),
            method,
            data_fingerprint: String::new(),
        })
    }

    pub fn from_phantom(ph: &Phantom) -> Self {
        let mut g = Self::from_image(&ReconImage::truth(ph));
        g.kind = GridKind::Phantom;
        g.aux = 0;
        g
    }

    pub fn to_phantom(&self) -> Result<Phantom> {
        let img = self.to_image()?;
        Ok(Phantom {
            spacing: img.grid.spacing,
            origin: img.grid.origin,
            values: img.values,
            ellipses: None,
        })
    }

    /// Time × sensor data; the curve is stored so the file is self-describing.
    pub fn from_wave(d: &WaveData) -> Self {
        let (aux, a, b) = match d.sensors.geometry {
            Geometry::Circle { radius, .. } => (1, radius, 0.0),
            Geometry::Line { length, standoff, .. } => (2, length, standoff),
        };
        GridFile {
            kind: GridKind::of_data(d.kind),
            aux,
            dims: vec![d.time.n, d.sensors.len()],
            spacing: [d.time.dt, a, 0.0],
            origin: [d.time.t(0), b, 0.0],
            data: d.values.iter().copied().collect(),
        }
    }

    pub fn to_wave(&self) -> Result<WaveData> {
        let kind = self
            .kind
            .data_kind()
            .ok_or_else(|| Error::input(format!("expected wave data, found {:?}", self.kind)))?;
        self.expect_2d("wave data")?;
        let (n_t, count) = (self.dims[0], self.dims[1]);
        let geometry = match self.aux {
            1 => Geometry::Circle {
                radius: self.spacing[1],
                count,
            },
            2 => Geometry::Line {
                length: self.spacing[1],
                standoff: self.origin[1],
                count,
            },
            c => return Err(Error::input(format!("unknown sensor curve code {c}"))),
        };
        let dt = self.spacing[0];
        if !(dt.is_finite() && dt > 0.0) || n_t < 2 {
            return Err(Error::input(format!("invalid time sampling: dt = {dt}, N_T = {n_t}")));
        }
        let time = TimeGrid { dt, n: n_t };
        WaveData::new(kind, time, SensorArray::new(geometry)?, self.array2())
    }

    pub fn from_matrix(m: &DMatrix<f64>, dt: f64) -> Self {
        GridFile {
            kind: GridKind::Matrix,
            aux: 0,
            dims: vec![m.nrows(), m.ncols()],
            spacing: [dt, dt, 0.0],
            origin: [0.0; 3],
            data: (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.kind != GridKind::Matrix {
            return Err(Error::input(format!("expected a matrix grid, found {:?}", self.kind)));
        }
        self.expect_2d("matrix")?;
        Ok(DMatrix::from_row_slice(self.dims[0], self.dims[1], &self.data))
    }
}
