//! Photoacoustic reconstruction in weakly attenuating media.
//!
//! The pipeline is: an [`model::AttenuationModel`] defines κ(ω); [`wavefield`]
//! simulates lossless data; [`operator`] turns it into attenuated data (and back);
//! [`recon`] back-projects; [`experiments`] wires the scenarios together.

pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod operator;
pub mod recon;
pub mod wavefield;

pub use error::{Error, Result};
