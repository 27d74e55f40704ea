//! Discrete attenuation solution operator q ↦ q^a and its inverse.

mod kernel;
mod system;

pub use kernel::{
    compute_r1, compute_r1_with, compute_rk, convolve_step, fourier_lags, ConvolutionMode, KernelQuadrature,
    KernelSeries, LagGrid,
};
pub use system::{
    build_system, AttenuationSystem, Regularization, SystemOptions, REAL_RESIDUE_TOL, SINGULAR_CONDITION,
};
