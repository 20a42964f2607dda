//! Beam codebook design for full-duplex millimeter-wave transceivers.
//!
//! A full-duplex base station transmits to one user with a codebook `F` while
//! receiving from another with a codebook `W`. Leakage through the
//! self-interference channel `H` couples the two. This crate builds the
//! conventional and tapered baselines, designs codebooks that trade coverage
//! against expected coupling under channel uncertainty, evaluates them in a
//! seeded Monte Carlo harness, and draws self-interference from a fitted
//! stochastic model.
//!
//! Module map:
//!
//! - [`geometry`]: planar array responses and coverage grids
//! - [`channel`]: spherical-wave and Rayleigh-mixture self-interference channels
//! - [`quant`]: phase/amplitude quantizer and nearest-point projection
//! - [`codebook`]: conjugate and Taylor-tapered codebooks, beam patterns
//! - [`design`]: coupling-minimizing codebook design by alternating minimization
//! - [`solverkit`]: the constrained quadratic solver underneath [`design`]
//! - [`metrics`]: link SNR/INR/SINR, spectral efficiency, sum-rate ratio
//! - [`montecarlo`]: scenario configuration, trials and sweeps
//! - [`simodel`]: spatial self-interference model and beam refinement
//! - [`io`]: CSV and metadata serialization

pub mod channel;
pub mod codebook;
pub mod design;
mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod montecarlo;
pub mod quant;
pub mod simodel;
pub mod solverkit;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/geometry.md")]
    pub struct Geometry;
    #[doc = include_str!("../../../book/src/quantization.md")]
    pub struct Quantization;
    #[doc = include_str!("../../../book/src/codebooks.md")]
    pub struct Codebooks;
    #[doc = include_str!("../../../book/src/design.md")]
    pub struct Design;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/simodel.md")]
    pub struct SiModel;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
