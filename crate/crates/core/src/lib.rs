//! Joint transmit beamforming and antenna orientation optimization for
//! K-pair MISO interference channels whose transmit arrays are built from
//! directional, rotatable elements.
//!
//! Indexing: pairs `k` and elements `m` are numbered from 1 in the
//! physical description of the model and from 0 everywhere in this crate.
//! Element `m` of an `Mx x My` array sits at column `m % Mx` and row
//! `m / Mx`.
//!
//! Module map:
//! - [`scene`]: physical constants and seeded random topologies.
//! - [`channel`]: orientation-dependent LoS/NLoS channels and gradients.
//! - [`metrics`]: SINR, rates, weighted sum-rate and its orientation gradient.
//! - [`wmmse`]: fixed-orientation beamforming by WMMSE.
//! - [`linear_bf`]: closed-form MRT and ZF beamformers.
//! - [`orient_fw`]: Frank-Wolfe orientation updates on spherical caps and
//!   the alternating optimization driver.
//! - [`discrete`]: orientation codebooks and cross-entropy search.
//! - [`harness`]: experiment specs, Monte-Carlo sweeps and result files.

pub mod channel;
pub mod discrete;
mod error;
pub mod harness;
pub mod linear_bf;
pub mod metrics;
pub mod orient_fw;
pub mod scene;
pub mod wmmse;

pub use error::{Error, Result};

/// Complex scalar used for channels and beamformers.
pub type C64 = num_complex::Complex<f64>;

/// Real 3-vector (positions, boresights, gradients).
pub type Vec3 = nalgebra::Vector3<f64>;

/// Complex M-vector.
pub type CVector = nalgebra::DVector<C64>;

/// Complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
