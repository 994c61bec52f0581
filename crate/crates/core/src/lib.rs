// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Steady-state entanglement of two coupled collective bosonic modes.
//!
//! Gaussian drift–diffusion dynamics, PPT and Duan–Simon witnesses,
//! stochastic quadrature records, classical null models, the shared
//! analysis pipeline, and operational threshold calculators.

pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod matrix;
pub mod null_models;
pub mod optimize;
pub mod params;
pub mod pipeline;
pub mod sweep;
pub mod thresholds;
pub mod trajectory;

pub use error::{Error, Result};
pub use matrix::{CovarianceMatrix, DiffusionMatrix, DriftMatrix, Mat4};
pub use params::{ModelParams, Preset};
