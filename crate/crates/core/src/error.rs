// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("drift matrix is not Hurwitz (max real eigenvalue {max_real:e})")]
    UnstableDrift { max_real: f64 },
    #[error("Lyapunov system is numerically singular")]
    SingularSolve,
    #[error("evolution time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("symplectic discriminant is negative ({0:e}); input is not a physical covariance")]
    ComplexRoot(f64),
    #[error("argument outside the admissible domain: {0}")]
    Domain(String),
    #[error("Euler-Maruyama step {dt} exceeds the accuracy limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("classical parametric gain {gain} is at or above the stability threshold {limit}")]
    UnstableGain { gain: f64, limit: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("bandwidth {bandwidth} exceeds the record Nyquist frequency {nyquist}")]
    BandwidthExceedsNyquist { bandwidth: f64, nyquist: f64 },
    #[error("need at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("ensemble statistics need at least 2 estimates, got {0}")]
    InsufficientEnsemble(usize),
    #[error("no voltage-noise input: supply S_V0, R_eff or Re_Y_eff")]
    MissingNoiseInput,
    #[error("zero effective occupancy: the cooperativity boundary is degenerate")]
    ZeroOccupancy,
    #[error("distance {d} lies outside the tabulated range [{min}, {max}]")]
    OutOfRange { d: f64, min: f64, max: f64 },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

pub type Result<T> = std::result::Result<T, Error>;
