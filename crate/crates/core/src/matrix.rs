// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Fixed-size 4×4 matrix newtypes over the quadrature vector (X_a, P_a, X_b, P_b).
//!
//! All three serialize as row-major 16-element arrays.

use std::sync::OnceLock;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<f64>;

/// Entrywise tolerance for symmetry checks on constructed matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default stability margin: eigenvalues with real part ≥ −ε are treated as unstable.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// The symplectic form Ω = J ⊕ J with J = [[0, 1], [−1, 0]].
pub fn symplectic_form() -> Mat4 {
    Mat4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

pub(crate) fn to_row_major(m: &Mat4) -> [f64; 16] {
    let mut out = [0.0; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[4 * r + c] = m[(r, c)];
        }
    }
    out
}

pub(crate) fn from_row_major(v: &[f64]) -> Result<Mat4> {
    if v.len() != 16 {
        return Err(Error::InvalidParams(format!(
            "matrix needs 16 row-major entries, got {}",
            v.len()
        )));
    }
    Ok(Mat4::from_row_slice(v))
}

fn symmetrize(m: &Mat4) -> Mat4 {
    (m + m.transpose()) * 0.5
}

fn max_asymmetry(m: &Mat4) -> f64 {
    (m - m.transpose()).amax()
}

fn check_finite(m: &Mat4) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParams("matrix has non-finite entries".into()))
    }
}

fn check_symmetric(m: &Mat4) -> Result<()> {
    let scale = m.amax().max(1.0);
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::InvalidParams(format!(
            "matrix is not symmetric (max |M - Mᵀ| = {asym:e})"
        )));
    }
    Ok(())
}

macro_rules! row_major_serde {
    ($ty:ident) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                to_row_major(self.matrix()).serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let v = Vec::<f64>::deserialize(d)?;
                let m = from_row_major(&v).map_err(serde::de::Error::custom)?;
                $ty::new(m).map_err(serde::de::Error::custom)
            }
        }
    };
}

/// Drift matrix A of the linear Langevin equation Ṙ = A R + ξ.
#[derive(Debug, Clone)]
pub struct DriftMatrix {
    m: Mat4,
    hurwitz: OnceLock<bool>,
}

impl DriftMatrix {
    pub fn new(m: Mat4) -> Result<Self> {
        check_finite(&m)?;
        Ok(Self {
            m,
            hurwitz: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    /// Largest real part over the spectrum.
    pub fn max_real_eigenvalue(&self) -> f64 {
        self.m
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        self.m
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Hurwitz test at the default margin; the answer is cached.
    pub fn is_hurwitz(&self) -> bool {
        *self
            .hurwitz
            .get_or_init(|| self.max_real_eigenvalue() < -STABILITY_MARGIN)
    }
}

impl PartialEq for DriftMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}

row_major_serde!(DriftMatrix);

/// Diffusion matrix D with ⟨ξ_i(t) ξ_j(t')⟩ = D_ij δ(t − t').
///
/// Symmetry is enforced on construction. Positive semidefiniteness is not,
/// because inferred diffusions may legitimately fail it; see [`DiffusionMatrix::is_psd`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix(Mat4);

impl DiffusionMatrix {
    /// Eigenvalue floor for the PSD test.
    pub const PSD_TOL: f64 = 1e-12;

    pub fn new(m: Mat4) -> Result<Self> {
        check_finite(&m)?;
        check_symmetric(&m)?;
        Ok(Self(symmetrize(&m)))
    }

    pub(crate) fn from_symmetrized(m: Mat4) -> Self {
        Self(symmetrize(&m))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.symmetric_eigenvalues().min()
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -Self::PSD_TOL
    }
}

row_major_serde!(DiffusionMatrix);

/// Symmetrized second moments V_ij = ½⟨{ΔR_i, ΔR_j}⟩ of the quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(Mat4);

impl CovarianceMatrix {
    pub fn new(m: Mat4) -> Result<Self> {
        check_finite(&m)?;
        check_symmetric(&m)?;
        Ok(Self(symmetrize(&m)))
    }

    /// Symmetrizes without checking; for results of exact symmetric algebra.
    pub(crate) fn from_symmetrized(m: Mat4) -> Self {
        Self(symmetrize(&m))
    }

    pub fn identity_scaled(s: f64) -> Self {
        Self(Mat4::identity() * s)
    }

    /// Vacuum state, ½·I₄.
    pub fn vacuum() -> Self {
        Self::identity_scaled(0.5)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Local blocks (A, B) and the cross block C of V = [[A, C], [Cᵀ, B]].
    pub fn blocks(&self) -> ([[f64; 2]; 2], [[f64; 2]; 2], [[f64; 2]; 2]) {
        let m = &self.0;
        let blk = |r: usize, c: usize| {
            [
                [m[(r, c)], m[(r, c + 1)]],
                [m[(r + 1, c)], m[(r + 1, c + 1)]],
            ]
        };
        (blk(0, 0), blk(2, 2), blk(0, 2))
    }

    /// Eigenvalues of the Hermitian matrix V + (i/2)Ω, ascending.
    pub fn heisenberg_spectrum(&self) -> [f64; 4] {
        let omega = symplectic_form();
        let h = self.0.map(|x| Complex64::new(x, 0.0))
            + omega.map(|x| Complex64::new(0.0, 0.5 * x));
        let ev = h.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }
}

row_major_serde!(CovarianceMatrix);
