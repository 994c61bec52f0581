// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Partial transposition, symplectic spectra and entanglement witnesses.
//!
//! Normalization: vacuum quadrature variance ½. A two-mode Gaussian state is
//! entangled iff the smaller symplectic eigenvalue ν̃₋ of its partial transpose
//! is below ½; the Duan–Simon sum of EPR variances is below 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{symplectic_form, CovarianceMatrix, Mat4};

/// PPT threshold on ν̃₋.
pub const PPT_BOUND: f64 = 0.5;
/// Separable lower bound of the Duan–Simon sum.
pub const DUAN_BOUND: f64 = 2.0;
/// Negative discriminants above this are clamped to zero.
pub const DISCRIMINANT_TOL: f64 = 1e-10;
/// Number of standard errors a witness must sit below its bound to count as a violation.
pub const SIGMA_RULE: f64 = 3.0;

/// ν̃₋, the Duan–Simon sum and the resulting verdicts for one dataset or state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub nu_minus: f64,
    pub duan_sum: f64,
    pub entangled_ppt: bool,
    pub entangled_duan: bool,
    pub stderr_nu: f64,
    pub stderr_duan: f64,
}

impl WitnessReport {
    pub const CSV_HEADER: &'static str =
        "nu_minus,duan_sum,entangled_ppt,entangled_duan,stderr_nu,stderr_duan";

    /// Applies the 3σ rule; with zero uncertainties this is the plain inequality.
    pub fn from_values(nu_minus: f64, duan_sum: f64, stderr_nu: f64, stderr_duan: f64) -> Self {
        Self {
            nu_minus,
            duan_sum,
            entangled_ppt: nu_minus + SIGMA_RULE * stderr_nu < PPT_BOUND,
            entangled_duan: duan_sum + SIGMA_RULE * stderr_duan < DUAN_BOUND,
            stderr_nu,
            stderr_duan,
        }
    }

    /// Exact report for a known state.
    pub fn exact(v: &CovarianceMatrix) -> Result<Self> {
        Ok(Self::from_values(ppt_nu_minus(v)?, duan_witness(v), 0.0, 0.0))
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.nu_minus,
            self.duan_sum,
            self.entangled_ppt,
            self.entangled_duan,
            self.stderr_nu,
            self.stderr_duan
        )
    }
}

/// Λ = diag(1, 1, 1, −1): time reversal of mode b.
fn lambda() -> Mat4 {
    Mat4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0))
}

/// V^Γ = Λ V Λ.
pub fn partial_transpose(v: &CovarianceMatrix) -> CovarianceMatrix {
    let l = lambda();
    CovarianceMatrix::from_symmetrized(l * v.matrix() * l)
}

/// (ν₊, ν₋) from the spectrum of iΩV, whose eigenvalues come in ±ν pairs.
pub fn symplectic_eigenvalues(v: &CovarianceMatrix) -> Result<(f64, f64)> {
    if !v.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let omega_v = symplectic_form() * v.matrix();
    // Eigenvalues of ΩV are ±iν.
    let mut mods: Vec<f64> = omega_v
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    mods.sort_by(f64::total_cmp);
    let nu_minus = 0.5 * (mods[0] + mods[1]);
    let nu_plus = 0.5 * (mods[2] + mods[3]);
    Ok((nu_plus, nu_minus))
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// ν̃₋ from the invariants: Δ̃ = det A + det B − 2 det C and det V.
pub fn ppt_nu_minus(v: &CovarianceMatrix) -> Result<f64> {
    if !v.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let (a, b, c) = v.blocks();
    let delta = det2(&a) + det2(&b) - 2.0 * det2(&c);
    let det_v = v.determinant();
    let mut disc = delta * delta - 4.0 * det_v;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_TOL * delta.abs().max(1.0).powi(2) {
            return Err(Error::ComplexRoot(disc));
        }
        disc = 0.0;
    }
    // ν̃₋² = ½(Δ̃ − √disc) loses precision when Δ̃ ≈ √disc; use det V = ν̃₊²ν̃₋².
    let nu_plus_sq = 0.5 * (delta + disc.sqrt());
    if nu_plus_sq <= 0.0 {
        return Err(Error::ComplexRoot(disc));
    }
    Ok((det_v / nu_plus_sq).sqrt())
}

/// ν̃₋ via the symplectic spectrum of the partial transpose.
pub fn ppt_nu_minus_spectral(v: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_eigenvalues(&partial_transpose(v))?.1)
}

/// a − |c| for states in symmetric block form A = B = a·I₂, C = diag(c, −c).
///
/// Errors with `Domain` when `v` is not of that form (to 1e−12).
pub fn symmetric_block_nu_minus(v: &CovarianceMatrix) -> Result<f64> {
    let a = v.get(0, 0);
    let c = v.get(0, 2);
    let want = Mat4::new(
        a, 0.0, c, 0.0, //
        0.0, a, 0.0, -c, //
        c, 0.0, a, 0.0, //
        0.0, -c, 0.0, a,
    );
    if (v.matrix() - want).amax() > 1e-12 * a.abs().max(1.0) {
        return Err(Error::Domain("covariance is not in symmetric block form".into()));
    }
    Ok(a - c.abs())
}

/// min over orientations of Var(X_a ∓ X_b) + Var(P_a ± P_b).
pub fn duan_witness(v: &CovarianceMatrix) -> f64 {
    let m = v.matrix();
    let local = m[(0, 0)] + m[(2, 2)] + m[(1, 1)] + m[(3, 3)];
    let cross = 2.0 * (m[(0, 2)] - m[(1, 3)]);
    // Var(X_a − X_b) + Var(P_a + P_b) = local − cross, and the mirrored pattern is local + cross.
    (local - cross).min(local + cross)
}

fn check_coupling_domain(g: f64, kappa: f64, n: f64) -> Result<()> {
    if !(g.is_finite() && kappa.is_finite() && n.is_finite()) {
        return Err(Error::Domain("non-finite argument".into()));
    }
    if kappa <= 0.0 || g < 0.0 || n < 0.0 {
        return Err(Error::Domain(format!(
            "need κ > 0, G ≥ 0, n ≥ 0 (got κ={kappa}, G={g}, n={n})"
        )));
    }
    if 2.0 * g >= kappa {
        return Err(Error::Domain(format!("2G = {} is not below κ = {kappa}", 2.0 * g)));
    }
    Ok(())
}

/// ν̃₋ = ½(2n+1)(κ−2G)/(κ+2G) for the symmetric resonant closed-form state.
pub fn analytic_nu_minus(g: f64, kappa: f64, n: f64) -> Result<f64> {
    check_coupling_domain(g, kappa, n)?;
    Ok(0.5 * (2.0 * n + 1.0) * (kappa - 2.0 * g) / (kappa + 2.0 * g))
}

/// Critical reduced coupling 2G/κ = n/(n+1) where the closed form crosses ½.
pub fn analytic_boundary(n: f64) -> Result<f64> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::Domain(format!("occupancy must be ≥ 0, got {n}")));
    }
    Ok(n / (n + 1.0))
}
