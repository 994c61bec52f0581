// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Reduced open-system parameters of the two collective modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which steady state a parameter set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Preset {
    /// Two-mode-squeezing interaction with local damping; steady state from the Lyapunov equation.
    TmsHamiltonian,
    /// Two-mode squeezed thermal state with ν̃₋ = ½(2n+1)(κ−2G)/(κ+2G), built directly.
    ClosedForm,
}

/// (G, κ_a, κ_b, n_a, n_b, Δ_a, Δ_b) plus the preset tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "G")]
    pub g: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub preset: Preset,
}

impl ModelParams {
    /// Resonant, symmetric parameters: κ_a = κ_b = κ, n_a = n_b = n, Δ = 0.
    pub fn symmetric(g: f64, kappa: f64, n: f64, preset: Preset) -> Self {
        Self {
            g,
            kappa_a: kappa,
            kappa_b: kappa,
            n_a: n,
            n_b: n,
            delta_a: 0.0,
            delta_b: 0.0,
            preset,
        }
    }

    pub fn is_symmetric_resonant(&self) -> bool {
        self.kappa_a == self.kappa_b
            && self.n_a == self.n_b
            && self.delta_a == 0.0
            && self.delta_b == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("G", self.g),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("n_a", self.n_a),
            ("n_b", self.n_b),
            ("delta_a", self.delta_a),
            ("delta_b", self.delta_b),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite ({v})")));
        }
        if self.kappa_a <= 0.0 || self.kappa_b <= 0.0 {
            return Err(Error::InvalidParams("damping rates must be positive".into()));
        }
        if self.n_a < 0.0 || self.n_b < 0.0 {
            return Err(Error::InvalidParams("occupancies must be non-negative".into()));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams("coupling G must be non-negative".into()));
        }
        if self.preset == Preset::ClosedForm && !self.is_symmetric_resonant() {
            return Err(Error::InvalidParams(
                "CLOSED_FORM preset requires kappa_a = kappa_b, n_a = n_b and zero detunings"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Same physics with the mode labels a and b exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            kappa_a: self.kappa_b,
            kappa_b: self.kappa_a,
            n_a: self.n_b,
            n_b: self.n_a,
            delta_a: self.delta_b,
            delta_b: self.delta_a,
            ..self.clone()
        }
    }
}
