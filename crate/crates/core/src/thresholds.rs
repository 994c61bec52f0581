// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Operational calculators: measured noise and coupling to thresholds,
//! occupations and phase-diffusion rates. All quantities are SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380649e-23;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseInputSpec {
    /// Voltage noise density at band centre, V²/Hz.
    #[serde(rename = "S_V0", default, skip_serializing_if = "Option::is_none")]
    pub s_v0: Option<f64>,
    /// Bandwidth, Hz.
    #[serde(rename = "B")]
    pub bandwidth: f64,
    /// Effective capacitance, F.
    #[serde(rename = "C_eff")]
    pub c_eff: f64,
    /// Collective envelope angular frequency, rad/s.
    pub omega_col: f64,
    /// Temperature, K.
    #[serde(rename = "T_amb")]
    pub t_amb: f64,
    /// Effective resistance, Ω.
    #[serde(rename = "R_eff", default, skip_serializing_if = "Option::is_none")]
    pub r_eff: Option<f64>,
    /// Real part of the effective admittance, S.
    #[serde(rename = "Re_Y_eff", default, skip_serializing_if = "Option::is_none")]
    pub re_y_eff: Option<f64>,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}

impl NoiseInputSpec {
    pub fn validate(&self) -> Result<()> {
        positive("B", self.bandwidth)?;
        positive("C_eff", self.c_eff)?;
        positive("omega_col", self.omega_col)?;
        positive("T_amb", self.t_amb)?;
        for (name, v) in [("S_V0", self.s_v0), ("R_eff", self.r_eff), ("Re_Y_eff", self.re_y_eff)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        Ok(())
    }

    /// Band-centre voltage noise density. A measured S_V0 takes precedence;
    /// otherwise Johnson noise of R_eff, or of 1/Re Y_eff.
    pub fn voltage_noise_density(&self) -> Result<f64> {
        self.validate()?;
        if let Some(s) = self.s_v0 {
            return Ok(s);
        }
        let r = match (self.r_eff, self.re_y_eff) {
            (Some(r), _) => r,
            (None, Some(g)) => 1.0 / g,
            (None, None) => return Err(Error::MissingNoiseInput),
        };
        Ok(johnson_density(self.t_amb, r))
    }
}

/// Johnson voltage noise density 4·k_B·T·R.
pub fn johnson_density(temperature: f64, resistance: f64) -> f64 {
    4.0 * K_B * temperature * resistance
}

/// Effective occupation inferred from measured noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub n_eff: f64,
    /// The unclamped 2n_eff + 1.
    pub raw_two_n_plus_one: f64,
    /// True when the measured noise sat below vacuum and n_eff was set to zero.
    pub clamped: bool,
}

/// 2n_eff + 1 = C·S_V0·B/(ħ·ω_col); sub-vacuum values clamp to n_eff = 0.
pub fn n_eff_from_noise(spec: &NoiseInputSpec) -> Result<Occupancy> {
    let s = spec.voltage_noise_density()?;
    let raw = spec.c_eff * s * spec.bandwidth / (HBAR * spec.omega_col);
    let n = (raw - 1.0) / 2.0;
    Ok(Occupancy {
        n_eff: n.max(0.0),
        raw_two_n_plus_one: raw,
        clamped: n < 0.0,
    })
}

/// Correlation cooperativity (2G/κ)·(n+1)/n; equals 1 exactly on the PPT boundary.
pub fn cooperativity(g: f64, kappa: f64, n_eff: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::Domain(format!("G must be non-negative, got {g}")));
    }
    if 2.0 * g >= kappa {
        return Err(Error::Domain(format!("2G = {} is not below κ = {kappa}", 2.0 * g)));
    }
    if !(n_eff.is_finite() && n_eff >= 0.0) {
        return Err(Error::Domain(format!("n_eff must be non-negative, got {n_eff}")));
    }
    if n_eff == 0.0 {
        return Err(Error::ZeroOccupancy);
    }
    Ok(2.0 * g / kappa * (n_eff + 1.0) / n_eff)
}

/// Closed forms for the minimum collective voltage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VMinForm {
    /// √(S_V0·B/𝒞).
    General,
    /// √(4·k_B·T·R_eff·B/𝒞).
    Thermal,
    /// √(2·k_B·T·B/(C·κ)), the strong-coupling estimate.
    Conservative,
}

impl VMinForm {
    pub fn tag(self) -> &'static str {
        match self {
            VMinForm::General => "GENERAL",
            VMinForm::Thermal => "THERMAL",
            VMinForm::Conservative => "CONSERVATIVE",
        }
    }
}

/// Minimum collective voltage in the selected form.
///
/// `general` and `thermal` take the cooperativity as `factor`;
/// `conservative` takes κ in s⁻¹.
pub fn v_min(spec: &NoiseInputSpec, factor: f64, form: VMinForm) -> Result<f64> {
    spec.validate()?;
    positive(if form == VMinForm::Conservative { "kappa" } else { "cooperativity" }, factor)?;
    let v2 = match form {
        VMinForm::General => spec.voltage_noise_density()? * spec.bandwidth / factor,
        VMinForm::Thermal => {
            let r = spec
                .r_eff
                .or(spec.re_y_eff.map(|g| 1.0 / g))
                .ok_or(Error::MissingNoiseInput)?;
            johnson_density(spec.t_amb, r) * spec.bandwidth / factor
        }
        VMinForm::Conservative => 2.0 * K_B * spec.t_amb * spec.bandwidth / (spec.c_eff * factor),
    };
    Ok(v2.sqrt())
}

/// N_col = ½·C·V²/(ħ·ω_col).
pub fn collective_occupation(v_col: f64, c_eff: f64, omega_col: f64) -> f64 {
    0.5 * c_eff * v_col * v_col / (HBAR * omega_col)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiffusion {
    /// Diffusion constant, rad²/s.
    pub d_phi: f64,
    /// Accumulated phase variance 2·D_φ·T_int, rad².
    pub sigma2_phi: f64,
}

/// D_φ = κ(2n+1)/(4N_col) and σ_φ² = 2·D_φ·T_int.
pub fn phase_diffusion(kappa: f64, n_eff: f64, n_col: f64, t_int: f64) -> Result<PhaseDiffusion> {
    positive("kappa", kappa)?;
    positive("N_col", n_col)?;
    if !(n_eff.is_finite() && n_eff >= 0.0) {
        return Err(Error::Domain(format!("n_eff must be non-negative, got {n_eff}")));
    }
    if !(t_int.is_finite() && t_int >= 0.0) {
        return Err(Error::Domain(format!("T_int must be non-negative, got {t_int}")));
    }
    let d_phi = kappa * (2.0 * n_eff + 1.0) / (4.0 * n_col);
    Ok(PhaseDiffusion {
        d_phi,
        sigma2_phi: 2.0 * d_phi * t_int,
    })
}

/// Energy decay rate from a measured 1/e ringdown time.
pub fn kappa_from_ringdown(tau: f64) -> Result<f64> {
    positive("ringdown time", tau)?;
    Ok(1.0 / tau)
}

/// Tabulated coupling G(d); interpolated linearly, never extrapolated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingCurve {
    points: Vec<(f64, f64)>,
}

impl CouplingCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParams("coupling curve needs at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParams(format!(
                    "distances must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(d, g)) = points.iter().find(|(d, g)| !(d.is_finite() && g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidParams(format!("bad curve point ({d}, {g})")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn coupling_at(&self, d: f64) -> Result<f64> {
        let (min, max) = self.range();
        if !(d >= min && d <= max) {
            return Err(Error::OutOfRange { d, min, max });
        }
        let i = self.points.partition_point(|&(x, _)| x <= d);
        if i == self.points.len() {
            return Ok(self.points[i - 1].1);
        }
        let (d0, g0) = self.points[i - 1];
        let (d1, g1) = self.points[i];
        let t = (d - d0) / (d1 - d0);
        Ok(g0 + t * (g1 - g0))
    }
}

impl<'de> Deserialize<'de> for CouplingCurve {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            points: Vec<(f64, f64)>,
        }
        let raw = Raw::deserialize(de)?;
        CouplingCurve::new(raw.points).map_err(serde::de::Error::custom)
    }
}

/// Result of the entangled-distance search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntangledDistance {
    /// Largest distance with 𝒞(d) > 1, or None if 𝒞 ≤ 1 everywhere.
    pub distance: Option<f64>,
    /// True when 𝒞 > 1 still holds at the last tabulated distance, so the
    /// true reach may be larger than the data can show.
    pub limited_by_data: bool,
}

const BISECTION_ITERS: usize = 200;

/// Largest tabulated distance at which the cooperativity exceeds one.
///
/// The crossing is bracketed on the knots (𝒞 is piecewise monotone between
/// them) and refined by bisection. At n_eff = 0 the cooperativity is
/// undefined and the equivalent condition ν̃₋ < ½ (any G > 0) is used.
pub fn entangled_distance(curve: &CouplingCurve, kappa: f64, n_eff: f64) -> Result<EntangledDistance> {
    let coop = |d: f64| -> Result<f64> {
        let g = curve.coupling_at(d)?;
        if n_eff == 0.0 {
            let nu = crate::entanglement::analytic_nu_minus(g, kappa, 0.0)?;
            return Ok(if nu < 0.5 { 2.0 } else { 0.0 });
        }
        cooperativity(g, kappa, n_eff)
    };
    let pts = curve.points();
    let last = pts.len() - 1;
    if coop(pts[last].0)? > 1.0 {
        return Ok(EntangledDistance {
            distance: Some(pts[last].0),
            limited_by_data: true,
        });
    }
    for i in (0..last).rev() {
        if coop(pts[i].0)? > 1.0 {
            let (mut lo, mut hi) = (pts[i].0, pts[i + 1].0);
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if coop(mid)? > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(EntangledDistance {
                distance: Some(lo),
                limited_by_data: false,
            });
        }
    }
    Ok(EntangledDistance {
        distance: None,
        limited_by_data: false,
    })
}
