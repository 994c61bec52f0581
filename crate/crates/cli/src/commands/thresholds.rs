// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use cvent_core::thresholds::{
    collective_occupation, cooperativity, entangled_distance, kappa_from_ringdown, n_eff_from_noise,
    phase_diffusion, v_min, CouplingCurve, NoiseInputSpec, VMinForm,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Globals;
use crate::error::{CliError, CliResult, Context};
use crate::output::{RunManifest, RunOutput};

/// All inputs in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub noise: NoiseInputSpec,
    /// Energy ringdown time τ (s); κ = 1/τ. Exclusive with `kappa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ringdown_time: Option<f64>,
    /// Damping rate κ (s⁻¹).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Coherent coupling rate G (s⁻¹) for the cooperativity.
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Collective voltage amplitude (V).
    #[serde(rename = "V_col")]
    pub v_col: f64,
    /// Integration time for the accumulated phase variance (s).
    #[serde(rename = "T_int")]
    pub t_int: f64,
    /// Measured G(d) in s⁻¹ against distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_curve: Option<CouplingCurve>,
}

fn failure(e: cvent_core::Error) -> Value {
    json!({ "value": null, "error": e.to_string() })
}

pub fn evaluate(config: &ThresholdsConfig) -> CliResult<Value> {
    config.noise.validate().context("noise input")?;
    let (kappa, kappa_formula) = match (config.ringdown_time, config.kappa) {
        (Some(tau), None) => (kappa_from_ringdown(tau).context("ringdown_time")?, "1/tau"),
        (None, Some(k)) if k.is_finite() && k > 0.0 => (k, "given"),
        (None, Some(k)) => return Err(CliError::Usage(format!("kappa must be positive, got {k}"))),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of ringdown_time and kappa".into(),
            ))
        }
    };
    if !(config.v_col.is_finite() && config.v_col > 0.0) {
        return Err(CliError::Usage(format!("V_col must be positive, got {}", config.v_col)));
    }
    if !(config.t_int.is_finite() && config.t_int >= 0.0) {
        return Err(CliError::Usage(format!("T_int must be non-negative, got {}", config.t_int)));
    }

    let occ = n_eff_from_noise(&config.noise).context("noise input")?;
    let n_eff = occ.n_eff;
    let coop = config.g.map(|g| cooperativity(g, kappa, n_eff));

    let mut v_mins = Vec::new();
    match &coop {
        Some(Ok(c)) => {
            for form in [VMinForm::General, VMinForm::Thermal] {
                v_mins.push(match v_min(&config.noise, *c, form) {
                    Ok(v) => json!({ "form": form.tag(), "value": v, "cooperativity": c }),
                    Err(e) => json!({ "form": form.tag(), "value": null, "error": e.to_string() }),
                });
            }
        }
        Some(Err(e)) => {
            for form in [VMinForm::General, VMinForm::Thermal] {
                v_mins.push(json!({ "form": form.tag(), "value": null, "error": e.to_string() }));
            }
        }
        None => {
            for form in [VMinForm::General, VMinForm::Thermal] {
                v_mins.push(json!({ "form": form.tag(), "value": null, "error": "no coupling G given" }));
            }
        }
    }
    let conservative = v_min(&config.noise, kappa, VMinForm::Conservative).context("V_min")?;
    v_mins.push(json!({
        "form": VMinForm::Conservative.tag(),
        "value": conservative,
        "kappa": kappa,
        "note": "order-of-magnitude strong-coupling estimate (about 3e-4 V when rounded up); \
                 it assumes G comparable to kappa, outside the stable region 2G < kappa",
    }));

    let n_col = collective_occupation(config.v_col, config.noise.c_eff, config.noise.omega_col);
    let phase = phase_diffusion(kappa, n_eff, n_col, config.t_int).context("phase diffusion")?;

    let distance = match &config.coupling_curve {
        None => Value::Null,
        Some(curve) => match entangled_distance(curve, kappa, n_eff) {
            Ok(d) => serde_json::to_value(d).expect("plain struct"),
            Err(e) => failure(e),
        },
    };

    Ok(json!({
        "kappa": { "value": kappa, "formula": kappa_formula },
        "n_eff": {
            "value": n_eff,
            "formula": "max(0, (C_eff*S_V0*B/(hbar*omega_col) - 1)/2)",
            "raw_two_n_plus_one": occ.raw_two_n_plus_one,
            "clamped": occ.clamped,
            "S_V0": config.noise.voltage_noise_density().context("noise input")?,
        },
        "cooperativity": match coop {
            None => json!({ "value": null, "error": "no coupling G given" }),
            Some(Ok(c)) => json!({ "value": c, "formula": "(2G/kappa)*(n_eff+1)/n_eff", "entangled": c > 1.0 }),
            Some(Err(e)) => failure(e),
        },
        "v_min": v_mins,
        "n_col": { "value": n_col, "formula": "C_eff*V_col^2/(2*hbar*omega_col)" },
        "phase_diffusion": {
            "d_phi": phase.d_phi,
            "sigma2_phi": phase.sigma2_phi,
            "formula": "D_phi = kappa*(2n_eff+1)/(4 N_col); sigma2 = 2 D_phi T_int",
        },
        "entangled_distance": distance,
    }))
}

pub fn run(config: ThresholdsConfig, globals: &Globals) -> CliResult<RunManifest> {
    let report = evaluate(&config)?;
    let mut out = RunOutput::new(&globals.out_dir, "thresholds", &config, None)?;
    out.write_json("thresholds.json", report)?;
    out.finish()
}
