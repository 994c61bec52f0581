// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use cvent_core::pipeline::{convergence_sweep, locate_threshold, SweepSettings, ThresholdCrossing};
use cvent_core::trajectory::derive_stream_seed;
use cvent_core::ModelParams;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Globals;
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, RunManifest, RunOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    /// Ascending 2G/κ values to scan.
    pub reduced_couplings: Vec<f64>,
    /// (T, B) pairs at which to locate the crossing.
    pub cells: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub params: ModelParams,
    /// (T, B) pairs; N_eff = T·B.
    pub cells: Vec<(f64, f64)>,
    pub settings: SweepSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdSection>,
}

/// Largest |Δ|/σ between any two crossings.
pub fn max_pairwise_z(crossings: &[ThresholdCrossing]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in crossings.iter().enumerate() {
        for b in &crossings[i + 1..] {
            let s = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            worst = worst.max((a.crossing - b.crossing).abs() / s);
        }
    }
    worst
}

pub fn run(mut config: ConvergeConfig, globals: &Globals) -> CliResult<RunManifest> {
    if let Some(seed) = globals.seed {
        config.settings.master_seed = seed;
    }
    if config.cells.len() < 2 {
        return Err(CliError::Usage("converge needs at least two (T, B) cells".into()));
    }
    let seed = Some(config.settings.master_seed);
    let mut out = RunOutput::new(&globals.out_dir, "converge", &config, seed)?;
    let table = convergence_sweep(&config.params, &config.cells, &config.settings)
        .context("convergence sweep")?;

    let mut csv = format!(
        "# duan_stderr_exponent={}\n# nu_stderr_exponent={}\n\
         integration_time,bandwidth,n_eff,duan_mean,duan_stderr,nu_mean,nu_stderr\n",
        num(table.duan_stderr_exponent),
        num(table.nu_stderr_exponent)
    );
    for r in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            num(r.integration_time),
            num(r.bandwidth),
            num(r.n_eff),
            num(r.duan_mean),
            num(r.duan_stderr),
            num(r.nu_mean),
            num(r.nu_stderr)
        ));
    }
    out.write_csv("convergence.csv", csv.as_bytes())?;

    let largest = table
        .rows
        .iter()
        .max_by(|a, b| a.n_eff.total_cmp(&b.n_eff))
        .expect("at least two rows");
    let consistent = (largest.duan_mean - table.state_duan).abs() <= 2.0 * largest.duan_stderr;

    let mut threshold = serde_json::Value::Null;
    if let Some(th) = &config.threshold {
        let mut crossings = Vec::with_capacity(th.cells.len());
        let mut th_csv = String::from("integration_time,bandwidth,n_eff,crossing,stderr\n");
        for (i, &(t, b)) in th.cells.iter().enumerate() {
            let settings = SweepSettings {
                master_seed: derive_stream_seed(config.settings.master_seed ^ 0x7407, i as u64),
                ..config.settings.clone()
            };
            let c = locate_threshold(&config.params, &th.reduced_couplings, t, b, &settings)
                .context(format!("threshold at T={t}, B={b}"))?;
            th_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                num(t),
                num(b),
                num(t * b),
                num(c.crossing),
                num(c.stderr)
            ));
            crossings.push(c);
        }
        out.write_csv("threshold_scan.csv", th_csv.as_bytes())?;
        let z = max_pairwise_z(&crossings);
        threshold = json!({
            "crossings": crossings,
            "max_pairwise_z": z,
            "invariant_within_3_sigma": z <= 3.0,
        });
    }

    out.write_json(
        "convergence.json",
        json!({
            "duan_stderr_exponent": table.duan_stderr_exponent,
            "nu_stderr_exponent": table.nu_stderr_exponent,
            "state_duan": table.state_duan,
            "state_nu": table.state_nu,
            "largest_n_eff_within_2_stderr": consistent,
            "rows": table.rows,
            "threshold": threshold,
        }),
    )?;
    eprintln!(
        "converge: Duan stderr exponent {:.3}, ν̃₋ stderr exponent {:.3}",
        table.duan_stderr_exponent, table.nu_stderr_exponent
    );
    out.finish()
}
