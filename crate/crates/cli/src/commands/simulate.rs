// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use cvent_core::gaussian::stationary_dynamics;
use cvent_core::null_models::{
    channel_variances, generate, gen_mixture_record, matched_power, matched_specs, optimize_mixture,
    MixtureObjective, NullKind, NullModelSpec,
};
use cvent_core::trajectory::{derive_stream_seed, sample_ensemble, Scheme, TrajectoryConfig, TrajectoryRecord};
use cvent_core::ModelParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Globals;
use crate::error::{CliError, CliResult, Context};
use crate::output::{config_digest, RunManifest, RunOutput};

fn default_runs() -> usize {
    1
}

fn default_scheme() -> Scheme {
    Scheme::ExactOu
}

fn default_objective() -> MixtureObjective {
    MixtureObjective::DuanSum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSection {
    /// Shared-source fraction used by all three generators.
    pub correlation: f64,
    #[serde(default = "default_objective")]
    pub objective: MixtureObjective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: ModelParams,
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub master_seed: u64,
    /// Also emit power-matched classical records for each run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_models: Option<NullSection>,
}

fn record_csv(rec: &TrajectoryRecord) -> Vec<u8> {
    let mut buf = Vec::with_capacity(rec.len() * 80);
    rec.write_csv(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn file_stem(kind: NullKind) -> &'static str {
    match kind {
        NullKind::SharedNoise => "null_shared_noise",
        NullKind::ClassicalParamp => "null_classical_paramp",
        NullKind::OptimizedMixture => "null_optimized_mixture",
    }
}

pub fn run(mut config: SimulateConfig, globals: &Globals) -> CliResult<RunManifest> {
    if let Some(seed) = globals.seed {
        config.master_seed = seed;
    }
    if config.runs == 0 {
        return Err(CliError::Usage("runs must be at least 1".into()));
    }
    let dynamics = stationary_dynamics(&config.params).context("model parameters")?;
    let traj = TrajectoryConfig {
        burn_in: config.burn_in,
        ..TrajectoryConfig::new(config.dt, config.n_steps, config.scheme, config.master_seed)
    };
    let (_, params_hash) = config_digest(&config.params)?;
    let params_hash = params_hash[..16].to_string();

    let mut out = RunOutput::new(&globals.out_dir, "simulate", &config, Some(config.master_seed))?;
    let mut quantum = sample_ensemble(&dynamics.drift, &dynamics.diffusion, &traj, config.runs, true)
        .context("quantum trajectories")?;
    let mut summary_runs = Vec::new();
    for (i, rec) in quantum.iter_mut().enumerate() {
        rec.params_hash = Some(params_hash.clone());
        let name = format!("quantum_{i:04}.csv");
        out.write_csv(&name, &record_csv(rec))?;
        summary_runs.push(json!({ "file": name, "source": rec.source.tag(), "seed": rec.seed,
            "channel_variances": channel_variances(rec) }));
    }

    let mut mixture_fit = serde_json::Value::Null;
    let mut null_specs = Vec::new();
    if let Some(nulls) = &config.null_models {
        let specs = matched_specs(
            &config.params,
            nulls.correlation,
            derive_stream_seed(config.master_seed, u64::MAX),
            config.dt,
            config.n_steps,
        )
        .context("null-model specs")?;
        for spec in specs {
            let theta = if spec.kind == NullKind::OptimizedMixture {
                let fit = optimize_mixture(&spec, nulls.objective).context("mixture search")?;
                mixture_fit = serde_json::to_value(&fit).expect("plain struct");
                Some(fit.theta)
            } else {
                None
            };
            let records: Vec<TrajectoryRecord> = (0..config.runs)
                .into_par_iter()
                .map(|i| {
                    let member = NullModelSpec {
                        seed: derive_stream_seed(spec.seed, i as u64),
                        ..spec.clone()
                    };
                    let mut rec = match &theta {
                        Some(th) => gen_mixture_record(&member, th)?,
                        None => generate(&member)?,
                    };
                    rec.params_hash = Some(params_hash.clone());
                    Ok(rec)
                })
                .collect::<cvent_core::Result<_>>()
                .context("null-model records")?;
            for (i, rec) in records.iter().enumerate() {
                let name = format!("{}_{i:04}.csv", file_stem(spec.kind));
                out.write_csv(&name, &record_csv(rec))?;
                summary_runs.push(json!({ "file": name, "source": rec.source.tag(), "seed": rec.seed,
                    "channel_variances": channel_variances(rec) }));
            }
            null_specs.push(spec);
        }
    }

    out.write_json(
        "simulate_summary.json",
        json!({
            "params_hash": params_hash,
            "steady_state": dynamics.steady,
            "matched_power": matched_power(&dynamics.steady),
            "null_specs": null_specs,
            "mixture_fit": mixture_fit,
            "records": summary_runs,
        }),
    )?;
    eprintln!("simulate: {} runs written to {}", config.runs, globals.out_dir.display());
    out.finish()
}
