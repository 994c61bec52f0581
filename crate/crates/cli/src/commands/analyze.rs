// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cvent_core::entanglement::WitnessReport;
use cvent_core::pipeline::{analyze_record, witness_with_uncertainty, EstimatedCovariance, PipelineConfig};
use cvent_core::trajectory::{Source, TrajectoryRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Globals;
use crate::error::{CliError, CliResult, Context};
use crate::output::{num, RunManifest, RunOutput};

/// Pipeline settings plus the record files to analyse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub pipeline: PipelineConfig,
    /// Record files or directories (every `*.csv` inside, sorted by name).
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

fn expand_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|x| x == "csv")
                        && f.file_name().is_some_and(|n| {
                            let n = n.to_string_lossy();
                            n.starts_with("quantum_") || n.starts_with("null_")
                        })
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage("no record files to analyse".into()));
    }
    Ok(files)
}

fn load(path: &Path) -> CliResult<(TrajectoryRecord, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let rec = TrajectoryRecord::read_csv(bytes.as_slice()).context(path.display().to_string())?;
    Ok((rec, bytes))
}

fn report_json(r: &WitnessReport) -> serde_json::Value {
    serde_json::to_value(r).expect("plain struct")
}

pub fn run(mut config: AnalyzeConfig, globals: &Globals) -> CliResult<RunManifest> {
    if let Some(seed) = globals.seed {
        config.pipeline.bootstrap_seed = seed;
    }
    config.pipeline.validate().context("pipeline config")?;
    let files = expand_inputs(&config.inputs)?;
    config.inputs = files.clone();
    let seed = Some(config.pipeline.bootstrap_seed);
    let mut out = RunOutput::new(&globals.out_dir, "analyze", &config, seed)?;

    let loaded: Vec<(TrajectoryRecord, Vec<u8>)> =
        files.par_iter().map(|f| load(f)).collect::<CliResult<_>>()?;
    for (f, (_, bytes)) in files.iter().zip(&loaded) {
        out.add_input(f, bytes);
    }

    // Every record, whatever its source, goes through the same entry point.
    let estimates: Vec<EstimatedCovariance> = loaded
        .par_iter()
        .zip(files.par_iter())
        .map(|((rec, _), f)| analyze_record(rec, &config.pipeline).context(f.display().to_string()))
        .collect::<CliResult<_>>()?;

    let mut runs_csv = String::from(
        "file,source,seed,nu_minus,duan_sum,n_segments,attenuation,attenuation_applied\n",
    );
    let mut groups: BTreeMap<Source, Vec<EstimatedCovariance>> = BTreeMap::new();
    let mut per_run = Vec::with_capacity(estimates.len());
    for ((f, (rec, _)), est) in files.iter().zip(&loaded).zip(&estimates) {
        let exact = WitnessReport::exact(&est.v_hat).context(f.display().to_string())?;
        runs_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            est.source.tag(),
            rec.seed,
            num(exact.nu_minus),
            num(exact.duan_sum),
            est.n_segments,
            num(est.attenuation),
            est.attenuation_applied
        ));
        per_run.push((est.source, exact));
        groups.entry(est.source).or_default().push(est.clone());
    }
    out.write_csv("analysis_runs.csv", runs_csv.as_bytes())?;

    let mut table = format!("source,runs,{}\n", WitnessReport::CSV_HEADER);
    let mut sources = serde_json::Map::new();
    for (source, ests) in &groups {
        match witness_with_uncertainty(ests) {
            Ok(report) => {
                table.push_str(&format!("{},{},{}\n", source.tag(), ests.len(), report.csv_row()));
                sources.insert(
                    source.tag().into(),
                    json!({ "runs": ests.len(), "report": report_json(&report) }),
                );
            }
            Err(cvent_core::Error::InsufficientEnsemble(_)) => {
                let single = per_run.iter().find(|(s, _)| s == source).map(|(_, r)| report_json(r));
                sources.insert(
                    source.tag().into(),
                    json!({ "runs": ests.len(), "report": null, "single_run": single,
                            "note": "one record: no ensemble uncertainty, no verdict" }),
                );
            }
            Err(e) => return Err(e).context(format!("{} ensemble", source.tag())),
        }
    }
    out.write_csv("analysis_comparison.csv", table.as_bytes())?;
    out.write_json(
        "analysis_report.json",
        json!({
            "pipeline": config.pipeline,
            "n_eff": config.pipeline.n_eff(),
            "records": files.len(),
            "sources": sources,
        }),
    )?;
    eprintln!("analyze: {} records in {} groups", files.len(), groups.len());
    out.finish()
}
