// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

use cvent_core::sweep::{contour_deviation, phase_diagram, BoundaryFlag, PhaseCell, PhaseDiagramConfig};
use serde_json::json;

use super::Globals;
use crate::error::{CliResult, Context};
use crate::output::{RunManifest, RunOutput};

pub fn run(config: PhaseDiagramConfig, globals: &Globals) -> CliResult<RunManifest> {
    config.validate().context("phase-diagram config")?;
    let mut out = RunOutput::new(&globals.out_dir, "phase-diagram", &config, None)?;
    let cells = phase_diagram(&config, true).context("phase diagram")?;

    let mut csv = String::with_capacity(cells.len() * 96);
    csv.push_str(PhaseCell::CSV_HEADER);
    csv.push('\n');
    for c in &cells {
        csv.push_str(&c.csv_row());
        csv.push('\n');
    }
    out.write_csv("phase_diagram.csv", csv.as_bytes())?;

    let (deviation, rows) = contour_deviation(&config, &cells);
    let unstable = cells.iter().filter(|c| c.flag == BoundaryFlag::Unstable).count();
    let entangled = cells
        .iter()
        .filter(|c| c.report.as_ref().is_some_and(|r| r.entangled_ppt))
        .count();
    out.write_json(
        "phase_diagram_summary.json",
        json!({
            "cells": cells.len(),
            "unstable_cells": unstable,
            "entangled_cells": entangled,
            "contour_rows": rows,
            "contour_max_deviation_cells": deviation,
            "contour_within_one_cell": deviation <= 1.0,
        }),
    )?;
    eprintln!(
        "phase-diagram: {} cells ({unstable} unstable); contour deviation {deviation:.3} cells over {rows} rows",
        cells.len()
    );
    out.finish()
}
