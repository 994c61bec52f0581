// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

pub mod analyze;
pub mod converge;
pub mod phase_diagram;
pub mod simulate;
pub mod thresholds;

use std::path::PathBuf;

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub out_dir: PathBuf,
    /// Overrides the config's master seed when set.
    pub seed: Option<u64>,
}
