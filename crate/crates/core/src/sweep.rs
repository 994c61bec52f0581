// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Phase-diagram sweeps over reduced coupling G/κ and occupancy n_eff.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{analytic_nu_minus, WitnessReport, PPT_BOUND};
use crate::error::{Error, Result};
use crate::gaussian::steady_state;
use crate::params::{ModelParams, Preset};

/// Inclusive, evenly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParams(format!("axis {name} has no points")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::InvalidParams(format!(
                "axis {name} must satisfy start <= stop, got [{}, {}]",
                self.start, self.stop
            )));
        }
        if self.steps == 1 && self.start != self.stop {
            return Err(Error::InvalidParams(format!("axis {name} has one point but a non-empty range")));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }

    /// Grid spacing (zero for a single point).
    pub fn spacing(&self) -> f64 {
        if self.steps < 2 {
            0.0
        } else {
            (self.stop - self.start) / (self.steps - 1) as f64
        }
    }
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub g_over_kappa: Axis,
    pub n_eff: Axis,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub preset: Preset,
}

impl PhaseDiagramConfig {
    pub fn validate(&self) -> Result<()> {
        self.g_over_kappa.validate("g_over_kappa")?;
        self.n_eff.validate("n_eff")?;
        if self.g_over_kappa.start < 0.0 || self.n_eff.start < 0.0 {
            return Err(Error::InvalidParams("G/κ and n_eff axes must be non-negative".into()));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidParams(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryFlag {
    Stable,
    Unstable,
}

impl BoundaryFlag {
    pub fn tag(self) -> &'static str {
        match self {
            BoundaryFlag::Stable => "STABLE",
            BoundaryFlag::Unstable => "UNSTABLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub g_over_kappa: f64,
    pub n_eff: f64,
    /// Exact witnesses of the steady state; None for unstable cells.
    pub report: Option<WitnessReport>,
    pub analytic_nu_minus: Option<f64>,
    pub flag: BoundaryFlag,
}

impl PhaseCell {
    pub const CSV_HEADER: &'static str =
        "g_over_kappa,n_eff,nu_minus,duan_sum,entangled_ppt,analytic_nu_minus,boundary_flag";

    /// CSV row with shortest round-trip float formatting; unstable cells leave
    /// the witness fields empty.
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        format!(
            "{:?},{:?},{},{},{},{},{}",
            self.g_over_kappa,
            self.n_eff,
            opt(self.report.as_ref().map(|r| r.nu_minus)),
            opt(self.report.as_ref().map(|r| r.duan_sum)),
            self.report.as_ref().map(|r| r.entangled_ppt.to_string()).unwrap_or_default(),
            opt(self.analytic_nu_minus),
            self.flag.tag()
        )
    }
}

fn cell(cfg: &PhaseDiagramConfig, g_over_kappa: f64, n: f64) -> Result<PhaseCell> {
    let g = g_over_kappa * cfg.kappa;
    if 2.0 * g >= cfg.kappa {
        return Ok(PhaseCell {
            g_over_kappa,
            n_eff: n,
            report: None,
            analytic_nu_minus: None,
            flag: BoundaryFlag::Unstable,
        });
    }
    let v = steady_state(&ModelParams::symmetric(g, cfg.kappa, n, cfg.preset))?;
    Ok(PhaseCell {
        g_over_kappa,
        n_eff: n,
        report: Some(WitnessReport::exact(&v)?),
        analytic_nu_minus: Some(analytic_nu_minus(g, cfg.kappa, n)?),
        flag: BoundaryFlag::Stable,
    })
}

/// Evaluates every grid cell. Rows are ordered by n_eff, then G/κ, whatever
/// the execution order.
pub fn phase_diagram(cfg: &PhaseDiagramConfig, parallel: bool) -> Result<Vec<PhaseCell>> {
    cfg.validate()?;
    let ng = cfg.g_over_kappa.steps;
    let total = ng * cfg.n_eff.steps;
    let one = |k: usize| cell(cfg, cfg.g_over_kappa.value(k % ng), cfg.n_eff.value(k / ng));
    if parallel {
        (0..total).into_par_iter().map(one).collect()
    } else {
        (0..total).map(one).collect()
    }
}

/// Largest distance, in G/κ grid cells, between the empirical ν̃₋ = ½
/// crossing (linear interpolation along each n_eff row) and the analytic
/// boundary G/κ = n/(2(n+1)). Rows without a crossing inside the grid are skipped;
/// returns the deviation and the number of rows compared.
pub fn contour_deviation(cfg: &PhaseDiagramConfig, cells: &[PhaseCell]) -> (f64, usize) {
    let ng = cfg.g_over_kappa.steps;
    let dg = cfg.g_over_kappa.spacing();
    let mut worst = 0.0f64;
    let mut rows = 0;
    for row in cells.chunks(ng) {
        let n = row[0].n_eff;
        let exact = 0.5 * n / (n + 1.0);
        for w in row.windows(2) {
            let (Some(a), Some(b)) = (&w[0].report, &w[1].report) else { continue };
            let (fa, fb) = (a.nu_minus - PPT_BOUND, b.nu_minus - PPT_BOUND);
            if fa >= 0.0 && fb < 0.0 {
                let x = w[0].g_over_kappa + (w[1].g_over_kappa - w[0].g_over_kappa) * fa / (fa - fb);
                let dev = if dg > 0.0 { (x - exact).abs() / dg } else { 0.0 };
                worst = worst.max(dev);
                rows += 1;
                break;
            }
        }
    }
    (worst, rows)
}
