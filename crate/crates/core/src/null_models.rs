// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical correlated-noise generators used to try to fake entanglement.
//!
//! Every null record is a classical c-number signal plus an independent
//! vacuum floor, so its covariance is V_cl + ½·I₄ with V_cl ⪰ 0: a state with
//! a positive P-representation. All filters are single-pole (Lorentzian)
//! with decay rate `target_bandwidth`; the vacuum floor uses the same rate so
//! that the pipeline treats it exactly as it treats quantum vacuum noise.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{duan_witness, ppt_nu_minus};
use crate::error::{Error, Result};
use crate::gaussian::{build_drift, solve_steady_lyapunov};
use crate::matrix::{CovarianceMatrix, DiffusionMatrix, Mat4};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::params::{ModelParams, Preset};
use crate::trajectory::{derive_stream_seed, rng_for, OuPropagator, Scheme, Source, TrajectoryRecord};

/// Restarts of the mixture search.
pub const MIXTURE_RESTARTS: usize = 20;
/// Objective evaluations per restart.
pub const MIXTURE_EVALS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NullKind {
    SharedNoise,
    ClassicalParamp,
    OptimizedMixture,
}

impl NullKind {
    pub fn source(self) -> Source {
        match self {
            NullKind::SharedNoise => Source::NullA,
            NullKind::ClassicalParamp => Source::NullB,
            NullKind::OptimizedMixture => Source::NullC,
        }
    }
}

fn default_bandwidth() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullModelSpec {
    pub kind: NullKind,
    /// Decay rate of the single-pole filters, in units of κ.
    #[serde(default = "default_bandwidth")]
    pub target_bandwidth: f64,
    /// Per-quadrature variance to match, vacuum included.
    pub target_power: f64,
    /// Shared-source fraction.
    #[serde(default)]
    pub correlation: f64,
    /// Parametric gain of the classical amplifier (drift units).
    #[serde(default)]
    pub gain: f64,
    pub seed: u64,
    pub dt: f64,
    pub n_steps: usize,
}

impl NullModelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.target_bandwidth.is_finite() && self.target_bandwidth > 0.0) {
            return bad(format!("target_bandwidth must be positive, got {}", self.target_bandwidth));
        }
        if !(self.target_power.is_finite() && self.target_power > 0.0) {
            return bad(format!("target_power must be positive, got {}", self.target_power));
        }
        if self.target_power < 0.5 {
            return bad(format!(
                "target_power {} is below the vacuum variance 1/2; no classical state matches it",
                self.target_power
            ));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return bad(format!("correlation must lie in [0, 1], got {}", self.correlation));
        }
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return bad(format!("gain must be non-negative, got {}", self.gain));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || self.n_steps == 0 {
            return bad("dt and n_steps must be positive".into());
        }
        Ok(())
    }

    /// Classical excess variance per quadrature.
    pub fn excess_power(&self) -> f64 {
        self.target_power - 0.5
    }

    /// κ of the classical amplifier, matched to the filter rate (rate = κ/2).
    fn kappa(&self) -> f64 {
        2.0 * self.target_bandwidth
    }
}

/// V = V_cl + ½·I₄, the vacuum-convolved classical state.
pub fn enforce_classicality(v_cl: &Mat4) -> Result<CovarianceMatrix> {
    let d = DiffusionMatrix::new(*v_cl)?;
    let min = d.min_eigenvalue();
    if min < -1e-12 * v_cl.amax().max(1.0) {
        return Err(Error::NotPsd(min));
    }
    Ok(CovarianceMatrix::from_symmetrized(v_cl + Mat4::identity() * 0.5))
}

/// Independent unit-variance OU series with a common decay rate.
struct OuBank {
    phi: f64,
    drive: f64,
    state: Vec<f64>,
}

impl OuBank {
    fn new(count: usize, rate: f64, dt: f64, rng: &mut ChaCha20Rng) -> Self {
        let phi = (-rate * dt).exp();
        Self {
            phi,
            drive: (1.0 - phi * phi).sqrt(),
            state: (0..count).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }

    fn step(&mut self, rng: &mut ChaCha20Rng) {
        for s in self.state.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *s = self.phi * *s + self.drive * z;
        }
    }
}

/// Generates n_steps samples of a linear map applied to a bank of sources,
/// plus the vacuum floor.
fn mixed_record<F>(spec: &NullModelSpec, sources: usize, map: F) -> Vec<[f64; 4]>
where
    F: Fn(&[f64]) -> [f64; 4],
{
    let mut rng = rng_for(derive_stream_seed(spec.seed, 1), 11);
    let mut vac_rng = rng_for(derive_stream_seed(spec.seed, 2), 12);
    let mut bank = OuBank::new(sources, spec.target_bandwidth, spec.dt, &mut rng);
    let mut vac = OuBank::new(4, spec.target_bandwidth, spec.dt, &mut vac_rng);
    let floor = 0.5f64.sqrt();
    let mut out = Vec::with_capacity(spec.n_steps);
    for _ in 0..spec.n_steps {
        let c = map(&bank.state);
        out.push([
            c[0] + floor * vac.state[0],
            c[1] + floor * vac.state[1],
            c[2] + floor * vac.state[2],
            c[3] + floor * vac.state[3],
        ]);
        bank.step(&mut rng);
        vac.step(&mut vac_rng);
    }
    out
}

fn make_record(spec: &NullModelSpec, samples: Vec<[f64; 4]>) -> TrajectoryRecord {
    TrajectoryRecord {
        samples,
        dt: spec.dt,
        source: spec.kind.source(),
        scheme: Scheme::ExactOu,
        seed: spec.seed,
        params_hash: None,
        bandlimit: None,
    }
}

/// Source layout: [s_X, s_P, u_1, u_2, u_3, u_4].
fn shared_noise_map(spec: &NullModelSpec) -> impl Fn(&[f64]) -> [f64; 4] {
    let amp = spec.excess_power().sqrt();
    let sh = spec.correlation.sqrt();
    let ind = (1.0 - spec.correlation).sqrt();
    move |s: &[f64]| {
        [
            amp * (sh * s[0] + ind * s[2]),
            amp * (sh * s[1] + ind * s[3]),
            amp * (sh * s[0] + ind * s[4]),
            amp * (-sh * s[1] + ind * s[5]),
        ]
    }
}

/// Classical covariance of the shared-noise model: X quadratures share +s_X,
/// P quadratures share ±s_P (the EPR-like sign pattern).
pub fn shared_noise_covariance(spec: &NullModelSpec) -> Result<Mat4> {
    spec.validate()?;
    let p = spec.excess_power();
    let c = p * spec.correlation;
    Ok(Mat4::new(
        p, 0.0, c, 0.0, //
        0.0, p, 0.0, -c, //
        c, 0.0, p, 0.0, //
        0.0, -c, 0.0, p,
    ))
}

/// Shared white source and independent sources, each single-pole filtered,
/// scaled to the target power and lifted by the vacuum floor.
pub fn gen_shared_noise(spec: &NullModelSpec) -> Result<TrajectoryRecord> {
    spec.validate()?;
    let samples = mixed_record(spec, 6, shared_noise_map(spec));
    Ok(make_record(spec, samples))
}

fn paramp_model(spec: &NullModelSpec) -> Result<(ModelParams, f64)> {
    spec.validate()?;
    let kappa = spec.kappa();
    if 2.0 * spec.gain >= kappa {
        return Err(Error::UnstableGain {
            gain: spec.gain,
            limit: kappa / 2.0,
        });
    }
    // Var X_a of the classical steady state is n κ²/(κ² − 4G²).
    let n = spec.excess_power() * (kappa * kappa - 4.0 * spec.gain * spec.gain) / (kappa * kappa);
    Ok((ModelParams::symmetric(spec.gain, kappa, n, Preset::TmsHamiltonian), n))
}

fn paramp_dynamics(spec: &NullModelSpec) -> Result<(crate::DriftMatrix, DiffusionMatrix)> {
    let (params, n) = paramp_model(spec)?;
    let drift = build_drift(&params)?;
    let diffusion = DiffusionMatrix::new(Mat4::identity() * (params.kappa_a * n))?;
    Ok((drift, diffusion))
}

/// Classical covariance of the c-number amplifier (no vacuum term).
pub fn classical_paramp_covariance(spec: &NullModelSpec) -> Result<Mat4> {
    let (drift, diffusion) = paramp_dynamics(spec)?;
    Ok(*solve_steady_lyapunov(&drift, &diffusion)?.matrix())
}

/// c-number analogue of the two-mode-squeezing Langevin equations with
/// classical noise only, lifted by the vacuum floor.
pub fn gen_classical_paramp(spec: &NullModelSpec) -> Result<TrajectoryRecord> {
    let (drift, diffusion) = paramp_dynamics(spec)?;
    let prop = OuPropagator::new(&drift, &diffusion, spec.dt)?;
    let classical = prop.sample(spec.n_steps, 0, derive_stream_seed(spec.seed, 1), None);
    let floor = mixed_record(spec, 0, |_| [0.0; 4]);
    let samples = classical
        .iter()
        .zip(floor)
        .map(|(c, v)| [c[0] + v[0], c[1] + v[1], c[2] + v[2], c[3] + v[3]])
        .collect();
    Ok(make_record(spec, samples))
}

/// Which witness the mixture search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MixtureObjective {
    DuanSum,
    NuMinus,
}

/// Number of free parameters: 4 source gains and two 2×2 mixing matrices.
pub const MIXTURE_DIM: usize = 12;

/// Unit-norm mixing rows derived from θ = (h_X1, h_X2, h_P1, h_P2, M_X, M_P).
fn mixture_rows(theta: &[f64]) -> [[f64; 2]; 4] {
    let h = &theta[0..4];
    let mx = &theta[4..8];
    let mp = &theta[8..12];
    let unit = |a: f64, b: f64| {
        let n = (a * a + b * b).sqrt();
        if n < 1e-12 {
            [1.0, 0.0]
        } else {
            [a / n, b / n]
        }
    };
    [
        unit(mx[0] * h[0], mx[1] * h[1]),
        unit(mp[0] * h[2], mp[1] * h[3]),
        unit(mx[2] * h[0], mx[3] * h[1]),
        unit(mp[2] * h[2], mp[3] * h[3]),
    ]
}

/// Classical covariance produced by mixing parameters θ.
pub fn mixture_covariance(spec: &NullModelSpec, theta: &[f64]) -> Mat4 {
    let p = spec.excess_power();
    let c = spec.correlation;
    let r = mixture_rows(theta);
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let cx = p * c * dot(r[0], r[2]);
    let cp = p * c * dot(r[1], r[3]);
    Mat4::new(
        p, 0.0, cx, 0.0, //
        0.0, p, 0.0, cp, //
        cx, 0.0, p, 0.0, //
        0.0, cp, 0.0, p,
    )
}

fn mixture_objective(spec: &NullModelSpec, objective: MixtureObjective, theta: &[f64]) -> f64 {
    let v = match enforce_classicality(&mixture_covariance(spec, theta)) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    match objective {
        MixtureObjective::DuanSum => duan_witness(&v),
        MixtureObjective::NuMinus => ppt_nu_minus(&v).unwrap_or(f64::INFINITY),
    }
}

/// Result of the mixture search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub theta: Vec<f64>,
    /// Objective at the optimum, evaluated on the covariance the pipeline converges to.
    pub achieved_witness: f64,
    /// Best value reached by each restart, in restart order.
    pub restart_values: Vec<f64>,
    pub evaluations: usize,
    /// False if the winning restart exhausted its budget before its simplex collapsed.
    pub converged: bool,
}

/// Best-found mixture, its search metadata and one record driven by it.
#[derive(Debug, Clone)]
pub struct OptimizedMixture {
    pub record: TrajectoryRecord,
    pub fit: MixtureFit,
}

/// Direct search over source gains and mixing matrices for the smallest
/// witness a linearly processed classical signal can reach.
///
/// The objective is evaluated on the covariance that the pipeline output
/// converges to, V_cl(θ) + ½·I₄. Restarts run in parallel from seeds derived
/// from `spec.seed`, so the result does not depend on scheduling.
pub fn optimize_mixture(spec: &NullModelSpec, objective: MixtureObjective) -> Result<MixtureFit> {
    spec.validate()?;
    let opts = NelderMeadOptions {
        max_evals: MIXTURE_EVALS,
        ..Default::default()
    };
    let runs: Vec<_> = (0..MIXTURE_RESTARTS)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(derive_stream_seed(spec.seed, 100 + i as u64), 13);
            let x0: Vec<f64> = (0..MIXTURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            nelder_mead(|th| mixture_objective(spec, objective, th), &x0, &opts)
        })
        .collect();
    let evaluations = runs.iter().map(|r| r.evals).sum();
    let restart_values: Vec<f64> = runs.iter().map(|r| r.f).collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r)
        .expect("at least one restart");
    Ok(MixtureFit {
        theta: best.x,
        achieved_witness: best.f,
        restart_values,
        evaluations,
        converged: best.converged,
    })
}

/// Record of the mixture with parameters θ.
pub fn gen_mixture_record(spec: &NullModelSpec, theta: &[f64]) -> Result<TrajectoryRecord> {
    spec.validate()?;
    if theta.len() != MIXTURE_DIM {
        return Err(Error::InvalidParams(format!(
            "mixture needs {MIXTURE_DIM} parameters, got {}",
            theta.len()
        )));
    }
    let rows = mixture_rows(theta);
    let amp = spec.excess_power().sqrt();
    let sh = spec.correlation.sqrt();
    let ind = (1.0 - spec.correlation).sqrt();
    // Sources: [e_X1, e_X2, e_P1, e_P2, u_1..u_4].
    let samples = mixed_record(spec, 8, |s| {
        [
            amp * (sh * (rows[0][0] * s[0] + rows[0][1] * s[1]) + ind * s[4]),
            amp * (sh * (rows[1][0] * s[2] + rows[1][1] * s[3]) + ind * s[5]),
            amp * (sh * (rows[2][0] * s[0] + rows[2][1] * s[1]) + ind * s[6]),
            amp * (sh * (rows[3][0] * s[2] + rows[3][1] * s[3]) + ind * s[7]),
        ]
    });
    Ok(make_record(spec, samples))
}

/// Searches for the best mixture, then simulates one record with it.
pub fn gen_optimized_mixture(
    spec: &NullModelSpec,
    objective: MixtureObjective,
) -> Result<OptimizedMixture> {
    let fit = optimize_mixture(spec, objective)?;
    let record = gen_mixture_record(spec, &fit.theta)?;
    Ok(OptimizedMixture { record, fit })
}

/// Expected classical covariance of any generator (no vacuum term).
pub fn classical_covariance(spec: &NullModelSpec, theta: Option<&[f64]>) -> Result<Mat4> {
    match spec.kind {
        NullKind::SharedNoise => shared_noise_covariance(spec),
        NullKind::ClassicalParamp => classical_paramp_covariance(spec),
        NullKind::OptimizedMixture => {
            spec.validate()?;
            let theta = theta.ok_or_else(|| {
                Error::InvalidParams("mixture covariance needs the mixing parameters".into())
            })?;
            Ok(mixture_covariance(spec, theta))
        }
    }
}

/// Runs the generator selected by `spec.kind`; the mixture minimizes the Duan sum.
pub fn generate(spec: &NullModelSpec) -> Result<TrajectoryRecord> {
    match spec.kind {
        NullKind::SharedNoise => gen_shared_noise(spec),
        NullKind::ClassicalParamp => gen_classical_paramp(spec),
        NullKind::OptimizedMixture => {
            Ok(gen_optimized_mixture(spec, MixtureObjective::DuanSum)?.record)
        }
    }
}

/// Mean per-quadrature variance of a quantum state, the power a null model must match.
pub fn matched_power(quantum: &CovarianceMatrix) -> f64 {
    quantum.matrix().diagonal().mean()
}

/// One spec per null model, matched to the quantum steady state of `params`:
/// same per-quadrature power, filter rate κ/2 and (for the amplifier) gain G.
/// Each spec gets its own seed stream.
pub fn matched_specs(
    params: &ModelParams,
    correlation: f64,
    seed: u64,
    dt: f64,
    n_steps: usize,
) -> Result<[NullModelSpec; 3]> {
    let quantum = crate::gaussian::steady_state(params)?;
    let base = NullModelSpec {
        kind: NullKind::SharedNoise,
        target_bandwidth: 0.5 * params.kappa_a,
        target_power: matched_power(&quantum),
        correlation,
        gain: params.g,
        seed,
        dt,
        n_steps,
    };
    let make = |kind: NullKind, stream: u64| NullModelSpec {
        kind,
        seed: derive_stream_seed(seed, stream),
        ..base.clone()
    };
    let specs = [
        make(NullKind::SharedNoise, 0),
        make(NullKind::ClassicalParamp, 1),
        make(NullKind::OptimizedMixture, 2),
    ];
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

/// Sample variance of each channel.
pub fn channel_variances(record: &TrajectoryRecord) -> [f64; 4] {
    let m = record.sample_covariance();
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]]
}
