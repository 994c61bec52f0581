// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Stochastic quadrature records from the linear Langevin dynamics.
//!
//! Two schemes share one seeding contract:
//! - exact Ornstein–Uhlenbeck discretization, R_{k+1} = F R_k + w_k with
//!   F = e^{A dt} and Cov(w) = V∞ − F V∞ Fᵀ, statistically exact for any dt;
//! - Euler–Maruyama, R_{k+1} = R_k + A R_k dt + √dt L z_k with L Lᵀ = D.
//!
//! Each record owns a ChaCha20 stream seeded from a single 64-bit seed; the
//! scheme selects the ChaCha stream id, so equal seeds never alias across schemes.

use std::io::{BufRead, Write};

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::solve_steady_lyapunov;
use crate::matrix::{DiffusionMatrix, DriftMatrix, Mat4};

/// Pinned generator, recorded in every record header.
pub const RNG_ALGORITHM: &str = "chacha20 (rand_chacha 0.9, seed_from_u64)";

/// Euler–Maruyama accuracy guard: dt ≤ this / max|λ(A)|.
pub const EM_STEP_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    ExactOu,
    EulerMaruyama,
}

impl Scheme {
    fn stream_id(self) -> u64 {
        match self {
            Scheme::ExactOu => 1,
            Scheme::EulerMaruyama => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::ExactOu => "EXACT_OU",
            Scheme::EulerMaruyama => "EULER_MARUYAMA",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "EXACT_OU" => Some(Scheme::ExactOu),
            "EULER_MARUYAMA" => Some(Scheme::EulerMaruyama),
            _ => None,
        }
    }
}

/// Provenance of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Quantum,
    NullA,
    NullB,
    NullC,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::Quantum, Source::NullA, Source::NullB, Source::NullC];

    pub fn tag(self) -> &'static str {
        match self {
            Source::Quantum => "QUANTUM",
            Source::NullA => "NULL_A",
            Source::NullB => "NULL_B",
            Source::NullC => "NULL_C",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        Source::ALL.into_iter().find(|src| src.tag() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Step in units of 1/κ.
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    pub master_seed: u64,
    #[serde(default)]
    pub burn_in: usize,
    /// Deterministic start instead of a stationary draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<[f64; 4]>,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, n_steps: usize, scheme: Scheme, master_seed: u64) -> Self {
        Self {
            dt,
            n_steps,
            scheme,
            master_seed,
            burn_in: 0,
            initial_state: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParams("n_steps must be positive".into()));
        }
        if let Some(r0) = self.initial_state {
            if r0.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams("initial state is not finite".into()));
            }
        }
        Ok(())
    }

    /// Copy with the seed of ensemble member `index`.
    pub fn for_member(&self, index: u64) -> Self {
        Self {
            master_seed: derive_stream_seed(self.master_seed, index),
            ..self.clone()
        }
    }
}

/// Uniformly sampled (X_a, P_a, X_b, P_b) series with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<[f64; 4]>,
    pub dt: f64,
    pub source: Source,
    pub scheme: Scheme,
    pub seed: u64,
    pub params_hash: Option<String>,
    /// Bandwidth B of an applied band-limit, if any.
    pub bandlimit: Option<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn channel(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| s[i])
    }

    /// Zero-mean second-moment matrix of the samples (no mean subtraction).
    pub fn second_moments(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for s in &self.samples {
            let v = Vector4::from(*s);
            m += v * v.transpose();
        }
        m / self.samples.len().max(1) as f64
    }

    /// Unbiased sample covariance over time.
    pub fn sample_covariance(&self) -> Mat4 {
        let n = self.samples.len() as f64;
        let mut mean = Vector4::zeros();
        for s in &self.samples {
            mean += Vector4::from(*s);
        }
        mean /= n;
        let mut m = Mat4::zeros();
        for s in &self.samples {
            let d = Vector4::from(*s) - mean;
            m += d * d.transpose();
        }
        m / (n - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidRecord(format!("dt must be positive, got {}", self.dt)));
        }
        if self.samples.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRecord("non-finite sample".into()));
        }
        Ok(())
    }

    /// CSV with `#` metadata lines and columns t, X_a, P_a, X_b, P_b.
    ///
    /// Floats use Rust's shortest round-trip formatting, so reading back is exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# cvent trajectory v1")?;
        writeln!(w, "# dt={}", self.dt)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# scheme={}", self.scheme.tag())?;
        writeln!(w, "# source={}", self.source.tag())?;
        writeln!(w, "# params_hash={}", self.params_hash.as_deref().unwrap_or("-"))?;
        if let Some(b) = self.bandlimit {
            writeln!(w, "# bandlimit={b}")?;
        }
        writeln!(w, "# rng={RNG_ALGORITHM}")?;
        writeln!(w, "t,X_a,P_a,X_b,P_b")?;
        for (k, s) in self.samples.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", k as f64 * self.dt, s[0], s[1], s[2], s[3])?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let bad = |msg: String| Error::InvalidRecord(msg);
        let mut dt = None;
        let mut seed = None;
        let mut scheme = None;
        let mut source = None;
        let mut params_hash = None;
        let mut bandlimit = None;
        let mut header_seen = false;
        let mut samples = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    let v = v.trim();
                    match k.trim() {
                        "dt" => dt = Some(v.parse::<f64>().map_err(|e| bad(format!("dt: {e}")))?),
                        "seed" => {
                            seed = Some(v.parse::<u64>().map_err(|e| bad(format!("seed: {e}")))?)
                        }
                        "scheme" => {
                            scheme = Some(
                                Scheme::from_tag(v).ok_or_else(|| bad(format!("scheme {v}")))?,
                            )
                        }
                        "source" => {
                            source = Some(
                                Source::from_tag(v).ok_or_else(|| bad(format!("source {v}")))?,
                            )
                        }
                        "params_hash" => params_hash = (v != "-").then(|| v.to_string()),
                        "bandlimit" => {
                            bandlimit =
                                Some(v.parse::<f64>().map_err(|e| bad(format!("bandlimit: {e}")))?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "t,X_a,P_a,X_b,P_b" {
                    return Err(bad(format!("line {}: unexpected header {line:?}", lineno + 1)));
                }
                header_seen = true;
                continue;
            }
            let mut vals = [0.0; 5];
            let mut count = 0;
            for (i, field) in line.split(',').enumerate() {
                if i >= 5 {
                    return Err(bad(format!("line {}: too many columns", lineno + 1)));
                }
                vals[i] = field
                    .parse()
                    .map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?;
                count += 1;
            }
            if count != 5 {
                return Err(bad(format!("line {}: expected 5 columns", lineno + 1)));
            }
            samples.push([vals[1], vals[2], vals[3], vals[4]]);
        }
        let rec = Self {
            samples,
            dt: dt.ok_or_else(|| bad("missing dt".into()))?,
            source: source.ok_or_else(|| bad("missing source".into()))?,
            scheme: scheme.ok_or_else(|| bad("missing scheme".into()))?,
            seed: seed.ok_or_else(|| bad("missing seed".into()))?,
            params_hash,
            bandlimit,
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// Seed of ensemble member `task_index`.
///
/// SplitMix64 finalizer applied to `master + (index+1)·φ`; the map index → seed
/// is a bijection for a fixed master, so distinct indices never collide.
pub fn derive_stream_seed(master_seed: u64, task_index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master_seed.wrapping_add(task_index.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn normal4<R: Rng>(rng: &mut R) -> Vector4<f64> {
    Vector4::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// L with L Lᵀ = M for symmetric PSD M; Cholesky when possible, otherwise a
/// clipped eigen-factor.
pub fn psd_factor(m: &Mat4) -> Result<Mat4> {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(ch) = sym.cholesky() {
        return Ok(ch.l());
    }
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::NotPsd(min));
    }
    let root = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    Ok(eig.eigenvectors * Mat4::from_diagonal(&root))
}

/// Precomputed exact-OU step for a stable (A, D, dt).
#[derive(Debug, Clone)]
pub struct OuPropagator {
    pub transition: Mat4,
    noise_factor: Mat4,
    stationary_factor: Mat4,
    pub dt: f64,
}

impl OuPropagator {
    pub fn new(drift: &DriftMatrix, diffusion: &DiffusionMatrix, dt: f64) -> Result<Self> {
        let v_inf = solve_steady_lyapunov(drift, diffusion)?;
        let f = (drift.matrix() * dt).exp();
        let v = v_inf.matrix();
        let q = v - f * v * f.transpose();
        Ok(Self {
            transition: f,
            noise_factor: psd_factor(&q)?,
            stationary_factor: psd_factor(v)?,
            dt,
        })
    }

    /// One record from `seed`; starts from a stationary draw unless `initial` is given.
    pub fn sample(
        &self,
        n_steps: usize,
        burn_in: usize,
        seed: u64,
        initial: Option<[f64; 4]>,
    ) -> Vec<[f64; 4]> {
        let mut rng = rng_for(seed, Scheme::ExactOu.stream_id());
        let mut r = match initial {
            Some(r0) => Vector4::from(r0),
            None => self.stationary_factor * normal4(&mut rng),
        };
        for _ in 0..burn_in {
            r = self.transition * r + self.noise_factor * normal4(&mut rng);
        }
        let mut out = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            out.push([r[0], r[1], r[2], r[3]]);
            r = self.transition * r + self.noise_factor * normal4(&mut rng);
        }
        out
    }
}

/// Exact OU discretization; R₀ from the stationary Gaussian.
pub fn sample_exact_ou(
    drift: &DriftMatrix,
    diffusion: &DiffusionMatrix,
    config: &TrajectoryConfig,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let prop = OuPropagator::new(drift, diffusion, config.dt)?;
    Ok(TrajectoryRecord {
        samples: prop.sample(
            config.n_steps,
            config.burn_in,
            config.master_seed,
            config.initial_state,
        ),
        dt: config.dt,
        source: Source::Quantum,
        scheme: Scheme::ExactOu,
        seed: config.master_seed,
        params_hash: None,
        bandlimit: None,
    })
}

/// Euler–Maruyama integration. Stable drifts start from the stationary draw,
/// unstable ones from the origin, unless `initial_state` is set.
pub fn sample_euler_maruyama(
    drift: &DriftMatrix,
    diffusion: &DiffusionMatrix,
    config: &TrajectoryConfig,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let rho = drift.spectral_radius();
    if rho > 0.0 && config.dt > EM_STEP_LIMIT / rho {
        return Err(Error::StepTooLarge {
            dt: config.dt,
            limit: EM_STEP_LIMIT / rho,
        });
    }
    let a = drift.matrix();
    let l = psd_factor(diffusion.matrix())? * config.dt.sqrt();
    let mut rng = rng_for(config.master_seed, Scheme::EulerMaruyama.stream_id());
    let mut r = match config.initial_state {
        Some(r0) => Vector4::from(r0),
        None if drift.is_hurwitz() => {
            let v = solve_steady_lyapunov(drift, diffusion)?;
            psd_factor(v.matrix())? * normal4(&mut rng)
        }
        None => Vector4::zeros(),
    };
    let step = |r: Vector4<f64>, rng: &mut ChaCha20Rng| r + a * r * config.dt + l * normal4(rng);
    for _ in 0..config.burn_in {
        r = step(r, &mut rng);
    }
    let mut samples = Vec::with_capacity(config.n_steps);
    for _ in 0..config.n_steps {
        samples.push([r[0], r[1], r[2], r[3]]);
        r = step(r, &mut rng);
    }
    Ok(TrajectoryRecord {
        samples,
        dt: config.dt,
        source: Source::Quantum,
        scheme: Scheme::EulerMaruyama,
        seed: config.master_seed,
        params_hash: None,
        bandlimit: None,
    })
}

/// `members` records with seeds `derive_stream_seed(master, i)`.
///
/// Output order is the member index regardless of `parallel`.
pub fn sample_ensemble(
    drift: &DriftMatrix,
    diffusion: &DiffusionMatrix,
    config: &TrajectoryConfig,
    members: usize,
    parallel: bool,
) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    let one = |i: usize| -> Result<TrajectoryRecord> {
        let cfg = config.for_member(i as u64);
        match cfg.scheme {
            Scheme::ExactOu => sample_exact_ou(drift, diffusion, &cfg),
            Scheme::EulerMaruyama => sample_euler_maruyama(drift, diffusion, &cfg),
        }
    };
    if parallel {
        (0..members).into_par_iter().map(one).collect()
    } else {
        (0..members).map(one).collect()
    }
}
