// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cvent_core::entanglement::{
    analytic_nu_minus, duan_witness, ppt_nu_minus, ppt_nu_minus_spectral, symmetric_block_nu_minus,
    DUAN_BOUND, PPT_BOUND,
};
use cvent_core::gaussian::{
    build_diffusion, build_drift, check_physicality, closed_form_covariance, evolve_covariance,
    lyapunov_residual, solve_steady_lyapunov, stationary_dynamics, steady_state,
};
use cvent_core::null_models::{
    channel_variances, classical_covariance, enforce_classicality, gen_mixture_record, generate,
    optimize_mixture, MixtureObjective, NullKind, NullModelSpec,
};
use cvent_core::pipeline::{
    analyze_ensemble, convergence_sweep, locate_threshold, PipelineConfig, SweepSettings,
};
use cvent_core::sweep::{contour_deviation, phase_diagram, Axis, PhaseDiagramConfig};
use cvent_core::thresholds::{
    collective_occupation, kappa_from_ringdown, v_min, NoiseInputSpec, VMinForm, HBAR, K_B,
};
use cvent_core::trajectory::{derive_stream_seed, sample_ensemble, Scheme, TrajectoryConfig, TrajectoryRecord};
use cvent_core::{CovarianceMatrix, DiffusionMatrix, Mat4, ModelParams, Preset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(stream: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_stream_seed(0xACCE_97, stream))
}

/// Root of f on [lo, hi] with f(lo) ≥ 0 > f(hi), to machine resolution.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1_analytic_boundary() -> Outcome {
    let mut worst = 0.0f64;
    for n in [0.0, 0.5, 1.0, 5.0, 100.0] {
        let root_g = bisect(|g| analytic_nu_minus(g, 1.0, n).unwrap() - 0.5, 0.0, 0.5 - 1e-15);
        let err = (2.0 * root_g - n / (n + 1.0)).abs();
        worst = worst.max(err);
        ensure!(err < 1e-12, "n={n}: root 2G/κ={} vs {}", 2.0 * root_g, n / (n + 1.0));
    }
    Ok(format!("max |2G*/κ − n/(n+1)| = {worst:.1e}"))
}

fn c2_three_routes() -> Outcome {
    let v = closed_form_covariance(0.25, 1.0, 0.0).map_err(|e| e.to_string())?;
    let block = symmetric_block_nu_minus(&v).map_err(|e| e.to_string())?;
    let invariants = ppt_nu_minus(&v).map_err(|e| e.to_string())?;
    let spectral = ppt_nu_minus_spectral(&v).map_err(|e| e.to_string())?;
    let spread = [block, invariants, spectral]
        .iter()
        .map(|x| (x - 1.0 / 6.0).abs())
        .fold(0.0, f64::max);
    ensure!(spread < 1e-10, "routes {block}, {invariants}, {spectral}");
    Ok(format!("block {block:.15}, invariants {invariants:.15}, spectral {spectral:.15}"))
}

fn random_stable_params(r: &mut ChaCha20Rng) -> ModelParams {
    loop {
        let ka = r.random_range(0.2..3.0);
        let kb = r.random_range(0.2..3.0);
        let p = ModelParams {
            g: r.random_range(0.0..0.95) * 0.5 * f64::sqrt(ka * kb),
            kappa_a: ka,
            kappa_b: kb,
            n_a: r.random_range(0.0..5.0),
            n_b: r.random_range(0.0..5.0),
            delta_a: r.random_range(-2.0..2.0),
            delta_b: r.random_range(-2.0..2.0),
            preset: Preset::TmsHamiltonian,
        };
        // Slowest decay at least 2% of the smallest κ, so t = 10³/κ is "long".
        let a = build_drift(&p).unwrap();
        if a.max_real_eigenvalue() < -0.02 * ka.min(kb) {
            return p;
        }
    }
}

/// Independent oracle: fixed-step RK4 on V̇ = AV + VAᵀ + D from V₀ = ½I.
fn rk4_covariance(a: &Mat4, d: &Mat4, t: f64, dt: f64) -> Mat4 {
    let f = |v: &Mat4| a * v + v * a.transpose() + d;
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let mut v = Mat4::identity() * 0.5;
    for _ in 0..steps {
        let k1 = f(&v);
        let k2 = f(&(v + k1 * (0.5 * h)));
        let k3 = f(&(v + k2 * (0.5 * h)));
        let k4 = f(&(v + k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    v
}

fn c3_lyapunov() -> Outcome {
    let mut r = rng(3);
    let (mut worst_res, mut worst_ode) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_stable_params(&mut r);
        let a = build_drift(&p).unwrap();
        let d = build_diffusion(&p).unwrap();
        let v = solve_steady_lyapunov(&a, &d).map_err(|e| e.to_string())?;
        let res = lyapunov_residual(&a, &d, &v);
        let t = 1e3 / p.kappa_a.min(p.kappa_b);
        let ode = rk4_covariance(a.matrix(), d.matrix(), t, 0.02 / a.spectral_radius());
        let diff = (ode - v.matrix()).amax();
        let library = evolve_covariance(&CovarianceMatrix::vacuum(), &a, &d, t).map_err(|e| e.to_string())?;
        ensure!((library.matrix() - v.matrix()).amax() < 1e-8, "evolve_covariance disagrees");
        worst_res = worst_res.max(res);
        worst_ode = worst_ode.max(diff);
        ensure!(res < 1e-10, "residual {res:e} for {p:?}");
        ensure!(diff < 1e-8, "ODE gap {diff:e} for {p:?}");
    }
    Ok(format!("100 draws: max residual {worst_res:.1e}, max ODE gap {worst_ode:.1e}"))
}

fn c4_tms_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for i in 0..10 {
        let g = 0.045 * (i + 1) as f64;
        for j in 0..10 {
            let n = 0.5 * j as f64;
            let v = steady_state(&ModelParams::symmetric(g, 1.0, n, Preset::TmsHamiltonian))
                .map_err(|e| e.to_string())?;
            let nu = ppt_nu_minus(&v).map_err(|e| e.to_string())?;
            let oracle = (2.0 * n + 1.0) / (2.0 * (1.0 + 2.0 * g));
            worst = worst.max((nu - oracle).abs());
            ensure!((nu - oracle).abs() < 1e-10, "G={g} n={n}: {nu} vs {oracle}");
            let closed = analytic_nu_minus(g, 1.0, n).unwrap();
            let ratio_err = (closed / nu - (1.0 - 2.0 * g)).abs();
            worst_ratio = worst_ratio.max(ratio_err);
            ensure!(ratio_err < 1e-10, "ratio at G={g} n={n}: {}", closed / nu);
            ensure!(closed < nu, "closed form must lie below the TMS value");
        }
    }
    Ok(format!(
        "10×10 grid: max |ν̃₋ − oracle| {worst:.1e}; closed/TMS = (κ−2G)/κ to {worst_ratio:.1e}"
    ))
}

fn c5_phase_diagram() -> Outcome {
    let cfg = PhaseDiagramConfig {
        g_over_kappa: Axis::new(0.0, 0.6, 50),
        n_eff: Axis::new(0.0, 5.0, 50),
        kappa: 1.0,
        preset: Preset::ClosedForm,
    };
    let cells = phase_diagram(&cfg, true).map_err(|e| e.to_string())?;
    let (dev, rows) = contour_deviation(&cfg, &cells);
    ensure!(rows >= 45, "contour found in only {rows} rows");
    ensure!(dev <= 1.0, "contour deviates by {dev} cells");
    Ok(format!("50×50 grid: contour within {dev:.3} cells of the analytic boundary over {rows} rows"))
}

fn outer(x: &[f64; 4]) -> Mat4 {
    Mat4::from_fn(|i, j| x[i] * x[j])
}

fn c6_trajectories() -> Outcome {
    let p = ModelParams::symmetric(0.2, 1.0, 0.5, Preset::TmsHamiltonian);
    let a = build_drift(&p).unwrap();
    let d = build_diffusion(&p).unwrap();
    let v = solve_steady_lyapunov(&a, &d).map_err(|e| e.to_string())?;
    let m = 10_000;

    // Exact OU: the last sample of each of 10⁴ independent trajectories.
    let cfg = TrajectoryConfig::new(0.1, 100, Scheme::ExactOu, 606);
    let ens = sample_ensemble(&a, &d, &cfg, m, true).map_err(|e| e.to_string())?;
    let mut s = Mat4::zeros();
    for rec in &ens {
        s += outer(rec.samples.last().unwrap());
    }
    s /= m as f64;
    let vm = v.matrix();
    let mut worst_z = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let se = ((vm[(i, i)] * vm[(j, j)] + vm[(i, j)].powi(2)) / m as f64).sqrt();
            worst_z = worst_z.max((s[(i, j)] - vm[(i, j)]).abs() / se);
        }
    }
    ensure!(worst_z < 5.0, "exact-OU entry {worst_z:.2} SE from the Lyapunov solution");

    // Euler–Maruyama at dt = 0.01/κ from the origin; sample t = 40, 45, …, 60.
    let em_cfg = TrajectoryConfig {
        initial_state: Some([0.0; 4]),
        ..TrajectoryConfig::new(0.01, 6001, Scheme::EulerMaruyama, 607)
    };
    let em = sample_ensemble(&a, &d, &em_cfg, m, true).map_err(|e| e.to_string())?;
    let mut s = Mat4::zeros();
    let mut count = 0.0;
    for rec in &em {
        for k in (4000..=6000).step_by(500) {
            s += outer(&rec.samples[k]);
            count += 1.0;
        }
    }
    s /= count;
    let rel = (s - vm).amax() / vm.amax();
    ensure!(rel < 0.02, "Euler–Maruyama max-norm deviation {:.2}%", 100.0 * rel);
    Ok(format!(
        "exact OU: worst entry {worst_z:.2} SE (10⁴ runs); Euler–Maruyama dt=0.01: {:.2}% max-norm",
        100.0 * rel
    ))
}

const NULL_SPECS: usize = 200;
const NULL_MEMBERS: usize = 16;
const NULL_T: f64 = 400.0;
const NULL_DT: f64 = 0.1;

fn null_ensemble(spec: &NullModelSpec) -> cvent_core::Result<(Vec<TrajectoryRecord>, Option<Vec<f64>>)> {
    let theta = match spec.kind {
        NullKind::OptimizedMixture => Some(optimize_mixture(spec, MixtureObjective::DuanSum)?.theta),
        _ => None,
    };
    let recs = (0..NULL_MEMBERS)
        .map(|m| {
            let member = NullModelSpec {
                seed: derive_stream_seed(spec.seed, m as u64),
                ..spec.clone()
            };
            match &theta {
                Some(th) => gen_mixture_record(&member, th),
                None => generate(&member),
            }
        })
        .collect::<cvent_core::Result<_>>()?;
    Ok((recs, theta))
}

/// Empirical per-channel power of long single records against the target.
fn long_record_power_error(kind: NullKind, k: u64) -> cvent_core::Result<f64> {
    let errs: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut r = ChaCha20Rng::seed_from_u64(derive_stream_seed(0x0714 + k, i));
            let spec = NullModelSpec {
                kind,
                target_bandwidth: 0.5,
                target_power: 0.5 + r.random_range(0.05..3.0),
                correlation: r.random_range(0.0..=1.0),
                gain: r.random_range(0.0..0.45),
                seed: derive_stream_seed(0x0715 + k, i),
                dt: 0.1,
                n_steps: 2_000_000,
            };
            let rec = match kind {
                NullKind::OptimizedMixture => {
                    let short = NullModelSpec { n_steps: 1, ..spec.clone() };
                    gen_mixture_record(&spec, &optimize_mixture(&short, MixtureObjective::DuanSum)?.theta)?
                }
                _ => generate(&spec)?,
            };
            Ok(channel_variances(&rec)
                .iter()
                .map(|v| (v / spec.target_power - 1.0).abs())
                .fold(0.0, f64::max))
        })
        .collect::<cvent_core::Result<_>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

fn c7_null_models() -> Outcome {
    let cfg = PipelineConfig {
        bootstrap_resamples: 0,
        ..PipelineConfig::new(0.5, NULL_T)
    };
    let mut lines = Vec::new();
    for (k, kind) in [NullKind::SharedNoise, NullKind::ClassicalParamp, NullKind::OptimizedMixture]
        .into_iter()
        .enumerate()
    {
        let results: Vec<cvent_core::Result<(f64, f64, bool, f64)>> = (0..NULL_SPECS as u64)
            .into_par_iter()
            .map(|i| {
                let mut r = ChaCha20Rng::seed_from_u64(derive_stream_seed(0x0711 + k as u64, i));
                let spec = NullModelSpec {
                    kind,
                    target_bandwidth: 0.5,
                    target_power: 0.5 + r.random_range(0.05..3.0),
                    correlation: r.random_range(0.0..=1.0),
                    gain: r.random_range(0.0..0.45),
                    seed: derive_stream_seed(0x0712 + k as u64, i),
                    dt: NULL_DT,
                    n_steps: (NULL_T / NULL_DT).round() as usize,
                };
                let (recs, theta) = null_ensemble(&spec)?;
                let v_cl = classical_covariance(&spec, theta.as_deref())?;
                let psd = DiffusionMatrix::new(v_cl)?.min_eigenvalue() >= -1e-12;
                // Expected per-channel power of the emitted state.
                let power_err = (0..4)
                    .map(|c| ((v_cl[(c, c)] + 0.5) / spec.target_power - 1.0).abs())
                    .fold(0.0, f64::max);
                let rep = analyze_ensemble(&recs, &cfg, false)?.report;
                let z_duan = (rep.duan_sum - DUAN_BOUND) / rep.stderr_duan;
                let z_nu = (rep.nu_minus - PPT_BOUND) / rep.stderr_nu;
                Ok((z_duan, z_nu, psd, power_err))
            })
            .collect();
        let results: Vec<_> = results.into_iter().collect::<cvent_core::Result<_>>().map_err(|e| e.to_string())?;
        let violations = results.iter().filter(|r| r.0 < -3.0 || r.1 < -3.0).count();
        let min_z = results.iter().map(|r| r.0.min(r.1)).fold(f64::INFINITY, f64::min);
        let non_psd = results.iter().filter(|r| !r.2).count();
        let worst_power = results.iter().map(|r| r.3).fold(0.0, f64::max);
        ensure!(violations == 0, "{kind:?}: {violations} of {NULL_SPECS} specs violate at 3σ (min z {min_z:.2})");
        ensure!(non_psd == 0, "{kind:?}: {non_psd} classical covariances not PSD");
        ensure!(worst_power < 1e-12, "{kind:?}: expected channel power off by {worst_power:e}");
        let sampled = long_record_power_error(kind, k as u64).map_err(|e| e.to_string())?;
        ensure!(sampled < 0.05, "{kind:?}: sampled channel power off by {:.1}%", 100.0 * sampled);
        lines.push(format!("{kind:?} min z {min_z:.2}, sampled power within {:.1}%", 100.0 * sampled));
    }

    // Entangled quantum ensemble through the identical pipeline.
    let params = ModelParams::symmetric(0.2, 1.0, 0.25, Preset::ClosedForm);
    let dynamics = stationary_dynamics(&params).map_err(|e| e.to_string())?;
    let tcfg = TrajectoryConfig::new(NULL_DT, (NULL_T / NULL_DT).round() as usize, Scheme::ExactOu, 0x0713);
    let recs = sample_ensemble(&dynamics.drift, &dynamics.diffusion, &tcfg, NULL_MEMBERS, true)
        .map_err(|e| e.to_string())?;
    let rep = analyze_ensemble(&recs, &cfg, true).map_err(|e| e.to_string())?.report;
    let z_duan = (DUAN_BOUND - rep.duan_sum) / rep.stderr_duan;
    let z_nu = (PPT_BOUND - rep.nu_minus) / rep.stderr_nu;
    ensure!(rep.entangled_duan && rep.entangled_ppt, "quantum ensemble not certified: {rep:?}");
    Ok(format!(
        "{} specs/model, 0 violations ({}); quantum violates by {z_duan:.0}σ (Duan), {z_nu:.0}σ (PPT)",
        NULL_SPECS,
        lines.join("; ")
    ))
}

fn c8_convergence() -> Outcome {
    let params = ModelParams::symmetric(0.2, 1.0, 0.25, Preset::ClosedForm);
    let settings = SweepSettings {
        runs: 64,
        dt: 0.1,
        master_seed: 4242,
        bootstrap_resamples: 0,
        reference_rate: 0.5,
    };
    let cells = [(100.0, 0.5), (200.0, 0.5), (400.0, 0.5), (800.0, 0.5), (1600.0, 0.5)];
    let table = convergence_sweep(&params, &cells, &settings).map_err(|e| e.to_string())?;
    let slope = table.duan_stderr_exponent;
    ensure!((slope + 0.5).abs() <= 0.1, "Duan stderr exponent {slope:.3}");
    let last = table.rows.last().unwrap();
    ensure!(
        (last.duan_mean - table.state_duan).abs() <= 2.0 * last.duan_stderr,
        "largest-N_eff mean {} vs state {}",
        last.duan_mean,
        table.state_duan
    );

    let couplings = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35];
    let tb = [(400.0, 0.5), (800.0, 0.25), (200.0, 1.0)];
    let crossings: Vec<_> = tb
        .iter()
        .enumerate()
        .map(|(i, &(t, b))| {
            let s = SweepSettings {
                master_seed: derive_stream_seed(77, i as u64),
                ..settings.clone()
            };
            locate_threshold(&params, &couplings, t, b, &s)
        })
        .collect::<cvent_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (i, a) in crossings.iter().enumerate() {
        for b in &crossings[i + 1..] {
            worst = worst.max((a.crossing - b.crossing).abs() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
        }
    }
    ensure!(worst <= 3.0, "threshold moves by {worst:.2}σ across (T, B)");
    let xs: Vec<String> = crossings.iter().map(|c| format!("{:.3}±{:.3}", c.crossing, c.stderr)).collect();
    Ok(format!(
        "stderr exponent {slope:.3}; crossings 2G/κ = {} (max pairwise {worst:.2}σ)",
        xs.join(", ")
    ))
}

fn c9_worked_example() -> Outcome {
    let kappa = kappa_from_ringdown(15e-6).map_err(|e| e.to_string())?;
    let spec = NoiseInputSpec {
        s_v0: None,
        bandwidth: 4e5,
        c_eff: 1e-12,
        omega_col: 2.0 * std::f64::consts::PI * 1e9,
        t_amb: 300.0,
        r_eff: Some(50.0),
        re_y_eff: None,
    };
    let v = v_min(&spec, kappa, VMinForm::Conservative).map_err(|e| e.to_string())?;
    let oracle = (2.0f64 * 1.380649e-23 * 300.0 * 4e5 / (1e-12 * (1.0 / 15e-6))).sqrt();
    ensure!((v / oracle - 1.0).abs() < 1e-6, "V_min {v} vs formula {oracle}");
    let ratio = 3e-4 / v;
    ensure!((1.0 / 1.5..=1.5).contains(&ratio), "rounded value off by ×{ratio:.2}");
    let n_col = collective_occupation(1e-4, 1e-12, spec.omega_col);
    ensure!((n_col / 7.5e3 - 1.0).abs() <= 0.05, "N_col = {n_col}");
    ensure!((kappa / 6.7e4 - 1.0).abs() < 0.01, "κ = {kappa}");
    ensure!(K_B == 1.380649e-23 && HBAR == 1.054571817e-34, "constants drifted");
    Ok(format!("V_min = {v:.4e} V (3e-4 is ×{ratio:.2}), N_col = {n_col:.0}, κ = {kappa:.4e} s⁻¹"))
}

fn c10_physicality() -> Outcome {
    let mut r = rng(10);
    for i in 0..1000 {
        let v = if i % 2 == 0 {
            let kappa = r.random_range(0.1..10.0);
            let g = r.random_range(0.0..0.9999) * 0.5 * kappa;
            closed_form_covariance(g, kappa, r.random_range(0.0..50.0)).map_err(|e| e.to_string())?
        } else {
            steady_state(&random_stable_params(&mut r)).map_err(|e| e.to_string())?
        };
        ensure!(check_physicality(&v), "unphysical preset state {:?}", v.matrix());
    }
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let mut m = Mat4::zeros();
        for x in m.iter_mut() {
            *x = r.random_range(-1.0..1.0);
        }
        let v_cl = m * m.transpose() * r.random_range(0.0..4.0);
        let v = enforce_classicality(&v_cl).map_err(|e| e.to_string())?;
        let nu = ppt_nu_minus(&v).map_err(|e| e.to_string())?;
        worst = worst.min(nu);
        ensure!(nu >= 0.5 - 1e-12, "classical state with ν̃₋ = {nu}");
        ensure!(duan_witness(&v) >= 2.0 - 1e-12, "classical state below the Duan bound");
    }
    Ok(format!("1000 preset states physical; 1000 classical states min ν̃₋ = {worst:.6}"))
}

fn run_cli(args: &[&str], dir: &Path, threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cvent"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env("CVENT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "cvent {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(())
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("sim.json");
    std::fs::write(
        &cfg,
        r#"{"params":{"G":0.2,"kappa_a":1.0,"kappa_b":1.0,"n_a":0.25,"n_b":0.25,
            "delta_a":0.0,"delta_b":0.0,"preset":"CLOSED_FORM"},
            "dt":0.1,"n_steps":2000,"runs":200,"master_seed":11,
            "null_models":{"correlation":0.7}}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.to_string_lossy().into_owned();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run_cli(&["simulate", "--config", &cfg], &a, "4")?;
    run_cli(&["simulate", "--config", &cfg], &b, "1")?;
    let fa = data_files(&a);
    ensure!(fa.len() == 801, "expected 800 records and a summary, got {}", fa.len());
    ensure!(fa == data_files(&b), "parallel and sequential runs differ");
    let manifest = a.join("simulate.manifest.json").to_string_lossy().into_owned();
    run_cli(&["replay", &manifest], &c, "3")?;
    ensure!(fa == data_files(&c), "manifest replay differs");

    let p = ModelParams::symmetric(0.2, 1.0, 1.0, Preset::TmsHamiltonian);
    let (drift, diff) = (build_drift(&p).unwrap(), build_diffusion(&p).unwrap());
    for scheme in [Scheme::ExactOu, Scheme::EulerMaruyama] {
        let t = TrajectoryConfig::new(0.01, 1000, scheme, 5);
        let par = sample_ensemble(&drift, &diff, &t, 200, true).map_err(|e| e.to_string())?;
        let seq = sample_ensemble(&drift, &diff, &t, 200, false).map_err(|e| e.to_string())?;
        ensure!(par == seq, "{scheme:?} ensemble depends on scheduling");
    }
    Ok("801 output files byte-identical across thread counts and manifest replay; ensembles scheduling-independent".into())
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("analytic boundary", Duration::from_secs(1), c1_analytic_boundary),
        ("closed-form state, three routes", Duration::from_secs(1), c2_three_routes),
        ("Lyapunov correctness", Duration::from_secs(10), c3_lyapunov),
        ("TMS-preset oracle", Duration::from_secs(5), c4_tms_oracle),
        ("phase diagram", Duration::from_secs(30), c5_phase_diagram),
        ("trajectory statistics", Duration::from_secs(120), c6_trajectories),
        ("null-model falsification", Duration::from_secs(300), c7_null_models),
        ("convergence", Duration::from_secs(180), c8_convergence),
        ("worked example", Duration::from_secs(1), c9_worked_example),
        ("physicality and classicality", Duration::from_secs(30), c10_physicality),
        ("determinism", Duration::from_secs(60), c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let timing = format!("{:.2}s/{}s", elapsed.as_secs_f64(), budget.as_secs());
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2} {name} [{timing}]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {:>2} {name} [{timing}]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
