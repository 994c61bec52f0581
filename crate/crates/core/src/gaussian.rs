// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Drift/diffusion construction, Lyapunov steady states and covariance evolution.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::matrix::{CovarianceMatrix, DiffusionMatrix, DriftMatrix, Mat4, STABILITY_MARGIN};
use crate::params::{ModelParams, Preset};

type Mat16 = SMatrix<f64, 16, 16>;
type Vec16 = SMatrix<f64, 16, 1>;

/// Tolerance on the eigenvalues of V + (i/2)Ω.
pub const PHYSICALITY_TOL: f64 = 1e-10;

/// Drift of the two-mode-squeezing Langevin equations in the rotating frame.
///
/// The matrix form is the same for both presets; [`stationary_dynamics`]
/// decides which drift actually drives a given preset.
pub fn build_drift(params: &ModelParams) -> Result<DriftMatrix> {
    params.validate()?;
    let (ka, kb) = (0.5 * params.kappa_a, 0.5 * params.kappa_b);
    let (da, db, g) = (params.delta_a, params.delta_b, params.g);
    DriftMatrix::new(Mat4::new(
        -ka, da, 0.0, -g, //
        -da, -ka, -g, 0.0, //
        0.0, -g, -kb, db, //
        -g, 0.0, -db, -kb,
    ))
}

/// D = diag(κ_a(2n_a+1)/2 ×2, κ_b(2n_b+1)/2 ×2).
pub fn build_diffusion(params: &ModelParams) -> Result<DiffusionMatrix> {
    params.validate()?;
    let da = params.kappa_a * (2.0 * params.n_a + 1.0) / 2.0;
    let db = params.kappa_b * (2.0 * params.n_b + 1.0) / 2.0;
    DiffusionMatrix::new(Mat4::from_diagonal(&nalgebra::Vector4::new(da, da, db, db)))
}

/// Hurwitz test with the default margin.
pub fn is_stable(drift: &DriftMatrix) -> bool {
    drift.is_hurwitz()
}

/// Hurwitz test with an explicit margin: every Re λ < −`margin`.
pub fn is_stable_with_margin(drift: &DriftMatrix, margin: f64) -> bool {
    if margin == STABILITY_MARGIN {
        return drift.is_hurwitz();
    }
    drift.max_real_eigenvalue() < -margin
}

fn kron_lyapunov_operator(a: &Mat4) -> Mat16 {
    let mut k = Mat16::zeros();
    for j in 0..4 {
        for i in 0..4 {
            let row = i + 4 * j;
            for l in 0..4 {
                for kk in 0..4 {
                    let col = kk + 4 * l;
                    let mut v = 0.0;
                    if j == l {
                        v += a[(i, kk)];
                    }
                    if i == kk {
                        v += a[(j, l)];
                    }
                    k[(row, col)] = v;
                }
            }
        }
    }
    k
}

fn vec_col(m: &Mat4) -> Vec16 {
    Vec16::from_column_slice(m.as_slice())
}

fn unvec_col(v: &Vec16) -> Mat4 {
    Mat4::from_column_slice(v.as_slice())
}

/// ‖AV + VAᵀ + D‖_max.
pub fn lyapunov_residual(drift: &DriftMatrix, diffusion: &DiffusionMatrix, v: &CovarianceMatrix) -> f64 {
    let a = drift.matrix();
    let vm = v.matrix();
    (a * vm + vm * a.transpose() + diffusion.matrix()).amax()
}

/// Unique solution of AV + VAᵀ + D = 0 for Hurwitz A.
///
/// Solved as the dense 16×16 system (I⊗A + A⊗I)·vec(V) = −vec(D) with one
/// step of iterative refinement.
pub fn solve_steady_lyapunov(
    drift: &DriftMatrix,
    diffusion: &DiffusionMatrix,
) -> Result<CovarianceMatrix> {
    if !drift.is_hurwitz() {
        return Err(Error::UnstableDrift {
            max_real: drift.max_real_eigenvalue(),
        });
    }
    let k = kron_lyapunov_operator(drift.matrix());
    let rhs = -vec_col(diffusion.matrix());
    let lu = k.lu();
    let u = lu.u();
    let diag_max = u.diagonal().amax();
    let diag_min = u.diagonal().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if diag_max == 0.0 || diag_min <= 1e-14 * diag_max {
        return Err(Error::SingularSolve);
    }
    let mut x = lu.solve(&rhs).ok_or(Error::SingularSolve)?;
    let r = rhs - k * x;
    x += lu.solve(&r).ok_or(Error::SingularSolve)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSolve);
    }
    Ok(CovarianceMatrix::from_symmetrized(unvec_col(&x)))
}

/// V(t) under V̇ = AV + VAᵀ + D.
///
/// Stable drifts use V(t) = e^{At}(V₀ − V∞)e^{Aᵀt} + V∞; otherwise fixed-step
/// RK4 with dt = 10⁻³ / max|λ(A)|.
pub fn evolve_covariance(
    v0: &CovarianceMatrix,
    drift: &DriftMatrix,
    diffusion: &DiffusionMatrix,
    t: f64,
) -> Result<CovarianceMatrix> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(v0.clone());
    }
    let a = drift.matrix();
    if drift.is_hurwitz() {
        let v_inf = solve_steady_lyapunov(drift, diffusion)?;
        let e = (a * t).exp();
        let dv = v0.matrix() - v_inf.matrix();
        return Ok(CovarianceMatrix::from_symmetrized(
            e * dv * e.transpose() + v_inf.matrix(),
        ));
    }
    let d = diffusion.matrix();
    let rho = drift.spectral_radius();
    if rho == 0.0 {
        // Nilpotent or zero drift; RK4 has no natural step. A = 0 is exact here.
        if a.amax() == 0.0 {
            return Ok(CovarianceMatrix::from_symmetrized(v0.matrix() + d * t));
        }
    }
    let nominal = if rho > 0.0 { 1e-3 / rho } else { 1e-3 * t };
    let steps = (t / nominal).ceil().max(1.0) as u64;
    let h = t / steps as f64;
    let f = |v: &Mat4| a * v + v * a.transpose() + d;
    let mut v = *v0.matrix();
    for _ in 0..steps {
        let k1 = f(&v);
        let k2 = f(&(v + k1 * (h / 2.0)));
        let k3 = f(&(v + k2 * (h / 2.0)));
        let k4 = f(&(v + k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(CovarianceMatrix::from_symmetrized(v))
}

/// Two-mode squeezed thermal covariance with blocks A = B = a·I₂, C = diag(c, −c),
/// a = (2n+1)/2·(κ²+4G²)/(κ²−4G²), c = (2n+1)/2·4κG/(κ²−4G²).
pub fn closed_form_covariance(g: f64, kappa: f64, n: f64) -> Result<CovarianceMatrix> {
    if !(g.is_finite() && kappa.is_finite() && n.is_finite()) || g < 0.0 || kappa <= 0.0 || n < 0.0
    {
        return Err(Error::Domain(format!(
            "closed form needs G ≥ 0, κ > 0, n ≥ 0 (got G={g}, κ={kappa}, n={n})"
        )));
    }
    if 2.0 * g >= kappa {
        return Err(Error::UnstableDrift {
            max_real: g - kappa / 2.0,
        });
    }
    let s = (2.0 * n + 1.0) / 2.0;
    let den = kappa * kappa - 4.0 * g * g;
    let a = s * (kappa * kappa + 4.0 * g * g) / den;
    let c = s * 4.0 * kappa * g / den;
    Ok(CovarianceMatrix::from_symmetrized(Mat4::new(
        a, 0.0, c, 0.0, //
        0.0, a, 0.0, -c, //
        c, 0.0, a, 0.0, //
        0.0, -c, 0.0, a,
    )))
}

/// True iff every eigenvalue of V + (i/2)Ω is ≥ −1e−10.
pub fn check_physicality(v: &CovarianceMatrix) -> bool {
    v.heisenberg_spectrum()[0] >= -PHYSICALITY_TOL
}

/// D = −(A·V + V·Aᵀ), symmetrized, and whether it is positive semidefinite.
pub fn infer_diffusion(drift: &DriftMatrix, target: &CovarianceMatrix) -> (DiffusionMatrix, bool) {
    let a = drift.matrix();
    let v = target.matrix();
    let d = DiffusionMatrix::from_symmetrized(-(a * v + v * a.transpose()));
    let psd = d.is_psd();
    (d, psd)
}

/// A drift/diffusion pair together with the stationary covariance it produces.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub drift: DriftMatrix,
    pub diffusion: DiffusionMatrix,
    pub steady: CovarianceMatrix,
}

/// Steady-state covariance of a parameter set under its preset.
pub fn steady_state(params: &ModelParams) -> Result<CovarianceMatrix> {
    Ok(stationary_dynamics(params)?.steady)
}

/// Langevin dynamics whose stationary state is the preset's steady state.
///
/// `TmsHamiltonian` uses [`build_drift`]/[`build_diffusion`] directly.
/// `ClosedForm` has no drift that is both the two-mode-squeezing form and
/// reproduces the closed-form state, so it is driven by pure local damping
/// A = −(κ/2)·I₄ with D = κ·V, which keeps every quadrature an OU process
/// with decay rate κ/2.
pub fn stationary_dynamics(params: &ModelParams) -> Result<Dynamics> {
    params.validate()?;
    match params.preset {
        Preset::TmsHamiltonian => {
            let drift = build_drift(params)?;
            let diffusion = build_diffusion(params)?;
            let steady = solve_steady_lyapunov(&drift, &diffusion)?;
            Ok(Dynamics {
                drift,
                diffusion,
                steady,
            })
        }
        Preset::ClosedForm => {
            let kappa = params.kappa_a;
            let steady = closed_form_covariance(params.g, kappa, params.n_a)?;
            let drift = DriftMatrix::new(Mat4::identity() * (-0.5 * kappa))?;
            let diffusion = DiffusionMatrix::from_symmetrized(steady.matrix() * kappa);
            Ok(Dynamics {
                drift,
                diffusion,
                steady,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tms(g: f64, kappa: f64, n: f64) -> ModelParams {
        ModelParams::symmetric(g, kappa, n, Preset::TmsHamiltonian)
    }

    #[test]
    fn decoupled_drift_is_half_damping() {
        let a = build_drift(&tms(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(*a.matrix(), Mat4::identity() * -0.5);
    }

    #[test]
    fn drift_spectrum_is_minus_half_kappa_plus_minus_g() {
        let a = build_drift(&tms(0.25, 1.0, 0.0)).unwrap();
        let mut ev: Vec<f64> = a.matrix().complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([-0.75, -0.75, -0.25, -0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        for z in a.matrix().complex_eigenvalues().iter() {
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detuning_block() {
        let p = ModelParams {
            delta_a: 0.3,
            ..tms(0.0, 1.0, 0.0)
        };
        let a = build_drift(&p).unwrap();
        let m = a.matrix();
        assert_eq!([m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]], [-0.5, 0.3, -0.3, -0.5]);
    }

    #[test]
    fn drift_rejects_non_finite() {
        assert!(build_drift(&tms(f64::INFINITY, 1.0, 0.0)).is_err());
    }

    #[test]
    fn diffusion_forms() {
        let d = build_diffusion(&tms(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(*d.matrix(), Mat4::identity() * 0.5);
        let p = ModelParams {
            kappa_a: 2.0,
            n_a: 1.0,
            ..tms(0.0, 1.0, 0.0)
        };
        let d = build_diffusion(&p).unwrap();
        assert_eq!(d.matrix().diagonal().as_slice(), &[3.0, 3.0, 0.5, 0.5]);
        let d = build_diffusion(&tms(0.1, 2.0, 3.0)).unwrap();
        assert_eq!(*d.matrix(), Mat4::identity() * 7.0);
        assert!(d.is_psd());
    }

    #[test]
    fn stability_boundary() {
        assert!(is_stable(&build_drift(&tms(0.25, 1.0, 0.0)).unwrap()));
        assert!(!is_stable(&build_drift(&tms(0.5, 1.0, 0.0)).unwrap()));
        assert!(!is_stable(&build_drift(&tms(0.49999999999, 1.0, 0.0)).unwrap()));
        assert!(!is_stable(&build_drift(&tms(0.8, 1.0, 0.0)).unwrap()));
        let a = build_drift(&tms(0.49, 1.0, 0.0)).unwrap();
        assert!(is_stable_with_margin(&a, 1e-3));
        assert!(!is_stable_with_margin(&a, 0.02));
    }

    #[test]
    fn thermal_steady_states() {
        for (n, want) in [(0.0, 0.5), (2.0, 2.5)] {
            let p = tms(0.0, 1.0, n);
            let v = solve_steady_lyapunov(&build_drift(&p).unwrap(), &build_diffusion(&p).unwrap())
                .unwrap();
            assert_abs_diff_eq!(*v.matrix(), Mat4::identity() * want, epsilon = 1e-14);
        }
    }

    #[test]
    fn lyapunov_errors() {
        let p = tms(0.6, 1.0, 0.0);
        let a = build_drift(&p).unwrap();
        let d = build_diffusion(&p).unwrap();
        assert!(matches!(
            solve_steady_lyapunov(&a, &d),
            Err(Error::UnstableDrift { .. })
        ));
    }

    #[test]
    fn tms_steady_state_pairs_xa_with_pb() {
        // Oracle: u = (X_a + P_b)/√2 and v = (X_a − P_b)/√2 are independent OU
        // coordinates with rates κ/2 ± G, so Var u = κ(2n+1)/(2(κ+2G)) and
        // Var v = κ(2n+1)/(2(κ−2G)).
        let (g, k, n) = (0.25, 1.0, 0.0);
        let v = steady_state(&tms(g, k, n)).unwrap();
        let vu = k * (2.0 * n + 1.0) / (2.0 * (k + 2.0 * g));
        let vv = k * (2.0 * n + 1.0) / (2.0 * (k - 2.0 * g));
        assert_abs_diff_eq!(v.get(0, 0), (vu + vv) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.get(0, 3), (vu - vv) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.get(1, 2), (vu - vv) / 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.get(0, 2), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn evolve_identity_and_fixed_point() {
        let p = tms(0.2, 1.0, 0.5);
        let a = build_drift(&p).unwrap();
        let d = build_diffusion(&p).unwrap();
        let v0 = CovarianceMatrix::identity_scaled(3.0);
        assert_eq!(evolve_covariance(&v0, &a, &d, 0.0).unwrap(), v0);
        assert!(matches!(
            evolve_covariance(&v0, &a, &d, -1.0),
            Err(Error::NegativeTime(_))
        ));
        let vinf = solve_steady_lyapunov(&a, &d).unwrap();
        for t in [0.1, 1.0, 37.0] {
            let vt = evolve_covariance(&vinf, &a, &d, t).unwrap();
            assert_abs_diff_eq!(*vt.matrix(), *vinf.matrix(), epsilon = 1e-13);
        }
        let late = evolve_covariance(&v0, &a, &d, 1e3).unwrap();
        assert_abs_diff_eq!(*late.matrix(), *vinf.matrix(), epsilon = 1e-8);
    }

    #[test]
    fn rk4_path_matches_exact_on_stable_drift() {
        // Force the RK4 branch via a marginal drift and compare with the
        // closed form V(t) = V₀ + D t for A = 0.
        let a = DriftMatrix::new(Mat4::zeros()).unwrap();
        let d = DiffusionMatrix::new(Mat4::identity() * 0.7).unwrap();
        let v0 = CovarianceMatrix::vacuum();
        let vt = evolve_covariance(&v0, &a, &d, 2.0).unwrap();
        assert_abs_diff_eq!(*vt.matrix(), Mat4::identity() * 1.9, epsilon = 1e-14);

        // Unstable drift: scalar mode with rate +λ has V(t) = e^{2λt}(V₀ + D/2λ) − D/2λ.
        let lam = 0.3;
        let a = DriftMatrix::new(Mat4::identity() * lam).unwrap();
        let vt = evolve_covariance(&v0, &a, &d, 1.5).unwrap();
        let q = 0.7 / (2.0 * lam);
        let want = (2.0 * lam * 1.5_f64).exp() * (0.5 + q) - q;
        assert_abs_diff_eq!(vt.get(0, 0), want, epsilon = 1e-10 * want);
    }

    #[test]
    fn closed_form_values() {
        let v = closed_form_covariance(0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(*v.matrix(), Mat4::identity() * 1.5, epsilon = 1e-15);
        let v = closed_form_covariance(0.25, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(v.get(0, 0), 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.get(0, 2), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.get(1, 3), -2.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(
            closed_form_covariance(0.5, 1.0, 0.0),
            Err(Error::UnstableDrift { .. })
        ));
    }

    #[test]
    fn closed_form_determinant_is_thermal() {
        for &(g, k, n) in &[(0.1, 1.0, 0.0), (0.3, 1.0, 2.0), (0.49, 1.0, 0.7), (1.0, 3.0, 5.0)] {
            let v = closed_form_covariance(g, k, n).unwrap();
            let s: f64 = (2.0 * n + 1.0) / 2.0;
            assert_abs_diff_eq!(v.determinant(), s.powi(4), epsilon = 1e-9 * s.powi(4).max(1.0));
        }
    }

    #[test]
    fn physicality_examples() {
        assert!(check_physicality(&CovarianceMatrix::vacuum()));
        assert!(!check_physicality(&CovarianceMatrix::identity_scaled(0.4)));
    }

    #[test]
    fn infer_diffusion_examples() {
        let a = DriftMatrix::new(Mat4::identity() * -0.5).unwrap();
        let (d, psd) = infer_diffusion(&a, &CovarianceMatrix::vacuum());
        assert_eq!(*d.matrix(), Mat4::identity() * 0.5);
        assert!(psd);

        let p = tms(0.3, 1.2, 0.4);
        let a = build_drift(&p).unwrap();
        let d0 = build_diffusion(&p).unwrap();
        let v = solve_steady_lyapunov(&a, &d0).unwrap();
        let (d, psd) = infer_diffusion(&a, &v);
        assert!(psd);
        assert_abs_diff_eq!(*d.matrix(), *d0.matrix(), epsilon = 1e-10);
    }

    #[test]
    fn closed_form_state_from_tms_drift_needs_correlated_noise() {
        // Regression artifact: the two-mode-squeezing drift reaches the
        // closed-form state only with a non-diagonal diffusion matrix.
        let a = build_drift(&tms(0.25, 1.0, 0.0)).unwrap();
        let v = closed_form_covariance(0.25, 1.0, 0.0).unwrap();
        let (d, psd) = infer_diffusion(&a, &v);
        assert!(psd);
        assert_abs_diff_eq!(d.get(0, 2), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.get(0, 3), 5.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.min_eigenvalue(), 0.047168, epsilon = 1e-6);
    }

    #[test]
    fn closed_form_dynamics_reproduce_state() {
        let p = ModelParams::symmetric(0.3, 1.0, 0.5, Preset::ClosedForm);
        let dynm = stationary_dynamics(&p).unwrap();
        assert!(dynm.diffusion.is_psd());
        let v = solve_steady_lyapunov(&dynm.drift, &dynm.diffusion).unwrap();
        assert_abs_diff_eq!(*v.matrix(), *dynm.steady.matrix(), epsilon = 1e-12);
    }
}
