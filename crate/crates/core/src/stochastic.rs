//! Stochastic verification of the perturbative excitation prediction.
//!
//! Each realization drives the exact auxiliary dynamics
//!
//! ```text
//! rho'' + w^2(t) rho = w0^2 / rho^3,
//! qc''  + w^2(t) qc  = w^2(t) q0(t),      w^2(t) = w0^2 [1 + lambda xi(t)],
//! ```
//!
//! with a classical fourth-order Runge-Kutta step locked to the noise grid
//! (xi linearly interpolated between nodes), evaluates the exact final
//! energy, and the ensemble average is compared against lambda^2 (G1 + G2).
//!
//! Realizations are embarrassingly parallel; results are reduced in
//! realization order with pairwise summation, so a report depends only on
//! the inputs and the master seed, never on scheduling.

use crate::error::{Error, Result};
use crate::noise::{realization_seed, NoiseModel, NoisePath};
use crate::sensitivity::{g1_quadrature, g2_quadrature};
use crate::system::{final_energy, AuxiliaryState, PhysicalSystem};
use crate::trajectory::Trajectory;
use rayon::prelude::*;

/// First-order response of the auxiliary functions at the final time,
/// evaluated from the convolution integrals on the noise grid (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderTerms {
    /// rho^(1)(T), dimensionless.
    pub rho1: f64,
    /// d rho^(1)/dt at T, 1/s.
    pub rho1_dot: f64,
    /// q_c^(1)(T), m.
    pub qc1: f64,
    /// d q_c^(1)/dt at T, m/s.
    pub qc1_dot: f64,
}

/// Ensemble summary of a Monte-Carlo verification run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MonteCarloReport {
    /// Requested ensemble size.
    pub n_realizations: usize,
    /// Realizations excluded after an integration failure (never retried).
    pub n_failed: usize,
    pub lambda: f64,
    /// Ensemble mean of E - hbar w0 (n + 1/2), J.
    pub mean_excitation: f64,
    /// Standard error of the mean, J.
    pub std_error: f64,
    /// Perturbative prediction lambda^2 (G1 + G2) by quadrature, J.
    pub predicted: f64,
    /// mean_excitation / predicted; absent when the prediction vanishes.
    pub ratio: Option<f64>,
    pub master_seed: u64,
}

/// One successful realization (for optional per-realization dumps).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Realization {
    pub index: u64,
    pub seed: u64,
    /// E - hbar w0 (n + 1/2), J.
    pub excitation: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MonteCarloOptions {
    /// Override the noise-grid/integration step (seconds). Defaults to
    /// min(tau_eff / 20, T0 / 100).
    pub time_step: Option<f64>,
    /// Keep per-realization excitations for export.
    pub collect_realizations: bool,
}

/// Default integration/noise step: min(tau_eff/20, T0/100), with tau_eff the
/// OU correlation time or the flicker lower cutoff.
pub fn default_time_step(model: &NoiseModel, sys: &PhysicalSystem) -> Result<f64> {
    model.validate()?;
    let tau_eff = match *model {
        NoiseModel::OrnsteinUhlenbeck { tau } => tau,
        NoiseModel::Flicker { tau1, .. } => tau1,
    };
    Ok((tau_eff / 20.0).min(sys.period() / 100.0))
}

/// Sample a dimensionless spring-constant noise path for `sys` on an SI time
/// grid. The correlation time inside the stationary variance is measured in
/// 1/omega0 (variance 1/(2 w0 tau)), matching the sensitivity normalization,
/// so `lambda * xi` stays of order lambda.
pub fn sample_path_for(
    model: &NoiseModel,
    t_final: f64,
    dt: f64,
    seed: u64,
    sys: &PhysicalSystem,
) -> Result<NoisePath> {
    let w = sys.omega0;
    let mut path = scale_model(model, w).sample_path(w * t_final, w * dt, seed)?;
    path.dt /= w;
    path.tau_drawn /= w;
    Ok(path)
}

fn scale_model(model: &NoiseModel, omega0: f64) -> NoiseModel {
    match *model {
        NoiseModel::OrnsteinUhlenbeck { tau } => {
            NoiseModel::OrnsteinUhlenbeck { tau: omega0 * tau }
        }
        NoiseModel::Flicker { tau1, tau2 } => {
            NoiseModel::Flicker { tau1: omega0 * tau1, tau2: omega0 * tau2 }
        }
    }
}

/// Integrate the noisy auxiliary equations across a sampled path and return
/// the state at the trajectory's final time.
///
/// The fixed step equals the path's grid step; the path must span the full
/// trajectory duration.
pub fn integrate_auxiliary(
    traj: &Trajectory,
    path: &NoisePath,
    lambda: f64,
    sys: &PhysicalSystem,
) -> Result<AuxiliaryState> {
    check_lambda_finite(lambda)?;
    let t_final = traj.duration();
    if path.duration() < t_final * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "noise path spans {:e} s but the trajectory lasts {:e} s",
            path.duration(),
            t_final
        )));
    }
    let steps = (t_final / path.dt).round() as usize;
    if steps == 0 || ((steps as f64 * path.dt - t_final) / t_final).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "noise grid (dt = {:e} s) does not land on the trajectory duration {:e} s",
            path.dt, t_final
        )));
    }
    let dt_osc = sys.omega0 * path.dt;
    let samples = &path.samples[..];
    let xi = move |t_osc: f64| {
        // linear interpolation on the grid, t_osc = k dt_osc + frac
        let pos = t_osc / dt_osc;
        if pos <= 0.0 {
            return samples[0];
        }
        let last = samples.len() - 1;
        if pos >= last as f64 {
            return samples[last];
        }
        let k = pos as usize;
        let frac = pos - k as f64;
        samples[k] * (1.0 - frac) + samples[k + 1] * frac
    };
    integrate_scaled(traj, &xi, steps, dt_osc, lambda, sys)
}

/// Integrate with an analytic forcing xi(t) (SI time, dimensionless value)
/// instead of a sampled path; the step is rounded down so the grid lands on
/// the final time exactly.
pub fn integrate_with_forcing<F: Fn(f64) -> f64>(
    traj: &Trajectory,
    xi: F,
    dt: f64,
    lambda: f64,
    sys: &PhysicalSystem,
) -> Result<AuxiliaryState> {
    check_lambda_finite(lambda)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", format!("must be positive, got {dt:e}")));
    }
    let t_final = traj.duration();
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt_osc = sys.omega0 * t_final / steps as f64;
    let omega0 = sys.omega0;
    let xi_osc = move |t_osc: f64| xi(t_osc / omega0);
    integrate_scaled(traj, &xi_osc, steps, dt_osc, lambda, sys)
}

/// RK4 in oscillator units over `steps` uniform steps of `dt_osc`.
fn integrate_scaled<F: Fn(f64) -> f64>(
    traj: &Trajectory,
    xi_osc: &F,
    steps: usize,
    dt_osc: f64,
    lambda: f64,
    sys: &PhysicalSystem,
) -> Result<AuxiliaryState> {
    let omega0 = sys.omega0;
    let units = sys.oscillator_units();
    let inv_a0 = 1.0 / units.length_scale;
    let inv_w2 = 1.0 / (omega0 * omega0);
    // trap center in units of a0, evaluated at oscillator time
    let trap = move |t_osc: f64| {
        let t = t_osc / omega0;
        (traj.eval_unchecked(t, 0) + traj.eval_unchecked(t, 2) * inv_w2) * inv_a0
    };

    // state: [rho, rho', q, q']
    let deriv = |y: &[f64; 4], w2: f64, q0: f64| -> [f64; 4] {
        let rho = y[0];
        [
            y[1],
            1.0 / (rho * rho * rho) - w2 * rho,
            y[3],
            w2 * (q0 - y[2]),
        ]
    };

    let mut y = [1.0f64, 0.0, 0.0, 0.0];
    let h = dt_osc;
    for k in 0..steps {
        let t = k as f64 * h;
        let (xi_a, xi_m, xi_b) = (xi_osc(t), xi_osc(t + 0.5 * h), xi_osc(t + h));
        let (q0_a, q0_m, q0_b) = (trap(t), trap(t + 0.5 * h), trap(t + h));
        let (w2_a, w2_m, w2_b) = (
            1.0 + lambda * xi_a,
            1.0 + lambda * xi_m,
            1.0 + lambda * xi_b,
        );

        let k1 = deriv(&y, w2_a, q0_a);
        let y2 = add_scaled(&y, &k1, 0.5 * h);
        let k2 = deriv(&y2, w2_m, q0_m);
        let y3 = add_scaled(&y, &k2, 0.5 * h);
        let k3 = deriv(&y3, w2_m, q0_m);
        let y4 = add_scaled(&y, &k3, h);
        let k4 = deriv(&y4, w2_b, q0_b);

        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t_si = (t + h) / omega0;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t: t_si });
        }
        if y[0] <= 0.0 {
            return Err(Error::Singular { rho: y[0], t: t_si });
        }
    }

    Ok(AuxiliaryState {
        rho: y[0],
        rho_dot: y[1] * omega0,
        qc: y[2] * units.length_scale,
        qc_dot: y[3] * units.length_scale * omega0,
    })
}

fn add_scaled(y: &[f64; 4], k: &[f64; 4], factor: f64) -> [f64; 4] {
    [
        y[0] + factor * k[0],
        y[1] + factor * k[1],
        y[2] + factor * k[2],
        y[3] + factor * k[3],
    ]
}

fn check_lambda_finite(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// First-order response integrals at the final time,
///
/// ```text
/// rho^(1)(T) = -(w0/2) int_0^T xi(s) sin[2 w0 (T - s)] ds,
/// qc^(1)(T)  = (1/w0)  int_0^T xi(s) sin[w0 (T - s)] qc''(s) ds,
/// ```
///
/// and their time derivatives, by per-cell Simpson on the noise grid with xi
/// interpolated linearly — the same forcing the integrator sees, so the two
/// agree to the kernel's smooth discretization error.
pub fn first_order_terms(
    traj: &Trajectory,
    path: &NoisePath,
    sys: &PhysicalSystem,
) -> Result<FirstOrderTerms> {
    let t_final = traj.duration();
    if path.duration() < t_final * (1.0 - 1e-9) {
        return Err(Error::Domain(
            "noise path shorter than the trajectory duration".to_string(),
        ));
    }
    let steps = (t_final / path.dt).round() as usize;
    let dt_osc = sys.omega0 * path.dt;
    let tt = steps as f64 * dt_osc;
    let omega0 = sys.omega0;
    let units = sys.oscillator_units();
    let accel_scale = 1.0 / (units.length_scale * omega0 * omega0);

    // integrand vector [xi sin2, xi cos2, xi accel sin1, xi accel cos1]
    let kernels = |s: f64, xi: f64| -> [f64; 4] {
        let accel = traj.eval_unchecked(s / omega0, 2) * accel_scale;
        let (sin2, cos2) = (2.0 * (tt - s)).sin_cos();
        let (sin1, cos1) = (tt - s).sin_cos();
        [xi * sin2, xi * cos2, xi * accel * sin1, xi * accel * cos1]
    };

    let mut acc = [0.0f64; 4];
    for k in 0..steps {
        let s0 = k as f64 * dt_osc;
        let s1 = s0 + dt_osc;
        let xi0 = path.samples[k];
        let xi1 = path.samples[k + 1];
        let lo = kernels(s0, xi0);
        let mid = kernels(0.5 * (s0 + s1), 0.5 * (xi0 + xi1));
        let hi = kernels(s1, xi1);
        for i in 0..4 {
            acc[i] += dt_osc / 6.0 * (lo[i] + 4.0 * mid[i] + hi[i]);
        }
    }

    Ok(FirstOrderTerms {
        rho1: -0.5 * acc[0],
        rho1_dot: -acc[1] * omega0,
        qc1: acc[2] * units.length_scale,
        qc1_dot: acc[3] * units.length_scale * omega0,
    })
}

/// Run `n_realizations` independent noisy transports and compare the mean
/// excitation with the quadrature prediction lambda^2 (G1 + G2).
pub fn run_monte_carlo(
    traj: &Trajectory,
    model: &NoiseModel,
    lambda: f64,
    n_realizations: usize,
    master_seed: u64,
    sys: &PhysicalSystem,
) -> Result<MonteCarloReport> {
    run_monte_carlo_with(
        traj,
        model,
        lambda,
        n_realizations,
        master_seed,
        sys,
        MonteCarloOptions::default(),
    )
    .map(|(report, _)| report)
}

pub fn run_monte_carlo_with(
    traj: &Trajectory,
    model: &NoiseModel,
    lambda: f64,
    n_realizations: usize,
    master_seed: u64,
    sys: &PhysicalSystem,
    opts: MonteCarloOptions,
) -> Result<(MonteCarloReport, Vec<Realization>)> {
    model.validate()?;
    check_lambda_finite(lambda)?;
    if lambda > 0.05 {
        return Err(Error::invalid(
            "lambda",
            format!("perturbative regime requires lambda <= 0.05, got {lambda}"),
        ));
    }
    if n_realizations < 100 {
        return Err(Error::invalid(
            "n_realizations",
            format!("need at least 100 realizations, got {n_realizations}"),
        ));
    }
    let t0 = sys.period();
    let tau_floor = 1e-3 * t0;
    let tau_min = match *model {
        NoiseModel::OrnsteinUhlenbeck { tau } => tau,
        NoiseModel::Flicker { tau1, .. } => tau1,
    };
    if tau_min < tau_floor {
        return Err(Error::invalid(
            "tau",
            format!("correlation times below 1e-3 T0 = {tau_floor:e} s are not supported, got {tau_min:e}"),
        ));
    }

    let t_final = traj.duration();
    let dt = match opts.time_step {
        Some(dt) => dt,
        None => default_time_step(model, sys)?,
    };
    if dt > t0 / 100.0 {
        return Err(Error::Resolution {
            dt,
            limit: t0 / 100.0,
            constraint: "dt must not exceed T0/100 to resolve the trap oscillation",
        });
    }

    let scaled = scale_model(model, sys.omega0);
    let tt = sys.omega0 * t_final;
    let dt_osc_request = sys.omega0 * dt;

    let outcomes: Vec<(u64, std::result::Result<f64, Error>)> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|k| {
            let seed = realization_seed(master_seed, k);
            let result = scaled.sample_path(tt, dt_osc_request, seed).and_then(|path| {
                let steps = path.samples.len() - 1;
                let xi = |t_osc: f64| path.value_at(t_osc);
                integrate_scaled(traj, &xi, steps, path.dt, lambda, sys)
                    .and_then(|state| final_energy(&state, sys))
                    .map(|e| e - sys.mode_energy())
            });
            (seed, result)
        })
        .collect();

    let mut excitations = Vec::with_capacity(n_realizations);
    let mut collected = Vec::new();
    let mut n_failed = 0usize;
    let mut first_failure: Option<String> = None;
    for (k, (seed, outcome)) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(e) => {
                excitations.push(e);
                if opts.collect_realizations {
                    collected.push(Realization { index: k as u64, seed, excitation: e });
                }
            }
            Err(err) => {
                n_failed += 1;
                if first_failure.is_none() {
                    first_failure = Some(err.to_string());
                }
            }
        }
    }
    if n_failed * 100 > n_realizations {
        return Err(Error::TooManyFailures {
            failed: n_failed,
            total: n_realizations,
            first: first_failure.unwrap_or_default(),
        });
    }
    let n_used = excitations.len();
    if n_used < 2 {
        return Err(Error::invalid("n_realizations", "fewer than 2 usable realizations".to_string()));
    }

    let mean = pairwise_sum(&excitations) / n_used as f64;
    let squares: Vec<f64> = excitations.iter().map(|e| (e - mean) * (e - mean)).collect();
    let variance = pairwise_sum(&squares) / (n_used - 1) as f64;
    let std_error = (variance / n_used as f64).sqrt();

    let g1 = g1_quadrature(model, t_final, sys.mode, sys.omega0)?;
    let g2 = g2_quadrature(model, traj, sys)?;
    let predicted = lambda * lambda * (g1 + g2);
    let ratio = if predicted > 0.0 { Some(mean / predicted) } else { None };

    Ok((
        MonteCarloReport {
            n_realizations,
            n_failed,
            lambda,
            mean_excitation: mean,
            std_error,
            predicted,
            ratio,
            master_seed,
        },
        collected,
    ))
}

fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
