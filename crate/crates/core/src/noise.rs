//! Spring-constant noise models: correlation functions, power spectra, and
//! deterministic seeded path sampling.
//!
//! The flicker model is a uniform mixture of Ornstein-Uhlenbeck processes
//! over correlation times [tau1, tau2]; its correlation function is the
//! corresponding average of OU exponentials, and sampling draws one tau per
//! realization so the mixture is reproduced in ensemble.
//!
//! All routines are unit-agnostic: feed times in seconds and the correlation
//! carries 1/s, feed them in units of 1/omega0 and everything comes out
//! dimensionless. The sensitivity and Monte-Carlo layers use the latter.

use crate::error::{Error, Result};
use crate::special::expint_ei;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stationary noise model for the relative spring-constant fluctuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Exponentially correlated noise with correlation time `tau`.
    OrnsteinUhlenbeck { tau: f64 },
    /// 1/f-type noise: uniform average of OU processes over [tau1, tau2].
    Flicker { tau1: f64, tau2: f64 },
}

/// Relative width below which the flicker pair (tau1, tau2) is treated as
/// degenerate and the tau-average is evaluated by direct quadrature; the
/// Ei difference loses too many digits to cancellation there.
const DEGENERATE_FLICKER_WIDTH: f64 = 1e-4;

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::OrnsteinUhlenbeck { tau } => {
                if !(tau > 0.0) || !tau.is_finite() {
                    return Err(Error::invalid("tau", format!("must be positive, got {tau:e}")));
                }
            }
            NoiseModel::Flicker { tau1, tau2 } => {
                if !(tau1 > 0.0) || !tau1.is_finite() {
                    return Err(Error::invalid("tau1", format!("must be positive, got {tau1:e}")));
                }
                if !(tau2 > tau1) || !tau2.is_finite() {
                    return Err(Error::invalid(
                        "tau2",
                        format!("must exceed tau1 = {tau1:e}, got {tau2:e}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Correlation function alpha(t) for t >= 0, in inverse time units.
    ///
    /// OU: e^(-t/tau) / (2 tau). Flicker:
    /// [Ei(-t/tau1) - Ei(-t/tau2)] / (2 (tau2 - tau1)), with the exact value
    /// ln(tau2/tau1) / (2 (tau2 - tau1)) at t = 0.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "alpha is defined for t >= 0 (use |t - s| for a stationary pair), got {t:e}"
            )));
        }
        Ok(self.alpha_unchecked(t))
    }

    /// `alpha` without the validation, for quadrature hot loops that already
    /// checked the model and keep t >= 0 by construction.
    pub(crate) fn alpha_unchecked(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::OrnsteinUhlenbeck { tau } => (-t / tau).exp() / (2.0 * tau),
            NoiseModel::Flicker { tau1, tau2 } => flicker_alpha(t, tau1, tau2),
        }
    }

    /// Noise spectral density S(Omega) = (1/pi) int_0^inf alpha(t) cos(Omega t) dt
    /// (dimensionless).
    pub fn spectrum(&self, omega: f64) -> Result<f64> {
        self.validate()?;
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("spectrum needs Omega >= 0, got {omega:e}")));
        }
        Ok(match *self {
            NoiseModel::OrnsteinUhlenbeck { tau } => {
                let x = tau * omega;
                1.0 / (2.0 * std::f64::consts::PI * (1.0 + x * x))
            }
            NoiseModel::Flicker { tau1, tau2 } => {
                if omega == 0.0 {
                    // analytic Omega -> 0 limit of the acot difference
                    return Ok(1.0 / (2.0 * std::f64::consts::PI));
                }
                // acot(tau1 w) - acot(tau2 w) = atan((tau2-tau1) w / (1 + tau1 tau2 w^2)),
                // stable down to Omega -> 0
                let num = (tau2 - tau1) * omega;
                let atan = (num / (1.0 + tau1 * tau2 * omega * omega)).atan();
                atan / (2.0 * std::f64::consts::PI * num)
            }
        })
    }

    /// Draw one noise path on a uniform grid spanning [0, t_final].
    ///
    /// The OU recursion uses the exact discrete transition
    /// xi_{k+1} = xi_k e^(-dt/tau) + sqrt((1 - e^(-2 dt/tau)) / (2 tau)) N(0,1)
    /// started from the stationary law xi_0 ~ N(0, 1/(2 tau)), so the grid
    /// covariance matches alpha exactly. Flicker first draws
    /// tau ~ U[tau1, tau2] from the same stream.
    ///
    /// The requested `dt` is rounded down so the grid lands exactly on
    /// `t_final`; the effective step is stored in the returned path.
    pub fn sample_path(&self, t_final: f64, dt: f64, seed: u64) -> Result<NoisePath> {
        self.validate()?;
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::invalid("t_final", format!("must be positive, got {t_final:e}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt:e}")));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = match *self {
            NoiseModel::OrnsteinUhlenbeck { tau } => tau,
            NoiseModel::Flicker { tau1, tau2 } => rng.random_range(tau1..=tau2),
        };

        let limit = tau / 20.0;
        if dt > limit {
            return Err(Error::Resolution {
                dt,
                limit,
                constraint: "dt must not exceed tau_eff / 20 to resolve the correlation decay",
            });
        }
        let steps_f = (t_final / dt).ceil();
        if steps_f > 1e8 {
            return Err(Error::Resolution {
                dt,
                limit: t_final / 1e8,
                constraint: "grid would exceed 1e8 steps",
            });
        }
        let steps = steps_f as usize;
        let dt_eff = t_final / steps as f64;

        let stationary_sigma = (0.5 / tau).sqrt();
        let decay = (-dt_eff / tau).exp();
        let innovation_sigma = ((1.0 - decay * decay) / (2.0 * tau)).sqrt();

        let mut samples = Vec::with_capacity(steps + 1);
        let mut xi = stationary_sigma * rng.sample::<f64, _>(StandardNormal);
        samples.push(xi);
        for _ in 0..steps {
            xi = xi * decay + innovation_sigma * rng.sample::<f64, _>(StandardNormal);
            samples.push(xi);
        }

        Ok(NoisePath { dt: dt_eff, samples, seed, tau_drawn: tau })
    }
}

fn flicker_alpha(t: f64, tau1: f64, tau2: f64) -> f64 {
    if t == 0.0 {
        return (tau2 / tau1).ln() / (2.0 * (tau2 - tau1));
    }
    if tau2 - tau1 < DEGENERATE_FLICKER_WIDTH * tau1 {
        // near-degenerate interval: average e^(-t/tau)/(2 tau) by direct
        // Gauss-Legendre; the integrand is nearly constant over [tau1, tau2]
        return gauss8(tau1, tau2, |tau| (-t / tau).exp() / (2.0 * tau)) / (tau2 - tau1);
    }
    let e1 = expint_ei(-t / tau1).expect("negative argument");
    let e2 = expint_ei(-t / tau2).expect("negative argument");
    (e1 - e2) / (2.0 * (tau2 - tau1))
}

/// Fixed 8-point Gauss-Legendre rule (plenty for a near-constant integrand).
fn gauss8(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 4] = [
        0.183434642495649804939476142360184,
        0.525532409916328985817739049189246,
        0.796666477413626739591553936475830,
        0.960289856497536231683560868569473,
    ];
    const W: [f64; 4] = [
        0.362683783378361982965150449277196,
        0.313706645877887287337962201986601,
        0.222381034453374470544355994426241,
        0.101228536290376259152531354309962,
    ];
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for j in 0..4 {
        acc += W[j] * (f(center - half * X[j]) + f(center + half * X[j]));
    }
    acc * half
}

/// One sampled noise realization on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    /// Grid step (same time units the model was specified in).
    pub dt: f64,
    /// xi_0 .. xi_K at t_k = k dt; K dt spans [0, t_final].
    pub samples: Vec<f64>,
    /// Seed this realization was drawn from.
    pub seed: u64,
    /// Effective OU correlation time: the model tau for OU, the drawn tau
    /// for flicker, +inf for a synthetic zero path.
    pub tau_drawn: f64,
}

impl NoisePath {
    /// An identically-zero path (the lambda = 0 limit).
    pub fn zeros(t_final: f64, dt: f64) -> Result<Self> {
        if !(t_final > 0.0) || !(dt > 0.0) {
            return Err(Error::invalid("dt", "t_final and dt must be positive".to_string()));
        }
        let steps = (t_final / dt).ceil() as usize;
        Ok(NoisePath {
            dt: t_final / steps as f64,
            samples: vec![0.0; steps + 1],
            seed: 0,
            tau_drawn: f64::INFINITY,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total time spanned by the grid.
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }

    /// Linear interpolation between grid nodes (clamped at the ends).
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = t / self.dt;
        if pos <= 0.0 {
            return self.samples[0];
        }
        let last = self.samples.len() - 1;
        if pos >= last as f64 {
            return self.samples[last];
        }
        let k = pos as usize;
        let frac = pos - k as f64;
        self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac
    }
}

/// Per-realization seed derived from a master seed and a realization index
/// (SplitMix64 finalizer), so ensembles are reproducible and order-free.
pub fn realization_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const T0: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn validation() {
        assert!(NoiseModel::OrnsteinUhlenbeck { tau: 0.0 }.validate().is_err());
        assert!(NoiseModel::Flicker { tau1: 1.0, tau2: 1.0 }.validate().is_err());
        assert!(NoiseModel::Flicker { tau1: -1.0, tau2: 1.0 }.validate().is_err());
        assert!(NoiseModel::Flicker { tau1: 1.0, tau2: 2.0 }.validate().is_ok());
    }

    #[test]
    fn ou_alpha_at_zero() {
        for tau in [0.3, 2.0, 17.0] {
            let m = NoiseModel::OrnsteinUhlenbeck { tau };
            assert_relative_eq!(m.alpha(0.0).unwrap(), 0.5 / tau, max_relative = 1e-15);
        }
        assert!(NoiseModel::OrnsteinUhlenbeck { tau: 1.0 }.alpha(-0.1).is_err());
    }

    #[test]
    fn flicker_alpha_at_zero_closed_form() {
        let (tau1, tau2) = (80.0 * T0, 100.0 * T0);
        let m = NoiseModel::Flicker { tau1, tau2 };
        assert_relative_eq!(
            m.alpha(0.0).unwrap(),
            (1.25f64).ln() / (40.0 * T0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn flicker_alpha_matches_direct_tau_average() {
        // oracle: adaptive quadrature of (1/(tau2-tau1)) int e^(-t/tau)/(2 tau) dtau
        let (tau1, tau2) = (0.8, 3.5);
        let m = NoiseModel::Flicker { tau1, tau2 };
        for t in [0.01, 0.3, 1.0, 4.0, 20.0] {
            let direct = quad::integrate(|tau| (-t / tau).exp() / (2.0 * tau), tau1, tau2, 1e-12)
                .unwrap()
                .value
                / (tau2 - tau1);
            assert_relative_eq!(m.alpha(t).unwrap(), direct, max_relative = 1e-8);
        }
    }

    #[test]
    fn degenerate_flicker_interval_reproduces_ou() {
        let tau = 0.7;
        let m = NoiseModel::Flicker { tau1: tau, tau2: tau * (1.0 + 1e-9) };
        let ou = NoiseModel::OrnsteinUhlenbeck { tau };
        for t in [0.0, 0.05, 0.5, 2.0, 10.0] {
            assert_relative_eq!(
                m.alpha(t).unwrap(),
                ou.alpha(t).unwrap(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn flicker_narrow_interval_mean_value_limit() {
        // tau2 - tau1 -> 0 at fixed tau recovers the OU correlation
        let tau = 1.3;
        for width in [1e-3, 1e-5] {
            let m = NoiseModel::Flicker { tau1: tau * (1.0 - width), tau2: tau * (1.0 + width) };
            for t in [0.1, 1.0, 5.0] {
                let ou = (-t / tau).exp() / (2.0 * tau);
                assert_relative_eq!(m.alpha(t).unwrap(), ou, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn ou_spectrum_values() {
        let tau = 0.9;
        let m = NoiseModel::OrnsteinUhlenbeck { tau };
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_relative_eq!(m.spectrum(0.0).unwrap(), 1.0 / two_pi, max_relative = 1e-15);
        // half-power point at Omega = 1/tau
        assert_relative_eq!(m.spectrum(1.0 / tau).unwrap(), 1.0 / (2.0 * two_pi), max_relative = 1e-15);
    }

    #[test]
    fn flicker_spectrum_inverse_frequency_band() {
        // between the cutoffs, S ~ 1/(4 (tau2 - tau1) Omega)
        let (tau1, tau2) = (1e2, 1e5);
        let m = NoiseModel::Flicker { tau1, tau2 };
        for omega in [2e-4, 1e-3] {
            // tau1 Omega << 1 << tau2 Omega
            assert!(tau1 * omega < 0.11 && tau2 * omega > 19.0);
            let expected = 1.0 / (4.0 * (tau2 - tau1) * omega);
            assert_relative_eq!(m.spectrum(omega).unwrap(), expected, max_relative = 0.15);
        }
    }

    #[test]
    fn spectrum_is_the_cosine_transform_of_alpha() {
        // (1/pi) int_0^inf alpha(t) cos(Omega t) dt against the closed forms
        let ou = NoiseModel::OrnsteinUhlenbeck { tau: 0.45 };
        for omega in [0.0, 1.0, 2.0] {
            let upper = 0.45 * 50.0;
            let breaks = quad::cosine_zeros(omega, 0.0, upper);
            let val = quad::integrate_with_breakpoints(
                |t| ou.alpha(t).unwrap() * (omega * t).cos(),
                0.0,
                upper,
                1e-10,
                &breaks,
            )
            .unwrap()
            .value
                / std::f64::consts::PI;
            assert_relative_eq!(ou.spectrum(omega).unwrap(), val, max_relative = 1e-6);
        }

        let fl = NoiseModel::Flicker { tau1: 3.0, tau2: 9.0 };
        let omega = 2.0;
        let upper = 9.0 * 60.0;
        let breaks = quad::cosine_zeros(omega, 0.0, upper);
        let val = quad::integrate_with_breakpoints(
            |t| fl.alpha(t).unwrap() * (omega * t).cos(),
            0.0,
            upper,
            1e-10,
            &breaks,
        )
        .unwrap()
        .value
            / std::f64::consts::PI;
        assert_relative_eq!(fl.spectrum(omega).unwrap(), val, max_relative = 1e-6);
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let m = NoiseModel::OrnsteinUhlenbeck { tau: 1.0 };
        let a = m.sample_path(10.0, 0.05, 42).unwrap();
        let b = m.sample_path(10.0, 0.05, 42).unwrap();
        assert_eq!(a, b);
        let c = m.sample_path(10.0, 0.05, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn sampling_rejects_coarse_grids() {
        let m = NoiseModel::OrnsteinUhlenbeck { tau: 1.0 };
        let err = m.sample_path(10.0, 0.2, 1).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
    }

    #[test]
    fn grid_spans_the_requested_window() {
        let m = NoiseModel::OrnsteinUhlenbeck { tau: 1.0 };
        let p = m.sample_path(1.0, 0.03, 7).unwrap();
        assert_relative_eq!(p.duration(), 1.0, max_relative = 1e-12);
        assert!(p.dt <= 0.03 + 1e-15);
    }

    #[test]
    fn ensemble_statistics_match_alpha() {
        // stationary variance 1/(2 tau), covariance alpha(s) at a few lags,
        // and zero mean, all within 3 standard errors over 1e5 paths
        let tau = 0.8;
        let m = NoiseModel::OrnsteinUhlenbeck { tau };
        let t_final = 4.0 * tau;
        let dt = tau / 20.0;
        let n = 100_000;

        let lag_steps = [10usize, 20, 40]; // s = tau/2, tau, 2 tau
        let probe = 30usize; // t = 1.5 tau, stationarity makes the choice free

        let mut mean = 0.0;
        let mut var = 0.0;
        let mut cov = [0.0f64; 3];
        for k in 0..n {
            let path = m.sample_path(t_final, dt, realization_seed(2024, k)).unwrap();
            let x = path.samples[probe];
            mean += x;
            var += x * x;
            for (j, lag) in lag_steps.iter().enumerate() {
                cov[j] += x * path.samples[probe + lag];
            }
        }
        let nf = n as f64;
        mean /= nf;
        var /= nf;
        let sigma2 = 0.5 / tau;
        // s.e. of the mean is sqrt(var/n); of the second moments ~ sqrt(2/n) sigma^2
        let se_mean = (var / nf).sqrt();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 3.0 * se_mean);
        let se_var = sigma2 * (2.0 / nf).sqrt();
        assert_abs_diff_eq!(var, sigma2, epsilon = 3.0 * se_var);
        for (j, lag) in lag_steps.iter().enumerate() {
            let s = *lag as f64 * dt;
            let expected = m.alpha(s).unwrap();
            let se = sigma2 * (2.0 / nf).sqrt();
            assert_abs_diff_eq!(cov[j] / nf, expected, epsilon = 3.0 * se);
        }
    }

    #[test]
    fn flicker_sampling_draws_tau_within_bounds() {
        let m = NoiseModel::Flicker { tau1: 1.0, tau2: 2.0 };
        let mut distinct = std::collections::HashSet::new();
        for seed in 0..50 {
            let p = m.sample_path(5.0, 0.01, seed).unwrap();
            assert!(p.tau_drawn >= 1.0 && p.tau_drawn <= 2.0);
            distinct.insert(p.tau_drawn.to_bits());
        }
        assert!(distinct.len() > 40);
    }

    #[test]
    fn linear_interpolation_between_nodes() {
        let path = NoisePath { dt: 0.5, samples: vec![1.0, 3.0, 2.0], seed: 0, tau_drawn: 1.0 };
        assert_relative_eq!(path.value_at(0.25), 2.0, max_relative = 1e-15);
        assert_relative_eq!(path.value_at(0.75), 2.5, max_relative = 1e-15);
        // clamped outside
        assert_relative_eq!(path.value_at(-1.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(path.value_at(9.0), 2.0, max_relative = 1e-15);
    }
}
