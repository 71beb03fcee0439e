//! Static (G1) and dynamical (G2) noise sensitivities.
//!
//! The second-order excitation of a shuttled mode splits into a static part,
//!
//! ```text
//! G1 = hbar w0^3 (n + 1/2) int_0^T alpha(s) (T - s) cos(2 w0 s) ds,
//! ```
//!
//! independent of the trap trajectory, and a dynamical part driven by the
//! autocorrelation of the reference acceleration,
//!
//! ```text
//! G2 = m int_0^T alpha(s) f(s) ds,
//! f(s) = cos(w0 s) int_0^{T-s} qc''(u) qc''(u + s) du,
//! ```
//!
//! so the predicted mean excitation is lambda^2 (G1 + G2). Both integrals are
//! evaluated here by oscillation-aware adaptive quadrature for any
//! correlation function, and by closed forms / asymptotics for the
//! Ornstein-Uhlenbeck and flicker models. The closed forms are dispatch
//! optimizations selected explicitly through [`Method`], never silently.
//!
//! Sensitivities are reported in joules with the noise strength lambda
//! dimensionless; the correlation time inside alpha is measured in 1/omega0,
//! which fixes the overall scale to hbar*omega0 times the dimensionless
//! integral. The Monte-Carlo oracle draws its noise with the same convention,
//! so predictions and simulations compare one-to-one.

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::quad;
use crate::system::{PhysicalSystem, HBAR};
use crate::trajectory::{Ansatz, Trajectory};

/// Relative tolerance of the G1/G2 quadratures.
const G_REL_TOL: f64 = 1e-8;
/// Relative tolerance of the acceleration-autocorrelation quadrature.
const F_REL_TOL: f64 = 1e-9;

/// How a sensitivity pair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Generic adaptive quadrature on alpha; works for any model/trajectory.
    Quadrature,
    /// Exact OU closed forms (G2 requires the fifth-order polynomial).
    OuExact,
    /// Short correlation time (white-noise) limit of the OU forms.
    OuShortTau,
    /// T >> tau >~ T0/(4 pi) approximation.
    OuMidTau,
    /// tau >> T approximation.
    OuLargeTau,
    /// Flat-correlation flicker approximation (tau1, tau2 >> T).
    FlickerFlat,
    /// Flat-correlation flicker G2 closed form for the quintic trajectory.
    FlickerPolyClosed,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Quadrature => "quadrature",
            Method::OuExact => "ou-exact",
            Method::OuShortTau => "ou-short-tau",
            Method::OuMidTau => "ou-mid-tau",
            Method::OuLargeTau => "ou-large-tau",
            Method::FlickerFlat => "flicker-flat",
            Method::FlickerPolyClosed => "flicker-poly-closed",
        };
        f.write_str(s)
    }
}

/// A (G1, G2) pair in joules, tagged with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Sensitivities {
    pub g1: f64,
    pub g2: f64,
    pub method: Method,
}

impl Sensitivities {
    pub fn total(&self) -> f64 {
        self.g1 + self.g2
    }
}

/// Predicted mean excitation lambda^2 (G1 + G2) on top of the mode energy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExcitationPrediction {
    pub lambda: f64,
    /// Noiseless final energy hbar w0 (n + 1/2), J.
    pub e0: f64,
    /// Predicted excitation lambda^2 (G1 + G2), J.
    pub delta_e: f64,
}

/// Acceleration autocorrelation f(s) of the reference trajectory, m^2/s^3.
///
/// Closed form for the quintic polynomial; adaptive quadrature of the
/// defining inner integral for every other ansatz.
pub fn f_autocorr(traj: &Trajectory, s: f64, omega0: f64) -> Result<f64> {
    check_omega0(omega0)?;
    let t_final = traj.duration();
    if !(0.0..=t_final).contains(&s) {
        return Err(Error::Domain(format!(
            "f(s) needs s in [0, {t_final:e}], got {s:e}"
        )));
    }
    Ok(f_autocorr_value(traj, s, omega0)?)
}

fn f_autocorr_value(traj: &Trajectory, s: f64, omega0: f64) -> Result<f64> {
    let t_final = traj.duration();
    if traj.ansatz() == Ansatz::Poly5 {
        return Ok(f_poly5(s, t_final, traj.distance()) * (omega0 * s).cos());
    }
    // as s -> T the inner integral dies while its integrand turns into
    // boundary-cancellation roundoff; the absolute floor (1e-12 of the
    // natural d^2/T^3 scale) lets those tails converge immediately
    let d = traj.distance();
    let floor = 1e-12 * d * d / t_final.powi(3);
    let inner = quad::integrate_with_floor(
        |u| traj.eval_unchecked(u, 2) * traj.eval_unchecked(u + s, 2),
        0.0,
        t_final - s,
        F_REL_TOL,
        &[],
        floor,
    )?;
    Ok(inner.value * (omega0 * s).cos())
}

/// Envelope of f(s) for the quintic, i.e. f(s)/cos(w0 s):
/// 720 d^2 s^7/(7 T^10) - 360 d^2 s^5/T^8 + 600 d^2 s^3/T^6
/// - 360 d^2 s^2/T^5 + 120 d^2/(7 T^3).
fn f_poly5(s: f64, t_final: f64, d: f64) -> f64 {
    let x = s / t_final;
    let x2 = x * x;
    let x3 = x2 * x;
    let poly = 120.0 / 7.0 - 360.0 * x2 + 600.0 * x3 - 360.0 * x2 * x3 + (720.0 / 7.0) * x3 * x3 * x;
    d * d / t_final.powi(3) * poly
}

/// Static sensitivity by adaptive quadrature, J. Takes no trajectory: G1 is
/// protocol-independent by construction.
pub fn g1_quadrature(model: &NoiseModel, t_final: f64, mode: u32, omega0: f64) -> Result<f64> {
    model.validate()?;
    check_omega0(omega0)?;
    check_t_final(t_final)?;
    let breaks = quad::cosine_zeros(2.0 * omega0, 0.0, t_final);
    let q = quad::integrate_with_breakpoints(
        |s| model.alpha_unchecked(s) * (t_final - s) * (2.0 * omega0 * s).cos(),
        0.0,
        t_final,
        G_REL_TOL,
        &breaks,
    )
    .map_err(|e| quad_context(e, "G1"))?;
    Ok(HBAR * omega0 * omega0 * (mode as f64 + 0.5) * q.value)
}

/// Dynamical sensitivity by adaptive quadrature, J.
pub fn g2_quadrature(model: &NoiseModel, traj: &Trajectory, sys: &PhysicalSystem) -> Result<f64> {
    model.validate()?;
    let t_final = traj.duration();
    let omega0 = sys.omega0;
    let breaks = quad::cosine_zeros(omega0, 0.0, t_final);
    let q = quad::integrate_with_breakpoints(
        |s| {
            model.alpha_unchecked(s)
                * f_autocorr_value(traj, s.clamp(0.0, t_final), omega0)
                    .expect("inner autocorrelation quadrature")
        },
        0.0,
        t_final,
        G_REL_TOL,
        &breaks,
    )
    .map_err(|e| quad_context(e, "G2"))?;
    Ok(sys.mass / omega0 * q.value)
}

/// Exact OU static sensitivity, J.
pub fn g1_ou_exact(tau: f64, t_final: f64, mode: u32, omega0: f64) -> f64 {
    let x = omega0 * tau;
    let tt = omega0 * t_final;
    let den = 1.0 + 4.0 * x * x;
    let m = x / (2.0 * den * den)
        * ((4.0 * x * x - 1.0)
            - (-tt / x).exp() * ((4.0 * x * x - 1.0) * (2.0 * tt).cos() + 4.0 * x * (2.0 * tt).sin()));
    HBAR * omega0 * (mode as f64 + 0.5) * (tt / (2.0 * den) + m)
}

/// Exact OU dynamical sensitivity for the quintic trajectory, J.
///
/// The three tau/T polynomials are evaluated in Horner form in x^2 = (w0
/// tau)^2 with the (1 + x^2)^8 division deferred to the end, which keeps the
/// huge intermediate magnitudes from cancelling badly anywhere on the
/// supported domain.
pub fn g2_ou_exact_poly(tau: f64, t_final: f64, sys: &PhysicalSystem) -> f64 {
    let omega0 = sys.omega0;
    let units = sys.oscillator_units();
    let d = units.length_to_natural(sys.distance);
    let tt = omega0 * t_final;
    let x = omega0 * tau;
    let x2 = x * x;
    let r = tau / t_final;

    let horner = |coeffs: &[f64]| coeffs.iter().rev().fold(0.0, |acc, c| acc * x2 + c);

    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    let r5 = r4 * r;
    let r6 = r3 * r3;
    let r7 = r6 * r;

    let m1 = r7 * horner(&[30240.0, -846720.0, 2116800.0, -846720.0, 30240.0])
        + r5 * horner(&[-2520.0, 32760.0, 35280.0, -35280.0, -32760.0, 2520.0])
        + r3 * horner(&[210.0, -420.0, -3570.0, -5880.0, -3570.0, -420.0, 210.0])
        + r2 * horner(&[-42.0, -84.0, 210.0, 840.0, 1050.0, 588.0, 126.0])
        + horner(&[1.0, 7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0]);
    let m2 = 210.0
        * (r7 * horner(&[-144.0, 4032.0, -10080.0, 4032.0, -144.0])
            + r6 * horner(&[-144.0, 2880.0, -2016.0, -4032.0, 1008.0])
            + r5 * horner(&[-60.0, 780.0, 840.0, -840.0, -780.0, 60.0])
            + r4 * horner(&[-12.0, 84.0, 264.0, 168.0, -60.0, -60.0])
            + r3 * horner(&[-1.0, 2.0, 17.0, 28.0, 17.0, 2.0, -1.0]));
    let m3 = 840.0
        * x
        * (r7 * horner(&[288.0, -2016.0, 2016.0, -288.0])
            + r6 * horner(&[252.0, -1008.0, -504.0, 720.0, -36.0])
            + r5 * horner(&[90.0, -120.0, -420.0, -120.0, 90.0])
            + r4 * horner(&[15.0, 15.0, -42.0, -66.0, -21.0, 3.0])
            + r3 * horner(&[1.0, 3.0, 2.0, -2.0, -3.0, -1.0]));

    let one_plus = 1.0 + x2;
    let prefactor = 60.0 * d * d / (7.0 * tt.powi(3) * one_plus.powi(8));
    let value = prefactor * (m1 + (-tt / x).exp() * (m2 * tt.cos() + m3 * tt.sin()));
    HBAR * omega0 * value
}

/// Large-tau asymptotic of the OU dynamical sensitivity (quintic), J:
/// G2 ~ 3600 m d^2 / (T^10 w^8 tau) [6 u cos(u/2) + (u^2 - 12) sin(u/2)]^2,
/// u = w0 T.
pub fn g2_ou_large_tau(tau: f64, t_final: f64, sys: &PhysicalSystem) -> f64 {
    let omega0 = sys.omega0;
    let units = sys.oscillator_units();
    let d = units.length_to_natural(sys.distance);
    let u = omega0 * t_final;
    let x = omega0 * tau;
    let bracket = 6.0 * u * (0.5 * u).cos() + (u * u - 12.0) * (0.5 * u).sin();
    HBAR * omega0 * 3600.0 * d * d / (u.powi(10) * x) * bracket * bracket
}

/// Short-correlation-time (white-noise) sensitivities:
/// G1 = (hbar w0^3 / 2)(n + 1/2)(T - tau), G2 = (m/2) int qc''^2.
/// Intended for tau << T.
pub fn g_ou_short_tau(
    tau: f64,
    t_final: f64,
    mode: u32,
    traj: &Trajectory,
    sys: &PhysicalSystem,
) -> Result<Sensitivities> {
    let omega0 = sys.omega0;
    let g1 = HBAR * omega0 * (mode as f64 + 0.5) * 0.5 * omega0 * (t_final - tau);
    // (m/2) int qc''^2 du = m f(0) / 2
    let g2 = sys.mass / (2.0 * omega0) * f_autocorr_value(traj, 0.0, omega0)?;
    Ok(Sensitivities { g1, g2, method: Method::OuShortTau })
}

/// Intermediate-regime approximation (T >> tau >~ T0/(4 pi)):
/// G1 ~ hbar w (T + tau)(n + 1/2)/(8 tau^2), G2 ~ 60 m d^2/(7 T^3 w^2 tau^2).
pub fn g_ou_mid_tau(tau: f64, t_final: f64, mode: u32, sys: &PhysicalSystem) -> Sensitivities {
    let omega0 = sys.omega0;
    let units = sys.oscillator_units();
    let d = units.length_to_natural(sys.distance);
    let tt = omega0 * t_final;
    let x = omega0 * tau;
    let g1 = HBAR * omega0 * (mode as f64 + 0.5) * (tt + x) / (8.0 * x * x);
    let g2 = HBAR * omega0 * 60.0 * d * d / (7.0 * tt.powi(3) * x * x);
    Sensitivities { g1, g2, method: Method::OuMidTau }
}

/// Large-tau static sensitivity (tau >> T):
/// G1 ~ hbar w0^3 (n+1/2)[T cos^2(w0 T) + tau sin^2(w0 T)
///      - (T0/2 pi) sin(w0 T) cos(w0 T)] / (4 tau^2 w0^2).
pub fn g1_ou_large_tau(tau: f64, t_final: f64, mode: u32, omega0: f64) -> f64 {
    let tt = omega0 * t_final;
    let x = omega0 * tau;
    let (sin, cos) = tt.sin_cos();
    HBAR * omega0 * (mode as f64 + 0.5) * (tt * cos * cos + x * sin * sin - sin * cos)
        / (4.0 * x * x)
}

/// Flat-correlation flicker approximation (tau1, tau2 >> T):
/// G1 = alpha_f(0) (hbar w0/2)(n+1/2) sin^2(w0 T), G2 = alpha_f(0) m int f.
pub fn g_flicker_flat(
    tau1: f64,
    tau2: f64,
    t_final: f64,
    mode: u32,
    traj: &Trajectory,
    sys: &PhysicalSystem,
) -> Result<Sensitivities> {
    NoiseModel::Flicker { tau1, tau2 }.validate()?;
    let omega0 = sys.omega0;
    let tt = omega0 * t_final;
    let af0 = flat_alpha0(tau1, tau2, omega0);
    let g1 = HBAR * omega0 * af0 * 0.5 * (mode as f64 + 0.5) * tt.sin().powi(2);
    let breaks = quad::cosine_zeros(omega0, 0.0, t_final);
    let f_integral = quad::integrate_with_breakpoints(
        |s| f_autocorr_value(traj, s.clamp(0.0, t_final), omega0).expect("autocorrelation"),
        0.0,
        t_final,
        G_REL_TOL,
        &breaks,
    )
    .map_err(|e| quad_context(e, "int f"))?;
    let g2 = sys.mass * af0 * f_integral.value;
    Ok(Sensitivities { g1, g2, method: Method::FlickerFlat })
}

/// Flat-correlation flicker G2 for the quintic trajectory, in closed form:
/// G2 = 7200 alpha_f(0) m d^2 / (w0^8 T^10)
///      [6 w0 T cos(u/2) + (w0^2 T^2 - 12) sin(u/2)]^2, u = w0 T.
pub fn g2_flicker_poly_closed(tau1: f64, tau2: f64, t_final: f64, sys: &PhysicalSystem) -> f64 {
    let omega0 = sys.omega0;
    let units = sys.oscillator_units();
    let d = units.length_to_natural(sys.distance);
    let u = omega0 * t_final;
    let af0 = flat_alpha0(tau1, tau2, omega0);
    let bracket = 6.0 * u * (0.5 * u).cos() + (u * u - 12.0) * (0.5 * u).sin();
    HBAR * omega0 * 7200.0 * af0 * d * d / u.powi(10) * bracket * bracket
}

/// alpha_f(0) in oscillator time units: ln(tau2/tau1)/(2 w0 (tau2 - tau1)).
fn flat_alpha0(tau1: f64, tau2: f64, omega0: f64) -> f64 {
    (tau2 / tau1).ln() / (2.0 * omega0 * (tau2 - tau1))
}

/// Stationary-trap heating rate per unit lambda^2, J/s:
/// dG1/dT = pi w0^2 S(2 w0) E_n0, valid once T >> correlation time.
pub fn heating_rate_stationary(model: &NoiseModel, mode: u32, sys: &PhysicalSystem) -> Result<f64> {
    let omega0 = sys.omega0;
    let s2 = model.spectrum(2.0 * omega0)?;
    Ok(std::f64::consts::PI * HBAR * omega0 * omega0 * (mode as f64 + 0.5) * s2)
}

/// Mean-excitation prediction lambda^2 (G1 + G2) for weak noise.
pub fn predict_excitation(
    g: &Sensitivities,
    lambda: f64,
    mode: u32,
    sys: &PhysicalSystem,
) -> Result<ExcitationPrediction> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    Ok(ExcitationPrediction {
        lambda,
        e0: HBAR * sys.omega0 * (mode as f64 + 0.5),
        delta_e: lambda * lambda * g.total(),
    })
}

/// Compute both sensitivities for `model` and `traj` with an explicit method.
///
/// Closed forms reject model/trajectory combinations they do not cover
/// instead of silently falling back to quadrature.
pub fn sensitivities(
    model: &NoiseModel,
    traj: &Trajectory,
    mode: u32,
    sys: &PhysicalSystem,
    method: Method,
) -> Result<Sensitivities> {
    model.validate()?;
    let t_final = traj.duration();
    let omega0 = sys.omega0;
    let ou_tau = || match *model {
        NoiseModel::OrnsteinUhlenbeck { tau } => Ok(tau),
        _ => Err(Error::invalid("method", format!("{method} applies to Ornstein-Uhlenbeck noise only"))),
    };
    let need_poly5 = || {
        if traj.ansatz() == Ansatz::Poly5 {
            Ok(())
        } else {
            Err(Error::invalid("method", format!("{method} is closed-form for the quintic trajectory only")))
        }
    };
    match method {
        Method::Quadrature => {
            let g1 = g1_quadrature(model, t_final, mode, omega0)?;
            let g2 = g2_quadrature(model, traj, sys)?;
            Ok(Sensitivities { g1, g2, method })
        }
        Method::OuExact => {
            let tau = ou_tau()?;
            need_poly5()?;
            Ok(Sensitivities {
                g1: g1_ou_exact(tau, t_final, mode, omega0),
                g2: g2_ou_exact_poly(tau, t_final, sys),
                method,
            })
        }
        Method::OuShortTau => {
            let tau = ou_tau()?;
            g_ou_short_tau(tau, t_final, mode, traj, sys)
        }
        Method::OuMidTau => {
            let tau = ou_tau()?;
            Ok(g_ou_mid_tau(tau, t_final, mode, sys))
        }
        Method::OuLargeTau => {
            let tau = ou_tau()?;
            need_poly5()?;
            Ok(Sensitivities {
                g1: g1_ou_large_tau(tau, t_final, mode, omega0),
                g2: g2_ou_large_tau(tau, t_final, sys),
                method,
            })
        }
        Method::FlickerFlat => match *model {
            NoiseModel::Flicker { tau1, tau2 } => g_flicker_flat(tau1, tau2, t_final, mode, traj, sys),
            _ => Err(Error::invalid("method", "flicker-flat applies to flicker noise only".to_string())),
        },
        Method::FlickerPolyClosed => match *model {
            NoiseModel::Flicker { tau1, tau2 } => {
                need_poly5()?;
                let flat = g_flicker_flat(tau1, tau2, t_final, mode, traj, sys)?;
                Ok(Sensitivities {
                    g1: flat.g1,
                    g2: g2_flicker_poly_closed(tau1, tau2, t_final, sys),
                    method,
                })
            }
            _ => Err(Error::invalid("method", "flicker closed form applies to flicker noise only".to_string())),
        },
    }
}

fn check_omega0(omega0: f64) -> Result<()> {
    if !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(Error::invalid("omega0", format!("must be positive, got {omega0:e}")));
    }
    Ok(())
}

fn check_t_final(t_final: f64) -> Result<()> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::invalid("t_final", format!("must be positive, got {t_final:e}")));
    }
    Ok(())
}

fn quad_context(e: Error, what: &str) -> Error {
    match e {
        Error::QuadratureNonConvergence { context, estimate, bound } => {
            Error::QuadratureNonConvergence { context: format!("{what}: {context}"), estimate, bound }
        }
        other => other,
    }
}
