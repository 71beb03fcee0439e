//! Derived studies on the OU sensitivity surfaces: the G1 = G2 crossover,
//! the total-sensitivity-minimizing shuttling time, and the free-coefficient
//! trajectory optimization.
//!
//! Everything here runs on the exact closed forms (the scans touch thousands
//! of points); the quadrature route stays available for spot checks through
//! the sensitivity module.

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::sensitivity::{g1_ou_exact, g2_ou_exact_poly, g2_quadrature};
use crate::system::PhysicalSystem;
use crate::trajectory::Trajectory;
use rayon::prelude::*;

/// Search bracket for shuttling times, in units of T0. The closed forms are
/// trusted inside the regime the surfaces were mapped on; outside it the
/// tools report instead of extrapolating.
const T_BRACKET: (f64, f64) = (1.0, 500.0);
/// Supported correlation-time window, in units of T0.
const TAU_RANGE: (f64, f64) = (1e-3, 10.0);
/// Coarse-scan resolution across the bracket.
const SCAN_POINTS: usize = 400;
/// Shuttling-time tolerance of the root/minimum searches, in units of T0.
const T_TOL: f64 = 1e-3;

/// One row of the crossover table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CrossoverPoint {
    /// Correlation time, s.
    pub tau: f64,
    /// Shuttling time where G1 = G2, s.
    pub t_cross: f64,
    /// Shuttling time minimizing G1 + G2, s.
    pub t_opt: f64,
}

/// Result of a crossover search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    /// Smallest root of G1(T) - G2(T) in the bracket, s.
    pub t_cross: f64,
    /// Number of sign changes seen in the coarse scan (1 in practice; more
    /// would flag an unexpected surface shape).
    pub roots_found: usize,
}

/// Result of the optimal-time search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalTime {
    pub t_opt: f64,
    /// False when the global coarse minimum could not be bracketed (it sat on
    /// a scan edge, or refinement failed to improve on it); `t_opt` is then
    /// the best scanned point rather than a refined minimizer.
    pub refined: bool,
}

/// Result of the free-coefficient minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N6Optimum {
    /// Minimizing sixth-order coefficient, m/s^6.
    pub n6: f64,
    /// G2 at the minimizer, J.
    pub g2: f64,
}

fn check_tau(tau: f64, sys: &PhysicalSystem) -> Result<()> {
    let t0 = sys.period();
    if !(tau >= TAU_RANGE.0 * t0 && tau <= TAU_RANGE.1 * t0) {
        return Err(Error::invalid(
            "tau",
            format!(
                "crossover analysis covers tau in [{:e}, {:e}] s, got {tau:e}",
                TAU_RANGE.0 * t0,
                TAU_RANGE.1 * t0
            ),
        ));
    }
    Ok(())
}

/// Smallest shuttling time in [T0, 500 T0] where the static and dynamical
/// sensitivities cross, for OU noise and the quintic trajectory.
pub fn crossover_t(tau: f64, mode: u32, sys: &PhysicalSystem) -> Result<Crossover> {
    check_tau(tau, sys)?;
    let t0 = sys.period();
    let diff = |t: f64| g1_ou_exact(tau, t, mode, sys.omega0) - g2_ou_exact_poly(tau, t, sys);

    let grid = log_grid(T_BRACKET.0 * t0, T_BRACKET.1 * t0, SCAN_POINTS);
    let values: Vec<f64> = grid.iter().map(|&t| diff(t)).collect();
    let mut brackets = Vec::new();
    for k in 0..grid.len() - 1 {
        if values[k] == 0.0 {
            brackets.push((grid[k], grid[k]));
        } else if values[k] * values[k + 1] < 0.0 {
            brackets.push((grid[k], grid[k + 1]));
        }
    }
    let (mut lo, mut hi) = *brackets.first().ok_or(Error::NoCrossing { tau })?;

    // bisect to the time tolerance, then polish the residual with secant
    // steps so |G1 - G2| clears 1e-6 (G1 + G2) at the reported root
    let mut f_lo = diff(lo);
    while hi - lo > T_TOL * t0 {
        let mid = 0.5 * (lo + hi);
        let f_mid = diff(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let mut a = lo;
    let mut b = if hi > lo { hi } else { lo + T_TOL * t0 };
    let mut fa = diff(a);
    let mut fb = diff(b);
    for _ in 0..60 {
        let scale = g1_ou_exact(tau, a, mode, sys.omega0) + g2_ou_exact_poly(tau, a, sys);
        if fa.abs() <= 1e-8 * scale || fb == fa {
            break;
        }
        let c = a - fa * (b - a) / (fb - fa);
        if !c.is_finite() {
            break;
        }
        b = a;
        fb = fa;
        a = c;
        fa = diff(a);
    }

    Ok(Crossover { t_cross: a, roots_found: brackets.len() })
}

/// Shuttling time minimizing G1 + G2 at fixed tau (OU noise, quintic).
pub fn optimal_t(tau: f64, mode: u32, sys: &PhysicalSystem) -> Result<OptimalTime> {
    check_tau(tau, sys)?;
    let t0 = sys.period();
    let total = |t: f64| g1_ou_exact(tau, t, mode, sys.omega0) + g2_ou_exact_poly(tau, t, sys);

    let grid = log_grid(T_BRACKET.0 * t0, T_BRACKET.1 * t0, SCAN_POINTS);
    let values: Vec<f64> = grid.iter().map(|&t| total(t)).collect();
    let best = (0..grid.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();

    // the surface carries e^(-T/tau) ripples far from the optimum, so other
    // local minima in the scan are fine; what golden section needs is the
    // three-point bracket around the global one
    if best == 0 || best == grid.len() - 1 {
        return Ok(OptimalTime { t_opt: grid[best], refined: false });
    }
    let (x, fx) = golden_min(&total, grid[best - 1], grid[best + 1], T_TOL * t0);
    if fx > values[best] {
        return Ok(OptimalTime { t_opt: grid[best], refined: false });
    }
    Ok(OptimalTime { t_opt: x, refined: true })
}

/// Scan the crossover curve and optimal time over a set of correlation times
/// (rows keep the input order; the scan parallelizes across rows).
pub fn crossover_scan(taus: &[f64], mode: u32, sys: &PhysicalSystem) -> Result<Vec<CrossoverPoint>> {
    taus.par_iter()
        .map(|&tau| {
            let cross = crossover_t(tau, mode, sys)?;
            let opt = optimal_t(tau, mode, sys)?;
            Ok(CrossoverPoint { tau, t_cross: cross.t_cross, t_opt: opt.t_opt })
        })
        .collect()
}

/// Minimize the dynamical sensitivity over the free sixth-order trajectory
/// coefficient by golden section on [-B, B], B = 100 d / T^6, expanding the
/// bracket when the minimizer pins to an edge, then polishing with one
/// parabolic fit (G2 is an exact quadratic in n6).
pub fn optimize_n6(t_final: f64, tau: f64, sys: &PhysicalSystem) -> Result<N6Optimum> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::invalid("t_final", format!("must be positive, got {t_final:e}")));
    }
    check_tau(tau, sys)?;
    let model = NoiseModel::OrnsteinUhlenbeck { tau };
    let g2 = |n6: f64| -> Result<f64> {
        let traj = Trajectory::poly6(t_final, sys.distance, n6)?;
        g2_quadrature(&model, &traj, sys)
    };

    let b0 = 100.0 * sys.distance / t_final.powi(6);
    let mut half_width = b0;
    for expansion in 0..=3u32 {
        let (x, _) = golden_min_fallible(&g2, -half_width, half_width, 1e-6 * half_width)?;
        if x.abs() > 0.95 * half_width {
            if expansion == 3 {
                return Err(Error::BracketEdge { expansions: expansion });
            }
            half_width *= 4.0;
            continue;
        }
        // G2(n6) is quadratic: one three-point fit lands on the vertex
        let delta = 1e-3 * half_width;
        let (fl, fc, fr) = (g2(x - delta)?, g2(x)?, g2(x + delta)?);
        let denom = fl - 2.0 * fc + fr;
        let vertex = if denom > 0.0 { x + delta * 0.5 * (fl - fr) / denom } else { x };
        let g2_min = g2(vertex)?;
        return Ok(N6Optimum { n6: vertex, g2: g2_min });
    }
    unreachable!("loop returns or errors within four expansions")
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (ln_lo + (ln_hi - ln_lo) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Golden-section minimum of `f` on [a, b] to absolute tolerance `xtol`.
fn golden_min(f: &dyn Fn(f64) -> f64, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    golden_min_fallible(&|x| Ok(f(x)), a, b, xtol).expect("infallible objective")
}

fn golden_min_fallible(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > xtol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 < f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::HBAR;
    use approx::assert_relative_eq;

    fn sys() -> PhysicalSystem {
        PhysicalSystem::calcium_transport()
    }

    #[test]
    fn crossover_matches_the_reference_point() {
        let s = sys();
        let t0 = s.period();
        let cross = crossover_t(2.0 * t0, 0, &s).unwrap();
        assert_relative_eq!(cross.t_cross / t0, 78.19, max_relative = 7e-3);
        assert_eq!(cross.roots_found, 1);
    }

    #[test]
    fn crossover_residual_is_balanced() {
        let s = sys();
        let t0 = s.period();
        for tau_t0 in [0.01, 0.3, 2.0, 10.0] {
            let tau = tau_t0 * t0;
            let cross = crossover_t(tau, 0, &s).unwrap();
            let g1 = g1_ou_exact(tau, cross.t_cross, 0, s.omega0);
            let g2 = g2_ou_exact_poly(tau, cross.t_cross, &s);
            assert!(
                (g1 - g2).abs() / (g1 + g2) < 1e-6,
                "residual {:e} at tau = {tau_t0} T0",
                (g1 - g2).abs() / (g1 + g2)
            );
        }
    }

    #[test]
    fn crossover_rejects_out_of_range_tau() {
        let s = sys();
        let t0 = s.period();
        assert!(crossover_t(1e-5 * t0, 0, &s).is_err());
        assert!(crossover_t(100.0 * t0, 0, &s).is_err());
    }

    #[test]
    fn approximate_crossover_curve_tracks_the_exact_root() {
        // T + tau = a / T^3 with a = 960 m d^2/(7 hbar w^3), valid for
        // tau above T0; the quartic root should sit within 5% of the
        // exact crossover
        let s = sys();
        let t0 = s.period();
        let tau = 2.0 * t0;
        let u = s.oscillator_units();
        let d_n = u.length_to_natural(s.distance);
        let a_coef = 960.0 * d_n * d_n / 7.0; // oscillator units
        let tau_n = s.omega0 * tau;
        // bisect T^4 + tau T^3 - a = 0
        let f = |t: f64| t.powi(4) + tau_n * t.powi(3) - a_coef;
        let (mut lo, mut hi) = (1.0, 1e4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let approx_root = 0.5 * (lo + hi) / s.omega0;
        let exact = crossover_t(tau, 0, &s).unwrap().t_cross;
        assert_relative_eq!(approx_root, exact, max_relative = 0.05);
    }

    #[test]
    fn optimal_time_reaches_the_large_tau_constant() {
        // for tau well above T0 the optimum settles at
        // (2880 m d^2 / (7 hbar w^3))^(1/4)
        let s = sys();
        let t0 = s.period();
        let u = s.oscillator_units();
        let d_n = u.length_to_natural(s.distance);
        let constant = (2880.0 * d_n * d_n / 7.0).powf(0.25) / s.omega0;
        for tau_t0 in [5.0, 10.0] {
            let opt = optimal_t(tau_t0 * t0, 0, &s).unwrap();
            assert!(opt.refined);
            assert_relative_eq!(opt.t_opt, constant, max_relative = 0.02);
        }
    }

    #[test]
    fn optimal_time_matches_the_short_tau_two_term_model() {
        // minimizing (hbar w0^3/2)(n + 1/2) T + 60 m d^2/(7 T^3) gives
        // T = (720 d_n^2 / 7)^(1/4) in oscillator units for n = 0
        let s = sys();
        let t0 = s.period();
        let u = s.oscillator_units();
        let d_n = u.length_to_natural(s.distance);
        let model_opt = (720.0 * d_n * d_n / 7.0).powf(0.25) / s.omega0;
        let opt = optimal_t(0.01 * t0, 0, &s).unwrap();
        assert!(opt.refined);
        assert_relative_eq!(opt.t_opt, model_opt, max_relative = 0.02);
    }

    #[test]
    fn optimum_is_a_minimum() {
        let s = sys();
        let t0 = s.period();
        let tau = 0.5 * t0;
        let opt = optimal_t(tau, 0, &s).unwrap();
        let total =
            |t: f64| g1_ou_exact(tau, t, 0, s.omega0) + g2_ou_exact_poly(tau, t, &s);
        assert!(total(opt.t_opt) <= total(0.9 * opt.t_opt));
        assert!(total(opt.t_opt) <= total(1.1 * opt.t_opt));
    }

    #[test]
    fn optimum_lies_beyond_the_crossover() {
        // at the crossover the T^-3 decay of G2 still outruns the linear
        // growth of G1, so the total keeps falling past it
        let s = sys();
        let t0 = s.period();
        let pts = crossover_scan(&[0.01 * t0, 0.5 * t0, 2.0 * t0], 0, &s).unwrap();
        for p in &pts {
            assert!(
                p.t_opt > p.t_cross,
                "tau = {:e}: t_opt = {:e} vs t_cross = {:e}",
                p.tau,
                p.t_opt,
                p.t_cross
            );
        }
    }

    #[test]
    fn n6_zero_is_already_optimal() {
        let s = sys();
        let t0 = s.period();
        let t_final = 2.0 * t0;
        let opt = optimize_n6(t_final, 0.1 * t0, &s).unwrap();
        // dimensionless leading coefficient below 1e-3
        assert!(
            (opt.n6 * t_final.powi(6) / s.distance).abs() < 1e-3,
            "scaled n6 = {:e}",
            opt.n6 * t_final.powi(6) / s.distance
        );
        let poly5 = Trajectory::poly5(t_final, s.distance).unwrap();
        let g2_poly5 =
            g2_quadrature(&NoiseModel::OrnsteinUhlenbeck { tau: 0.1 * t0 }, &poly5, &s).unwrap();
        assert_relative_eq!(opt.g2, g2_poly5, max_relative = 1e-4);
    }

    #[test]
    fn g2_is_a_parabola_in_n6() {
        let s = sys();
        let t0 = s.period();
        let t_final = 2.0 * t0;
        let tau = 0.1 * t0;
        let model = NoiseModel::OrnsteinUhlenbeck { tau };
        let g2 = |n6: f64| {
            let traj = Trajectory::poly6(t_final, s.distance, n6).unwrap();
            g2_quadrature(&model, &traj, &s).unwrap()
        };
        let b = 100.0 * s.distance / t_final.powi(6);
        // a quadratic satisfies f(-h) - 2 f(0) + f(h) = f(-2h) - 2 f(0) + f(2h) / 4
        let h = 0.3 * b;
        let d1 = g2(-h) - 2.0 * g2(0.0) + g2(h);
        let d2 = g2(-2.0 * h) - 2.0 * g2(0.0) + g2(2.0 * h);
        assert_relative_eq!(d2 / d1, 4.0, max_relative = 1e-4);
        assert!(d1 > 0.0, "curvature must open upward");
    }

    #[test]
    fn n6_minimum_beats_the_bracket_midpoint() {
        let s = sys();
        let t0 = s.period();
        let t_final = 2.0 * t0;
        let tau = 0.1 * t0;
        let opt = optimize_n6(t_final, tau, &s).unwrap();
        let b = 100.0 * s.distance / t_final.powi(6);
        let off = Trajectory::poly6(t_final, s.distance, 0.5 * b).unwrap();
        let g2_off =
            g2_quadrature(&NoiseModel::OrnsteinUhlenbeck { tau }, &off, &s).unwrap();
        assert!(opt.g2 <= g2_off);
    }

    #[test]
    fn scan_keeps_input_order() {
        let s = sys();
        let t0 = s.period();
        let taus = [2.0 * t0, 0.01 * t0];
        let pts = crossover_scan(&taus, 0, &s).unwrap();
        assert_eq!(pts.len(), 2);
        assert_relative_eq!(pts[0].tau, taus[0], max_relative = 1e-15);
        assert_relative_eq!(pts[1].tau, taus[1], max_relative = 1e-15);
        // the reference crossovers in units of T0
        assert_relative_eq!(pts[0].t_cross / t0, 78.19, max_relative = 7e-3);
        assert_relative_eq!(pts[1].t_cross / t0, 55.87, max_relative = 7e-3);
    }

    #[test]
    fn sensitivity_scale_sanity() {
        // keep an absolute anchor: G2 for the example system at
        // (T, tau) = (5 T0, 0.1 T0) in units of hbar w0 (frozen from the
        // exact closed form, cross-checked against quadrature elsewhere)
        let s = sys();
        let t0 = s.period();
        let g2 = g2_ou_exact_poly(0.1 * t0, 5.0 * t0, &s);
        assert_relative_eq!(g2 / (HBAR * s.omega0), 8.677631639e4, max_relative = 1e-6);
    }
}
