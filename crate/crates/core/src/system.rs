//! Physical parameters, oscillator units, and the exact final-energy formula.
//!
//! All heavy numerics in this crate run in oscillator units (hbar = m = omega0
//! = 1); SI values appear only at the API boundary. [`OscillatorUnits`] holds
//! the three scales needed to cross that boundary.

use crate::error::{Error, Result};

/// Reduced Planck constant, J s (CODATA).
pub const HBAR: f64 = 1.054571817e-34;

/// A single particle in a moving harmonic trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSystem {
    /// Particle mass, kg.
    pub mass: f64,
    /// Average trap angular frequency, rad/s.
    pub omega0: f64,
    /// Shuttling distance, m.
    pub distance: f64,
    /// Initial transport-mode index.
    pub mode: u32,
}

impl PhysicalSystem {
    pub fn new(mass: f64, omega0: f64, distance: f64, mode: u32) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::invalid("mass", format!("must be positive, got {mass:e}")));
        }
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::invalid("omega0", format!("must be positive, got {omega0:e}")));
        }
        if !(distance >= 0.0) || !distance.is_finite() {
            return Err(Error::invalid("distance", format!("must be non-negative, got {distance:e}")));
        }
        Ok(PhysicalSystem { mass, omega0, distance, mode })
    }

    /// The default example system: a ⁴⁰Ca⁺ ion shuttled over 280 um in a
    /// 2π × 1.41 MHz trap, starting in the ground state.
    pub fn calcium_transport() -> Self {
        PhysicalSystem {
            mass: 6.642e-26,
            omega0: 2.0 * std::f64::consts::PI * 1.41e6,
            distance: 280e-6,
            mode: 0,
        }
    }

    /// Trap oscillation period T0 = 2π/omega0, s.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega0
    }

    /// Energy quantum hbar * omega0, J.
    pub fn energy_quantum(&self) -> f64 {
        HBAR * self.omega0
    }

    /// Oscillator eigenenergy of the initial mode, hbar*omega0*(n + 1/2), J.
    pub fn mode_energy(&self) -> f64 {
        self.energy_quantum() * (self.mode as f64 + 0.5)
    }

    /// Conversion scales to the internal unit system (hbar = m = omega0 = 1).
    pub fn oscillator_units(&self) -> OscillatorUnits {
        OscillatorUnits {
            length_scale: (HBAR / (self.mass * self.omega0)).sqrt(),
            time_scale: 1.0 / self.omega0,
            energy_scale: HBAR * self.omega0,
        }
    }
}

/// Scales mapping SI values onto oscillator units.
///
/// Lengths divide by `length_scale` (the ground-state width a0), times by
/// `time_scale` (1/omega0), energies by `energy_scale` (hbar*omega0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorUnits {
    pub length_scale: f64,
    pub time_scale: f64,
    pub energy_scale: f64,
}

impl OscillatorUnits {
    pub fn length_to_natural(&self, x: f64) -> f64 {
        x / self.length_scale
    }

    pub fn length_from_natural(&self, x: f64) -> f64 {
        x * self.length_scale
    }

    pub fn time_to_natural(&self, t: f64) -> f64 {
        t / self.time_scale
    }

    pub fn time_from_natural(&self, t: f64) -> f64 {
        t * self.time_scale
    }

    pub fn energy_to_natural(&self, e: f64) -> f64 {
        e / self.energy_scale
    }

    pub fn energy_from_natural(&self, e: f64) -> f64 {
        e * self.energy_scale
    }
}

/// State of the auxiliary (width + center) dynamics at one instant, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryState {
    /// Width scaling factor rho (dimensionless, > 0).
    pub rho: f64,
    /// d(rho)/dt, 1/s.
    pub rho_dot: f64,
    /// Classical center q_c, m.
    pub qc: f64,
    /// d(q_c)/dt, m/s.
    pub qc_dot: f64,
}

/// Final-time energy expectation for a state in transport mode `sys.mode`,
/// measured against a static trap of frequency omega0 centered at the target.
///
/// E = (m/2) omega0^2 (q_c - d)^2 + (hbar omega0 / 4)(2n+1)(1 + rho^4)/rho^2
///   + (m/2) q_c_dot^2 + (hbar / 4 omega0)(2n+1) rho_dot^2
pub fn final_energy(state: &AuxiliaryState, sys: &PhysicalSystem) -> Result<f64> {
    if !(state.rho > 0.0) {
        return Err(Error::Singular { rho: state.rho, t: f64::NAN });
    }
    let two_n_plus_1 = 2.0 * sys.mode as f64 + 1.0;
    let rho2 = state.rho * state.rho;
    let displacement = state.qc - sys.distance;
    Ok(0.5 * sys.mass * sys.omega0 * sys.omega0 * displacement * displacement
        + 0.25 * HBAR * sys.omega0 * two_n_plus_1 * (1.0 / rho2 + rho2)
        + 0.5 * sys.mass * state.qc_dot * state.qc_dot
        + 0.25 * HBAR / sys.omega0 * two_n_plus_1 * state.rho_dot * state.rho_dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sys() -> PhysicalSystem {
        PhysicalSystem::calcium_transport()
    }

    #[test]
    fn oscillator_length_matches_hand_value() {
        // a0 = sqrt(hbar / (m omega0)) evaluated independently
        let u = sys().oscillator_units();
        assert_relative_eq!(u.length_scale, 1.339e-8, max_relative = 1e-3);
        assert_relative_eq!(
            u.length_scale,
            (HBAR / (6.642e-26 * 2.0 * std::f64::consts::PI * 1.41e6)).sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn identity_units() {
        let s = PhysicalSystem::new(HBAR, 1.0, 0.0, 0).unwrap();
        let u = s.oscillator_units();
        assert_relative_eq!(u.energy_scale, HBAR, max_relative = 1e-15);
        assert_relative_eq!(u.length_scale, 1.0, max_relative = 1e-15);
        assert_relative_eq!(u.time_scale, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn dimensionless_transport_distance() {
        // d / a0 for the example system, checked by hand
        let u = sys().oscillator_units();
        assert_relative_eq!(u.length_to_natural(280e-6), 2.091e4, max_relative = 1e-3);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PhysicalSystem::new(0.0, 1.0, 1.0, 0).is_err());
        assert!(PhysicalSystem::new(1.0, -2.0, 1.0, 0).is_err());
        assert!(PhysicalSystem::new(1.0, 1.0, -1.0, 0).is_err());
        assert!(PhysicalSystem::new(f64::NAN, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn perfect_transport_gives_mode_energy() {
        let s = sys();
        let state = AuxiliaryState { rho: 1.0, rho_dot: 0.0, qc: s.distance, qc_dot: 0.0 };
        assert_relative_eq!(
            final_energy(&state, &s).unwrap(),
            0.5 * HBAR * s.omega0,
            max_relative = 1e-14
        );

        for n in [1u32, 3, 17] {
            let sn = PhysicalSystem { mode: n, ..s };
            assert_relative_eq!(
                final_energy(&state, &sn).unwrap(),
                HBAR * s.omega0 * (n as f64 + 0.5),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn displaced_state_adds_potential_energy() {
        let s = sys();
        let delta = 3.7e-9;
        let state = AuxiliaryState { rho: 1.0, rho_dot: 0.0, qc: s.distance + delta, qc_dot: 0.0 };
        let expected = s.mode_energy() + 0.5 * s.mass * s.omega0 * s.omega0 * delta * delta;
        assert_relative_eq!(final_energy(&state, &s).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn singular_rho_is_an_error() {
        let s = sys();
        let state = AuxiliaryState { rho: 0.0, rho_dot: 0.0, qc: 0.0, qc_dot: 0.0 };
        assert!(matches!(final_energy(&state, &s), Err(Error::Singular { .. })));
    }

    proptest! {
        // (1 + rho^4)/rho^2 >= 2 with equality at rho = 1, and every other
        // term is a square, so the mode energy is a floor.
        #[test]
        fn energy_never_below_mode_energy(
            rho in 1e-3f64..1e3,
            rho_dot in -1e7f64..1e7,
            qc in -1e-3f64..1e-3,
            qc_dot in -1e2f64..1e2,
            n in 0u32..20,
        ) {
            let s = PhysicalSystem { mode: n, ..sys() };
            let state = AuxiliaryState { rho, rho_dot, qc, qc_dot };
            let e = final_energy(&state, &s).unwrap();
            prop_assert!(e >= s.mode_energy() * (1.0 - 1e-12));
        }

        // Energy is invariant under the unit round trip: evaluate the formula
        // in oscillator units, convert back, compare with the SI evaluation.
        #[test]
        fn energy_unit_round_trip(
            rho in 0.5f64..2.0,
            rho_dot_n in -2.0f64..2.0,
            qc_n in -1e4f64..3e4,
            qc_dot_n in -1e4f64..1e4,
        ) {
            let s = sys();
            let u = s.oscillator_units();
            let state = AuxiliaryState {
                rho,
                rho_dot: rho_dot_n / u.time_scale,
                qc: qc_n * u.length_scale,
                qc_dot: qc_dot_n * u.length_scale / u.time_scale,
            };
            let si = final_energy(&state, &s).unwrap();

            // same formula with hbar = m = omega0 = 1
            let d_n = u.length_to_natural(s.distance);
            let two_n_plus_1 = 2.0 * s.mode as f64 + 1.0;
            let natural = 0.5 * (qc_n - d_n).powi(2)
                + 0.25 * two_n_plus_1 * (rho.powi(2) + rho.powi(-2))
                + 0.5 * qc_dot_n.powi(2)
                + 0.25 * two_n_plus_1 * rho_dot_n.powi(2);
            prop_assert!((u.energy_from_natural(natural) - si).abs() <= 1e-12 * si.abs());
        }
    }
}
