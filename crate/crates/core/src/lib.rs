//! Motional excitation of a particle shuttled by a moving harmonic trap whose
//! spring constant carries weak colored noise.
//!
//! The crate predicts the ensemble-averaged final excitation through the
//! static (G1) and dynamical (G2) noise sensitivities — by generic adaptive
//! quadrature for any correlation function, and by closed forms for
//! Ornstein-Uhlenbeck and flicker noise — and verifies the prediction with a
//! stochastic Monte-Carlo integration of the exact auxiliary dynamics.

pub mod analysis;
pub mod error;
pub mod noise;
pub mod quad;
pub mod sensitivity;
pub mod special;
pub mod stochastic;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use noise::{realization_seed, NoiseModel, NoisePath};
pub use sensitivity::{ExcitationPrediction, Method, Sensitivities};
pub use stochastic::{FirstOrderTerms, MonteCarloOptions, MonteCarloReport};
pub use system::{final_energy, AuxiliaryState, OscillatorUnits, PhysicalSystem, HBAR};
pub use trajectory::{Ansatz, Trajectory};
