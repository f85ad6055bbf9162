//! Twirling-based certification of noisy Clifford gates.
//!
//! The crate estimates the average fidelity of a noisy Clifford gate
//! `Ũ = Λ ∘ U` without process tomography. Random Pauli inputs are sampled
//! per weight class, pushed through the noisy gate, and compared against the
//! ideal output Pauli `U ρ U†`; the averaged overlaps give the probability of
//! no error `Pr(0)` of the twirled noise, and
//! `F̄ = (2ⁿ·Pr(0) + 1) / (2ⁿ + 1)`.
//!
//! Modules:
//! - [`pauli`]: bit-packed signed Pauli operators.
//! - [`clifford`]: symplectic tableaux, elementary gates and the
//!   coherence-spreading gate.
//! - [`channels`]: stochastic Pauli, dephasing and SPAM noise with exact
//!   attenuation of Pauli observables.
//! - [`estimator`]: Hoeffding sample planning, stratified sampling and the
//!   certification pipeline.
//! - [`oracle`]: dense small-system ground truth (PTMs, Haar and Clifford
//!   averages, twirl spectra).
//!
//! Numeric layers are generic over [`Real`]; the aliases below fix `f64`.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod clifford;
pub mod estimator;
pub mod oracle;
pub mod pauli;
mod scalar;

pub use clifford::{CircuitSpec, CliffordTableau, Gate, GateKind};
pub use pauli::{Pauli1, PauliOperator};
pub use scalar::Real;

pub type PauliChannel = channels::PauliChannel<f64>;
pub type FactorizedChannel = channels::FactorizedChannel<f64>;
pub type DephasingModel = channels::DephasingModel<f64>;
pub type NoiseModel = channels::NoiseModel<f64>;
pub type NoisyGate = channels::NoisyGate<f64>;
pub type SamplingPlan = estimator::SamplingPlan<f64>;
pub type ExperimentRecord = estimator::ExperimentRecord<f64>;
pub type CertificationReport = estimator::CertificationReport<f64>;
pub type DenseChannel = oracle::DenseChannel<f64>;

pub type NoiseModel32 = channels::NoiseModel<f32>;
pub type CertificationReport32 = estimator::CertificationReport<f32>;
