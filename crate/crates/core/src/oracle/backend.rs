//! Dense execution of the certification circuit.

use nalgebra::DMatrix;

use super::{densify_noisy_gate, DenseChannel, OracleError};
use crate::channels::NoisyGate;
use crate::clifford::CliffordTableau;
use crate::estimator::{EstimatorError, ExperimentBackend};
use crate::pauli::PauliOperator;
use crate::scalar::Real;

/// A noisy gate held as dense transfer matrices: the full laboratory
/// process `meas ∘ Ũ ∘ prep` and, with SPAM, the gate-free reference
/// `meas ∘ prep`.
#[derive(Debug, Clone)]
pub struct DenseGate<T> {
    ideal: CliffordTableau,
    actual: DMatrix<f64>,
    reference: Option<DMatrix<f64>>,
    calibrate: bool,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> DenseGate<T> {
    /// Ideal gate `ideal` followed by the dense noise channel `noise`.
    pub fn new(ideal: CliffordTableau, noise: &DenseChannel<T>) -> Result<Self, OracleError> {
        let u = DenseChannel::<T>::from_tableau(&ideal)?;
        let actual = u.then(noise)?.ptm_f64();
        Ok(Self {
            ideal,
            actual,
            reference: None,
            calibrate: false,
            _scalar: std::marker::PhantomData,
        })
    }

    /// Dense counterpart of a scalable noisy gate, SPAM included.
    pub fn from_noisy_gate(gate: &NoisyGate<T>) -> Result<Self, OracleError> {
        let mut out = Self {
            ideal: gate.ideal().clone(),
            actual: densify_noisy_gate(gate)?.ptm_f64(),
            reference: None,
            calibrate: false,
            _scalar: std::marker::PhantomData,
        };
        if let Some(spam) = gate.spam() {
            out = out.with_spam(
                &DenseChannel::from_noise_model(&spam.prep)?,
                &DenseChannel::from_noise_model(&spam.meas)?,
                spam.calibrate,
            )?;
        }
        Ok(out)
    }

    /// Wraps the process in preparation and measurement channels.
    pub fn with_spam(
        mut self,
        prep: &DenseChannel<T>,
        meas: &DenseChannel<T>,
        calibrate: bool,
    ) -> Result<Self, OracleError> {
        let n = self.ideal.num_qubits();
        for ch in [prep, meas] {
            if ch.num_qubits() != n {
                return Err(OracleError::DimensionMismatch { left: n, right: ch.num_qubits() });
            }
        }
        let (p, m) = (prep.ptm_f64(), meas.ptm_f64());
        self.actual = &m * &self.actual * &p;
        self.reference = Some(m * p);
        self.calibrate = calibrate;
        Ok(self)
    }

    pub fn ideal(&self) -> &CliffordTableau {
        &self.ideal
    }
}

/// `Tr(Λ(input)·obs)/2ⁿ = sign(obs)·sign(input)·R[obs, input]`.
fn entry(r: &DMatrix<f64>, input: &PauliOperator, obs: &PauliOperator) -> f64 {
    (obs.sign() * input.sign()) as f64 * r[(obs.dense_index(), input.dense_index())]
}

impl<T: Real> ExperimentBackend<T> for DenseGate<T> {
    fn num_qubits(&self) -> usize {
        self.ideal.num_qubits()
    }

    fn observable(&self, input: &PauliOperator) -> Result<PauliOperator, EstimatorError> {
        Ok(self.ideal.conjugate(input)?)
    }

    fn overlap(&self, input: &PauliOperator, observable: &PauliOperator) -> Result<T, EstimatorError> {
        if !input.is_hermitian() || !observable.is_hermitian() {
            return Err(EstimatorError::Backend("non-Hermitian Pauli".into()));
        }
        Ok(T::lit(entry(&self.actual, input, observable)))
    }

    fn calibration(&self, input: &PauliOperator) -> Result<Option<T>, EstimatorError> {
        Ok(self.reference.as_ref().map(|r| T::lit(entry(r, input, input))))
    }

    fn calibrates(&self) -> bool {
        self.calibrate
    }
}
