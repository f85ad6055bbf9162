//! Noise models and the noisy gate `Ũ = Λ ∘ U`.
//!
//! Every scalable noise model here is diagonal in the Pauli basis, so its
//! action on a Pauli observable `P` is a single signed factor: the
//! attenuation `Tr(P Λ(P)) / 2ⁿ ∈ [−1, 1]`. For a stochastic Pauli channel
//! `Λ(ρ) = Σ_E p_E E ρ E` this is `Σ_E p_E χ(E, P)` with `χ = +1` when `E`
//! and `P` commute and `−1` otherwise.
//!
//! Noise is placed after the ideal gate. In the certification circuit the
//! input `ρ` is mapped to `U ρ U†` and then attenuated, so the exact overlap
//! with the ideal output `M = U ρ U†` is the attenuation of `M`.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::clifford::{CircuitSpec, CliffordTableau};
use crate::pauli::{enumerate_all, Pauli1, PauliError, PauliOperator};
use crate::scalar::Real;

/// Largest `n` for which a channel is expanded into its full `4ⁿ` error table.
pub const MAX_EXPANSION_QUBITS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("error {0} listed more than once")]
    DuplicateError(String),
    #[error("error operators must be Hermitian, got {0}")]
    NonHermitian(String),
    #[error("T2 of qubit {qubit} must be positive, got {value}")]
    NonPositiveT2 { qubit: usize, value: f64 },
    #[error("gate duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("stepwise dephasing needs {expected} gate durations, got {got}")]
    MissingDurations { expected: usize, got: usize },
    #[error("stepwise dephasing needs the gate's circuit")]
    NeedsCircuit,
    #[error("{n} qubits exceeds the expansion limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

fn check_dims(left: usize, right: usize) -> Result<(), ChannelError> {
    if left == right {
        Ok(())
    } else {
        Err(ChannelError::DimensionMismatch { left, right })
    }
}

fn check_probability<T: Real>(p: T, what: &str) -> Result<(), ChannelError> {
    if p.is_finite() && p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(ChannelError::InvalidProbability(format!("{what} = {p}")))
    }
}

/// Sparse stochastic Pauli channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliChannel<T> {
    n: usize,
    errors: Vec<(PauliOperator, T)>,
}

impl<T: Real> PauliChannel<T> {
    /// Validates and stores an error table. Signs on the error operators are
    /// dropped; probabilities must be non-negative and sum to one.
    pub fn new(n: usize, errors: Vec<(PauliOperator, T)>) -> Result<Self, ChannelError> {
        let mut seen = HashMap::with_capacity(errors.len());
        let mut table = Vec::with_capacity(errors.len());
        let mut total = T::zero();
        for (op, prob) in errors {
            check_dims(n, op.num_qubits())?;
            if !op.is_hermitian() {
                return Err(ChannelError::NonHermitian(op.to_string()));
            }
            check_probability(prob, &format!("p({op})"))?;
            let op = op.unsigned();
            if seen.insert(op.clone(), ()).is_some() {
                return Err(ChannelError::DuplicateError(op.to_string()));
            }
            total = total + prob;
            table.push((op, prob));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_count(4 * table.len().max(1)));
        if (total - T::one()).abs() > tol {
            return Err(ChannelError::NotNormalized(total.as_f64()));
        }
        Ok(Self { n, errors: table })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            errors: vec![(PauliOperator::identity(n), T::one())],
        }
    }

    /// Parses `(pauli-string, probability)` pairs.
    pub fn from_strings(n: usize, errors: &[(&str, T)]) -> Result<Self, ChannelError> {
        let parsed = errors
            .iter()
            .map(|(s, p)| Ok((s.parse::<PauliOperator>()?, *p)))
            .collect::<Result<Vec<_>, ChannelError>>()?;
        Self::new(n, parsed)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn errors(&self) -> &[(PauliOperator, T)] {
        &self.errors
    }

    /// Probability of the error `op`, zero if absent.
    pub fn probability(&self, op: &PauliOperator) -> T {
        let key = op.unsigned();
        self.errors
            .iter()
            .find(|(e, _)| *e == key)
            .map_or(T::zero(), |(_, p)| *p)
    }

    pub fn attenuation(&self, p: &PauliOperator) -> Result<T, ChannelError> {
        check_dims(self.n, p.num_qubits())?;
        Ok(self.attenuation_unchecked(p))
    }

    fn attenuation_unchecked(&self, p: &PauliOperator) -> T {
        if p.is_identity() {
            return T::one();
        }
        self.errors.iter().fold(T::zero(), |acc, (e, prob)| {
            if e.anticommutes_unchecked(p) {
                acc - *prob
            } else {
                acc + *prob
            }
        })
    }

    /// The channel `other ∘ self`: error `E₂E₁` with probability `p₁p₂`.
    pub fn then(&self, other: &PauliChannel<T>) -> Result<PauliChannel<T>, ChannelError> {
        check_dims(self.n, other.n)?;
        let mut merged: HashMap<PauliOperator, T> = HashMap::new();
        let mut order = Vec::new();
        for (e1, p1) in &self.errors {
            for (e2, p2) in &other.errors {
                let e = e2.multiply(e1)?.unsigned();
                let slot = merged.entry(e.clone()).or_insert_with(|| {
                    order.push(e);
                    T::zero()
                });
                *slot = *slot + *p1 * *p2;
            }
        }
        let errors = order
            .into_iter()
            .map(|e| {
                let p = merged[&e];
                (e, p)
            })
            .collect();
        Ok(Self { n: self.n, errors })
    }
}

/// A random stochastic Pauli channel: identity plus up to `max_errors`
/// distinct non-identity errors with random weights.
pub fn random_pauli_channel<T: Real, R: Rng + ?Sized>(
    n: usize,
    max_errors: usize,
    rng: &mut R,
) -> PauliChannel<T> {
    let total = 1usize << (2 * n);
    let count = rng.random_range(1..=max_errors.min(total - 1).max(1));
    let picked = rand::seq::index::sample(rng, total - 1, count);
    let mut ops = vec![PauliOperator::identity(n)];
    ops.extend(picked.into_iter().map(|i| PauliOperator::from_dense_index(n, i + 1)));
    let weights: Vec<f64> = ops.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
    let norm: f64 = weights.iter().sum();
    let mut probs: Vec<T> = weights.iter().map(|w| T::lit(w / norm)).collect();
    // absorb rounding into the identity so the table sums to one
    let rest: T = probs[1..].iter().copied().sum();
    probs[0] = T::one() - rest;
    PauliChannel {
        n,
        errors: ops.into_iter().zip(probs).collect(),
    }
}

/// Per-qubit attenuations `(λ_X, λ_Y, λ_Z)` of a one-qubit Pauli channel.
fn single_qubit_attenuations<T: Real>(channel: &PauliChannel<T>) -> [T; 3] {
    Pauli1::NON_IDENTITY.map(|l| channel.attenuation_unchecked(&PauliOperator::from_letters(&[l])))
}

fn letter_slot(letter: Pauli1) -> usize {
    match letter {
        Pauli1::X => 0,
        Pauli1::Y => 1,
        Pauli1::Z => 2,
        Pauli1::I => unreachable!("identity has unit attenuation"),
    }
}

/// Tensor product of independent single-qubit Pauli channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedChannel<T> {
    factors: Vec<PauliChannel<T>>,
    attenuations: Vec<[T; 3]>,
}

impl<T: Real> FactorizedChannel<T> {
    pub fn new(factors: Vec<PauliChannel<T>>) -> Result<Self, ChannelError> {
        if let Some(f) = factors.iter().find(|f| f.n != 1) {
            return Err(ChannelError::DimensionMismatch { left: 1, right: f.n });
        }
        let attenuations = factors.iter().map(single_qubit_attenuations).collect();
        Ok(Self {
            factors,
            attenuations,
        })
    }

    /// Same single-qubit channel on every qubit.
    pub fn uniform(n: usize, factor: &PauliChannel<T>) -> Result<Self, ChannelError> {
        Self::new(vec![factor.clone(); n])
    }

    pub fn num_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[PauliChannel<T>] {
        &self.factors
    }

    pub fn attenuation(&self, p: &PauliOperator) -> Result<T, ChannelError> {
        check_dims(self.num_qubits(), p.num_qubits())?;
        Ok(self.attenuation_unchecked(p))
    }

    fn attenuation_unchecked(&self, p: &PauliOperator) -> T {
        p.support()
            .map(|q| self.attenuations[q][letter_slot(p.letter(q))])
            .fold(T::one(), |acc, f| acc * f)
    }

    /// Full sparse error table.
    pub fn expand(&self) -> Result<PauliChannel<T>, ChannelError> {
        let n = self.num_qubits();
        if n > MAX_EXPANSION_QUBITS {
            return Err(ChannelError::TooLarge {
                n,
                max: MAX_EXPANSION_QUBITS,
            });
        }
        let errors = enumerate_all(n)
            .map(|e| {
                let prob = (0..n)
                    .map(|q| {
                        self.factors[q].probability(&PauliOperator::from_letters(&[e.letter(q)]))
                    })
                    .fold(T::one(), |acc, p| acc * p);
                (e, prob)
            })
            .filter(|(_, p)| *p > T::zero())
            .collect();
        Ok(PauliChannel { n, errors })
    }
}

/// Global depolarizing channel: with probability `p` the state is replaced by
/// the maximally mixed state, so every non-identity Pauli is attenuated by
/// `1 − p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Depolarizing<T> {
    n: usize,
    p: T,
}

impl<T: Real> Depolarizing<T> {
    pub fn new(n: usize, p: T) -> Result<Self, ChannelError> {
        check_probability(p, "depolarizing p")?;
        Ok(Self { n, p })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> T {
        self.p
    }

    fn attenuation_unchecked(&self, q: &PauliOperator) -> T {
        if q.is_identity() {
            T::one()
        } else {
            T::one() - self.p
        }
    }

    /// Sparse form: `p / 4ⁿ` on every Pauli plus `1 − p` extra on the identity.
    pub fn expand(&self) -> Result<PauliChannel<T>, ChannelError> {
        if self.n > MAX_EXPANSION_QUBITS {
            return Err(ChannelError::TooLarge {
                n: self.n,
                max: MAX_EXPANSION_QUBITS,
            });
        }
        let share = self.p / T::from_count(1usize << (2 * self.n));
        let errors = enumerate_all(self.n)
            .map(|e| {
                let prob = if e.is_identity() {
                    T::one() - self.p + share
                } else {
                    share
                };
                (e, prob)
            })
            .collect();
        Ok(PauliChannel { n: self.n, errors })
    }
}

/// Global depolarizing noise of strength `p`.
pub fn depolarizing<T: Real>(n: usize, p: T) -> Result<Depolarizing<T>, ChannelError> {
    Depolarizing::new(n, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DephasingMode {
    /// One phase-damping channel for the whole gate duration, after the gate.
    Endpoint,
    /// Damping accumulated gate by gate as the Pauli propagates.
    Stepwise,
}

/// Per-qubit phase damping over a gate of duration `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingModel<T> {
    t2: Vec<T>,
    tau: T,
    mode: DephasingMode,
    step_durations: Option<Vec<T>>,
}

impl<T: Real> DephasingModel<T> {
    pub fn new(t2: Vec<T>, tau: T, mode: DephasingMode) -> Result<Self, ChannelError> {
        for (qubit, &value) in t2.iter().enumerate() {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(ChannelError::NonPositiveT2 {
                    qubit,
                    value: value.as_f64(),
                });
            }
        }
        if !(tau >= T::zero()) || !tau.is_finite() {
            return Err(ChannelError::NegativeDuration(tau.as_f64()));
        }
        Ok(Self {
            t2,
            tau,
            mode,
            step_durations: None,
        })
    }

    pub fn uniform(n: usize, t2: T, tau: T, mode: DephasingMode) -> Result<Self, ChannelError> {
        Self::new(vec![t2; n], tau, mode)
    }

    /// Explicit per-gate durations for the stepwise mode.
    pub fn with_step_durations(mut self, durations: Vec<T>) -> Result<Self, ChannelError> {
        if let Some(&d) = durations.iter().find(|&&d| !(d >= T::zero())) {
            return Err(ChannelError::NegativeDuration(d.as_f64()));
        }
        self.step_durations = Some(durations);
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.t2.len()
    }

    pub fn t2(&self) -> &[T] {
        &self.t2
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn mode(&self) -> DephasingMode {
        self.mode
    }

    /// Z-flip probability `q_j = (1 − e^{−τ/T2_j}) / 2` per qubit.
    pub fn flip_probabilities(&self) -> Vec<T> {
        self.t2
            .iter()
            .map(|&t2| (T::one() - (-self.tau / t2).exp()) / T::lit(2.0))
            .collect()
    }

    /// `true` when the model cannot attenuate anything.
    pub fn is_trivial(&self) -> bool {
        self.tau == T::zero()
            && self
                .step_durations
                .as_ref()
                .is_none_or(|d| d.iter().all(|&x| x == T::zero()))
    }

    /// Durations for each gate of `circuit`: the explicit list, or `τ`
    /// split evenly.
    pub fn durations_for(&self, circuit: &CircuitSpec) -> Result<Vec<T>, ChannelError> {
        match &self.step_durations {
            Some(d) if d.len() == circuit.len() => Ok(d.clone()),
            Some(d) => Err(ChannelError::MissingDurations {
                expected: circuit.len(),
                got: d.len(),
            }),
            None if circuit.is_empty() => Ok(Vec::new()),
            None => Ok(vec![self.tau / T::from_count(circuit.len()); circuit.len()]),
        }
    }

    /// Damping rate `1/T2_j` summed over the transverse (X or Y) qubits of `p`.
    fn transverse_rate(&self, p: &PauliOperator) -> T {
        p.x_support().map(|q| self.t2[q].recip()).fold(T::zero(), |a, r| a + r)
    }
}

/// Phase damping as a factorized Z-flip channel.
pub fn dephasing<T: Real>(model: &DephasingModel<T>) -> FactorizedChannel<T> {
    let factors = model
        .flip_probabilities()
        .into_iter()
        .map(|q| {
            let id = PauliOperator::identity(1);
            let z = PauliOperator::from_letters(&[Pauli1::Z]);
            PauliChannel {
                n: 1,
                errors: vec![(id, T::one() - q), (z, q)],
            }
        })
        .collect();
    FactorizedChannel::new(factors).expect("single-qubit factors")
}

/// Propagates `p` through `circuit` gate by gate; after each gate every qubit
/// whose current letter is X or Y decays by `e^{−τ_step / T2_j}`. Returns the
/// accumulated factor. Gates never change the sign of the factor, so the
/// result lies in `(0, 1]`.
pub fn stepwise_attenuation<T: Real>(
    model: &DephasingModel<T>,
    circuit: &CircuitSpec,
    p: &PauliOperator,
) -> Result<T, ChannelError> {
    check_dims(model.num_qubits(), circuit.num_qubits())?;
    check_dims(model.num_qubits(), p.num_qubits())?;
    let durations = model.durations_for(circuit)?;
    if circuit.is_empty() {
        return Ok((-model.tau * model.transverse_rate(p)).exp());
    }
    let mut current = p.clone();
    let mut exponent = T::zero();
    for (gate, &d) in circuit.gates().iter().zip(&durations) {
        current = gate.conjugate(&current);
        exponent = exponent + d * model.transverse_rate(&current);
    }
    Ok((-exponent).exp())
}

/// Any noise model `Λ` supported by the scalable backend.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel<T> {
    Depolarizing(Depolarizing<T>),
    Pauli(PauliChannel<T>),
    Factorized(FactorizedChannel<T>),
    Dephasing(DephasingModel<T>),
    /// Applied in list order: the first entry acts first.
    Composite(Vec<NoiseModel<T>>),
}

impl<T: Real> NoiseModel<T> {
    pub fn identity(n: usize) -> Self {
        NoiseModel::Pauli(PauliChannel::identity(n))
    }

    pub fn num_qubits(&self) -> Option<usize> {
        match self {
            NoiseModel::Depolarizing(d) => Some(d.num_qubits()),
            NoiseModel::Pauli(c) => Some(c.num_qubits()),
            NoiseModel::Factorized(c) => Some(c.num_qubits()),
            NoiseModel::Dephasing(m) => Some(m.num_qubits()),
            NoiseModel::Composite(parts) => parts.first().and_then(|p| p.num_qubits()),
        }
    }

    /// Checks that every component acts on `n` qubits.
    pub fn check_qubits(&self, n: usize) -> Result<(), ChannelError> {
        match self {
            NoiseModel::Composite(parts) => parts.iter().try_for_each(|p| p.check_qubits(n)),
            other => check_dims(n, other.num_qubits().unwrap_or(n)),
        }
    }

    pub fn needs_circuit(&self) -> bool {
        match self {
            NoiseModel::Dephasing(m) => m.mode == DephasingMode::Stepwise,
            NoiseModel::Composite(parts) => parts.iter().any(NoiseModel::needs_circuit),
            _ => false,
        }
    }

    /// Attenuation of `p`. Fails for stepwise dephasing, which needs the
    /// gate's circuit; see [`NoiseModel::gate_attenuation`].
    pub fn attenuation(&self, p: &PauliOperator) -> Result<T, ChannelError> {
        self.check_qubits(p.num_qubits())?;
        self.attenuation_in_context(p, p, None)
    }

    /// Attenuation seen by the certification circuit for input `input` and
    /// ideal output `output = U input U†`.
    pub fn gate_attenuation(
        &self,
        input: &PauliOperator,
        output: &PauliOperator,
        circuit: Option<&CircuitSpec>,
    ) -> Result<T, ChannelError> {
        self.attenuation_in_context(input, output, circuit)
    }

    fn attenuation_in_context(
        &self,
        input: &PauliOperator,
        output: &PauliOperator,
        circuit: Option<&CircuitSpec>,
    ) -> Result<T, ChannelError> {
        Ok(match self {
            NoiseModel::Depolarizing(d) => d.attenuation_unchecked(output),
            NoiseModel::Pauli(c) => c.attenuation_unchecked(output),
            NoiseModel::Factorized(c) => c.attenuation_unchecked(output),
            NoiseModel::Dephasing(m) => match m.mode {
                DephasingMode::Endpoint => (-m.tau * m.transverse_rate(output)).exp(),
                DephasingMode::Stepwise => {
                    stepwise_attenuation(m, circuit.ok_or(ChannelError::NeedsCircuit)?, input)?
                }
            },
            NoiseModel::Composite(parts) => {
                let mut acc = T::one();
                for part in parts {
                    acc = acc * part.attenuation_in_context(input, output, circuit)?;
                }
                acc
            }
        })
    }
}

/// State-preparation and measurement noise around the certification circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Spam<T> {
    /// Acts on the prepared input before the gate.
    pub prep: NoiseModel<T>,
    /// Acts on the output before the readout.
    pub meas: NoiseModel<T>,
    /// Divide each overlap by its gate-free reference signal.
    pub calibrate: bool,
}

/// Ideal Clifford plus noise: the simulated laboratory gate.
#[derive(Debug, Clone)]
pub struct NoisyGate<T> {
    ideal: CliffordTableau,
    circuit: Option<CircuitSpec>,
    noise: NoiseModel<T>,
    spam: Option<Spam<T>>,
}

impl<T: Real> NoisyGate<T> {
    pub fn new(ideal: CliffordTableau, noise: NoiseModel<T>) -> Result<Self, ChannelError> {
        noise.check_qubits(ideal.num_qubits())?;
        if noise.needs_circuit() {
            return Err(ChannelError::NeedsCircuit);
        }
        Ok(Self {
            ideal,
            circuit: None,
            noise,
            spam: None,
        })
    }

    /// Gate given by its elementary circuit, which stepwise noise follows.
    pub fn from_circuit(circuit: CircuitSpec, noise: NoiseModel<T>) -> Result<Self, ChannelError> {
        let ideal = CliffordTableau::from_circuit(&circuit);
        noise.check_qubits(ideal.num_qubits())?;
        if let NoiseModel::Dephasing(m) = &noise {
            m.durations_for(&circuit)?;
        }
        Ok(Self {
            ideal,
            circuit: Some(circuit),
            noise,
            spam: None,
        })
    }

    pub fn with_spam(mut self, spam: Spam<T>) -> Result<Self, ChannelError> {
        let n = self.num_qubits();
        spam.prep.check_qubits(n)?;
        spam.meas.check_qubits(n)?;
        if spam.prep.needs_circuit() || spam.meas.needs_circuit() {
            return Err(ChannelError::NeedsCircuit);
        }
        self.spam = Some(spam);
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.ideal.num_qubits()
    }

    pub fn ideal(&self) -> &CliffordTableau {
        &self.ideal
    }

    pub fn circuit(&self) -> Option<&CircuitSpec> {
        self.circuit.as_ref()
    }

    pub fn noise(&self) -> &NoiseModel<T> {
        &self.noise
    }

    pub fn spam(&self) -> Option<&Spam<T>> {
        self.spam.as_ref()
    }

    /// Same ideal gate and SPAM with the noise replaced.
    pub fn with_noise(&self, noise: NoiseModel<T>) -> Result<Self, ChannelError> {
        noise.check_qubits(self.num_qubits())?;
        if noise.needs_circuit() && self.circuit.is_none() {
            return Err(ChannelError::NeedsCircuit);
        }
        Ok(Self {
            noise,
            ..self.clone()
        })
    }

    /// The measurement observable `M = U ρ U†`, sign included.
    pub fn observable(&self, input: &PauliOperator) -> Result<PauliOperator, ChannelError> {
        check_dims(self.num_qubits(), input.num_qubits())?;
        Ok(self.ideal.conjugate_unchecked(input))
    }

    /// Exact overlap `Tr(Ũ(ρ) M) / 2ⁿ` of the noisy output with the ideal
    /// observable, SPAM included but not calibrated.
    pub fn overlap(&self, input: &PauliOperator, observable: &PauliOperator) -> Result<T, ChannelError> {
        check_dims(self.num_qubits(), input.num_qubits())?;
        let core = self
            .noise
            .gate_attenuation(input, observable, self.circuit.as_ref())?;
        Ok(match &self.spam {
            None => core,
            Some(spam) => spam.prep.attenuation(input)? * core * spam.meas.attenuation(observable)?,
        })
    }

    /// Gate-free reference signal `Tr(meas(prep(ρ)) ρ) / 2ⁿ`; one without SPAM.
    pub fn calibration(&self, input: &PauliOperator) -> Result<T, ChannelError> {
        match &self.spam {
            None => Ok(T::one()),
            Some(spam) => Ok(spam.prep.attenuation(input)? * spam.meas.attenuation(input)?),
        }
    }
}
