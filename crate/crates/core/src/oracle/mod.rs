//! Dense ground truth for small systems.
//!
//! Channels are held as Pauli transfer matrices `R[a,b] = Tr(P_a Λ(P_b))/2ⁿ`
//! over the normalized Pauli basis in dense-index order, optionally with the
//! Kraus operators they were built from. All arithmetic runs in `f64`; the
//! stored matrices use the caller's scalar.
//!
//! The `C₁^{⊗n}Π` twirl is never enumerated. Conjugating by a uniformly
//! random Pauli already removes every off-diagonal PTM element, leaving the
//! Pauli channel with `q_E = 4⁻ⁿ Σ_P χ(E,P) R[P,P]`. Averaging further over
//! single-qubit Cliffords and qubit permutations only spreads `q_E` evenly
//! across each weight class, so the weight totals `Pr(w) = Σ_{|E|=w} q_E`
//! are already those of the full twirl.

mod backend;
mod matrices;

pub use backend::DenseGate;
pub use matrices::{circuit_unitary, gate_unitary, pauli_matrix, CMatrix, SparsePauli};

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channels::{
    dephasing, ChannelError, DephasingMode, DephasingModel, Depolarizing, FactorizedChannel,
    NoiseModel, NoisyGate, PauliChannel,
};
use crate::clifford::{
    enumerate_group, single_qubit_clifford_group, CircuitSpec, CliffordError, CliffordTableau,
};
use crate::pauli::{enumerate_all, PauliError, PauliOperator};
use crate::scalar::Real;

/// Largest system the dense backend accepts (PTM dimension 1024).
pub const MAX_DENSE_QUBITS: usize = 5;
/// Largest system for the twirl spectrum.
pub const MAX_SPECTRUM_QUBITS: usize = 4;

const TP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} qubits exceeds the dense limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("channel is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("matrix has shape {rows}x{cols}, expected {expected}x{expected}")]
    BadShape { rows: usize, cols: usize, expected: usize },
    #[error("stepwise dephasing needs the gate's circuit")]
    NeedsCircuit,
    #[error("need at least two states, got {0}")]
    TooFewStates(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

fn check_size(n: usize, max: usize) -> Result<(), OracleError> {
    if n > max {
        Err(OracleError::TooLarge { n, max })
    } else {
        Ok(())
    }
}

fn check_dims(left: usize, right: usize) -> Result<(), OracleError> {
    if left != right {
        Err(OracleError::DimensionMismatch { left, right })
    } else {
        Ok(())
    }
}

fn all_paulis(n: usize) -> Vec<SparsePauli> {
    enumerate_all(n).map(|p| SparsePauli::new(&p)).collect()
}

/// PTM of the linear map `f` on `2ⁿ×2ⁿ` matrices.
fn ptm_from_map(n: usize, f: impl Fn(&CMatrix) -> CMatrix) -> DMatrix<f64> {
    let paulis = all_paulis(n);
    let d = (1usize << n) as f64;
    let dim = paulis.len();
    let mut r = DMatrix::zeros(dim, dim);
    for (b, pb) in paulis.iter().enumerate() {
        let image = f(&pb.to_dense());
        for (a, pa) in paulis.iter().enumerate() {
            r[(a, b)] = pa.trace_with(&image).re / d;
        }
    }
    r
}

fn ptm_from_kraus(n: usize, kraus: &[CMatrix]) -> DMatrix<f64> {
    ptm_from_map(n, |p| kraus.iter().map(|k| k * p * k.adjoint()).sum())
}

fn to_complex<T: Real>(m: &CMatrix) -> DMatrix<Complex<T>> {
    m.map(|c| Complex::new(T::lit(c.re), T::lit(c.im)))
}

fn from_complex<T: Real>(m: &DMatrix<Complex<T>>) -> CMatrix {
    m.map(|c| Complex64::new(c.re.as_f64(), c.im.as_f64()))
}

/// A channel on `n ≤ 5` qubits in Pauli-transfer form.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseChannel<T> {
    n: usize,
    ptm: DMatrix<T>,
    kraus: Option<Vec<DMatrix<Complex<T>>>>,
}

impl<T: Real> DenseChannel<T> {
    fn from_f64(n: usize, ptm: DMatrix<f64>, kraus: Option<Vec<CMatrix>>) -> Self {
        Self {
            n,
            ptm: ptm.map(T::lit),
            kraus: kraus.map(|ks| ks.iter().map(to_complex).collect()),
        }
    }

    pub(crate) fn ptm_f64(&self) -> DMatrix<f64> {
        self.ptm.map(T::as_f64)
    }

    pub fn identity(n: usize) -> Result<Self, OracleError> {
        check_size(n, MAX_DENSE_QUBITS)?;
        let dim = 1 << (2 * n);
        Ok(Self::from_f64(
            n,
            DMatrix::identity(dim, dim),
            Some(vec![CMatrix::identity(1 << n, 1 << n)]),
        ))
    }

    /// Channel `ρ ↦ Σ_k K ρ K†`; the operators must satisfy `Σ K†K = I`.
    pub fn from_kraus(n: usize, kraus: Vec<DMatrix<Complex<T>>>) -> Result<Self, OracleError> {
        check_size(n, MAX_DENSE_QUBITS)?;
        let d = 1 << n;
        let ks: Vec<CMatrix> = kraus.iter().map(from_complex).collect();
        if let Some(k) = ks.iter().find(|k| k.shape() != (d, d)) {
            return Err(OracleError::BadShape { rows: k.nrows(), cols: k.ncols(), expected: d });
        }
        let completeness: CMatrix = ks.iter().map(|k| k.adjoint() * k).sum::<CMatrix>()
            - CMatrix::identity(d, d);
        let dev = completeness.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > TP_TOLERANCE {
            return Err(OracleError::NotTracePreserving(dev));
        }
        Ok(Self::from_f64(n, ptm_from_kraus(n, &ks), Some(ks)))
    }

    /// Channel from a Pauli transfer matrix; checks trace preservation.
    pub fn from_ptm(n: usize, ptm: DMatrix<T>) -> Result<Self, OracleError> {
        check_size(n, MAX_DENSE_QUBITS)?;
        let dim = 1 << (2 * n);
        if ptm.shape() != (dim, dim) {
            return Err(OracleError::BadShape { rows: ptm.nrows(), cols: ptm.ncols(), expected: dim });
        }
        let ch = Self { n, ptm, kraus: None };
        let dev = ch.trace_preservation_error();
        if dev > TP_TOLERANCE {
            return Err(OracleError::NotTracePreserving(dev));
        }
        Ok(ch)
    }

    /// Unitary channel `ρ ↦ U ρ U†`.
    pub fn from_unitary(n: usize, u: &CMatrix) -> Result<Self, OracleError> {
        Self::from_kraus(n, vec![to_complex(u)])
    }

    /// Unitary channel of a circuit, built from the elementary gate matrices.
    pub fn from_circuit(circuit: &CircuitSpec) -> Result<Self, OracleError> {
        check_size(circuit.num_qubits(), MAX_DENSE_QUBITS)?;
        Self::from_unitary(circuit.num_qubits(), &circuit_unitary(circuit))
    }

    /// Signed-permutation PTM of a tableau.
    pub fn from_tableau(t: &CliffordTableau) -> Result<Self, OracleError> {
        let n = t.num_qubits();
        check_size(n, MAX_DENSE_QUBITS)?;
        let dim = 1 << (2 * n);
        let mut r = DMatrix::zeros(dim, dim);
        for (b, p) in enumerate_all(n).enumerate() {
            let image = t.conjugate(&p)?;
            r[(image.dense_index(), b)] = image.sign() as f64;
        }
        Ok(Self::from_f64(n, r, None))
    }

    /// Pauli channel with Kraus operators `√p_E·E`. The PTM is diagonal with
    /// `R[P,P] = Σ_E p_E Tr(P E P E†)/2ⁿ`.
    pub fn pauli_channel(channel: &PauliChannel<T>) -> Result<Self, OracleError> {
        let n = channel.num_qubits();
        check_size(n, MAX_DENSE_QUBITS)?;
        let paulis = all_paulis(n);
        let errors: Vec<(SparsePauli, f64)> = channel
            .errors()
            .iter()
            .map(|(e, p)| (SparsePauli::new(e), p.as_f64()))
            .collect();
        let d = (1usize << n) as f64;
        let mut r = DMatrix::zeros(paulis.len(), paulis.len());
        for (a, pa) in paulis.iter().enumerate() {
            r[(a, a)] = errors
                .iter()
                .map(|(e, p)| p * pa.mul(&e.mul(pa).mul(&e.adjoint())).trace().re / d)
                .sum();
        }
        let kraus = (errors.len() <= 256).then(|| {
            errors
                .iter()
                .map(|(e, p)| e.to_dense() * Complex64::new(p.sqrt(), 0.0))
                .collect()
        });
        Ok(Self::from_f64(n, r, kraus))
    }

    /// Product channel: the PTM is the Kronecker product of the factors'.
    pub fn factorized(channel: &FactorizedChannel<T>) -> Result<Self, OracleError> {
        check_size(channel.num_qubits(), MAX_DENSE_QUBITS)?;
        let mut out = Self::from_f64(0, DMatrix::identity(1, 1), Some(vec![CMatrix::identity(1, 1)]));
        for f in channel.factors() {
            out = out.tensor(&Self::pauli_channel(f)?)?;
        }
        Ok(out)
    }

    /// `ρ ↦ (1−p)ρ + p·I/2ⁿ`, whose PTM is `diag(1, 1−p, …, 1−p)`.
    pub fn depolarizing(channel: &Depolarizing<T>) -> Result<Self, OracleError> {
        let n = channel.num_qubits();
        check_size(n, MAX_DENSE_QUBITS)?;
        let dim = 1 << (2 * n);
        let mut r = DMatrix::identity(dim, dim) * (1.0 - channel.p().as_f64());
        r[(0, 0)] = 1.0;
        Ok(Self::from_f64(n, r, None))
    }

    /// Endpoint dephasing as per-qubit Z-flip Kraus pairs.
    pub fn dephasing(model: &DephasingModel<T>) -> Result<Self, OracleError> {
        if model.mode() == DephasingMode::Stepwise {
            return Err(OracleError::NeedsCircuit);
        }
        Self::factorized(&dephasing(model))
    }

    /// Independent amplitude damping with decay probability `gamma` on every
    /// qubit: `K₀ = diag(1, √(1−γ))`, `K₁ = √γ·|0⟩⟨1|`.
    pub fn amplitude_damping(n: usize, gamma: T) -> Result<Self, OracleError> {
        check_size(n, MAX_DENSE_QUBITS)?;
        let g = gamma.as_f64();
        if !(0.0..=1.0).contains(&g) {
            return Err(OracleError::InvalidParameter(format!(
                "damping probability must lie in [0, 1], got {g}"
            )));
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - g).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(g.sqrt()), c(0.0), c(0.0)]);
        let mut kraus = vec![CMatrix::identity(1, 1)];
        for _ in 0..n {
            kraus = kraus
                .iter()
                .flat_map(|k| [k.kronecker(&k0), k.kronecker(&k1)])
                .collect();
        }
        let single = ptm_from_kraus(1, &[k0, k1]);
        let mut r = DMatrix::identity(1, 1);
        for _ in 0..n {
            r = r.kronecker(&single);
        }
        Ok(Self::from_f64(n, r, Some(kraus)))
    }

    /// Dense form of a noise model. Stepwise dephasing needs the gate; see
    /// [`DenseChannel::noise_of_gate`].
    pub fn from_noise_model(model: &NoiseModel<T>) -> Result<Self, OracleError> {
        match model {
            NoiseModel::Depolarizing(d) => Self::depolarizing(d),
            NoiseModel::Pauli(c) => Self::pauli_channel(c),
            NoiseModel::Factorized(c) => Self::factorized(c),
            NoiseModel::Dephasing(m) => Self::dephasing(m),
            NoiseModel::Composite(parts) => compose_all(parts, Self::from_noise_model),
        }
    }

    /// The noise `Λ` of a gate, with `Ũ = Λ ∘ U`. Stepwise dephasing is
    /// integrated gate by gate and then divided by the ideal unitary.
    pub fn noise_of_gate(gate: &NoisyGate<T>) -> Result<Self, OracleError> {
        noise_in_context(gate.noise(), gate)
    }

    /// The ideal gate: from its circuit when known, else from the tableau.
    pub fn ideal_of_gate(gate: &NoisyGate<T>) -> Result<Self, OracleError> {
        match gate.circuit() {
            Some(c) => Self::from_circuit(c),
            None => Self::from_tableau(gate.ideal()),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn ptm(&self) -> &DMatrix<T> {
        &self.ptm
    }

    pub fn kraus(&self) -> Option<&[DMatrix<Complex<T>>]> {
        self.kraus.as_deref()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &DenseChannel<T>) -> Result<Self, OracleError> {
        check_dims(self.n, next.n)?;
        let kraus = match (&self.kraus, &next.kraus) {
            (Some(a), Some(b)) if a.len() * b.len() <= 256 => Some(
                b.iter()
                    .flat_map(|kb| a.iter().map(move |ka| from_complex(kb) * from_complex(ka)))
                    .collect(),
            ),
            _ => None,
        };
        Ok(Self::from_f64(self.n, next.ptm_f64() * self.ptm_f64(), kraus))
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &DenseChannel<T>) -> Result<Self, OracleError> {
        check_size(self.n + other.n, MAX_DENSE_QUBITS)?;
        let kraus = match (&self.kraus, &other.kraus) {
            (Some(a), Some(b)) if a.len() * b.len() <= 256 => Some(
                a.iter()
                    .flat_map(|ka| b.iter().map(move |kb| from_complex(ka).kronecker(&from_complex(kb))))
                    .collect(),
            ),
            _ => None,
        };
        Ok(Self::from_f64(
            self.n + other.n,
            self.ptm_f64().kronecker(&other.ptm_f64()),
            kraus,
        ))
    }

    /// Largest deviation of the first PTM row from `(1, 0, …, 0)`.
    pub fn trace_preservation_error(&self) -> f64 {
        let r = self.ptm_f64();
        (0..r.ncols())
            .map(|b| (r[(0, b)] - if b == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the trace-normalized Choi matrix
    /// `J = 4⁻ⁿ Σ_{a,b} R[a,b]·P_bᵀ ⊗ P_a`; non-negative iff the channel is
    /// completely positive.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let n = self.n;
        let d = 1usize << n;
        let r = self.ptm_f64();
        let paulis = all_paulis(n);
        let mut j = CMatrix::zeros(d * d, d * d);
        for (b, pb) in paulis.iter().enumerate() {
            for (a, pa) in paulis.iter().enumerate() {
                let w = r[(a, b)];
                if w == 0.0 {
                    continue;
                }
                for r1 in 0..d {
                    // P_bᵀ[r1, r1 ⊕ f_b] = coef_b[r1]
                    let c1 = pb.coef[r1];
                    for r2 in 0..d {
                        let c2 = pa.coef[r2 ^ pa.flip];
                        j[(r1 * d + r2, (r1 ^ pb.flip) * d + (r2 ^ pa.flip))] += c1 * c2 * w;
                    }
                }
            }
        }
        j /= Complex64::new((d * d) as f64, 0.0);
        j.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn compose_all<T: Real>(
    parts: &[NoiseModel<T>],
    mut each: impl FnMut(&NoiseModel<T>) -> Result<DenseChannel<T>, OracleError>,
) -> Result<DenseChannel<T>, OracleError> {
    let mut iter = parts.iter();
    let first = iter
        .next()
        .ok_or_else(|| OracleError::InvalidParameter("empty composite noise".into()))?;
    let mut acc = each(first)?;
    for p in iter {
        acc = acc.then(&each(p)?)?;
    }
    Ok(acc)
}

fn noise_in_context<T: Real>(model: &NoiseModel<T>, gate: &NoisyGate<T>) -> Result<DenseChannel<T>, OracleError> {
    match model {
        NoiseModel::Dephasing(m) if m.mode() == DephasingMode::Stepwise => {
            let circuit = gate.circuit().ok_or(OracleError::NeedsCircuit)?;
            let n = circuit.num_qubits();
            check_size(n, MAX_DENSE_QUBITS)?;
            let durations = m.durations_for(circuit)?;
            let dim = 1 << (2 * n);
            let mut actual = DMatrix::<f64>::identity(dim, dim);
            let mut ideal = DMatrix::<f64>::identity(dim, dim);
            for (g, &d) in circuit.gates().iter().zip(&durations) {
                let step = DenseChannel::<f64>::from_unitary(n, &gate_unitary(g, n))?.ptm_f64();
                let decay = DephasingModel::new(
                    m.t2().iter().map(|t| t.as_f64()).collect(),
                    d.as_f64(),
                    DephasingMode::Endpoint,
                )?;
                let decay = DenseChannel::<f64>::dephasing(&decay)?.ptm_f64();
                actual = decay * &step * actual;
                ideal = step * ideal;
            }
            // Λ = Ũ ∘ U†, and U is orthogonal in the Pauli basis.
            Ok(DenseChannel::from_f64(n, actual * ideal.transpose(), None))
        }
        NoiseModel::Composite(parts) => compose_all(parts, |p| noise_in_context(p, gate)),
        other => DenseChannel::from_noise_model(other),
    }
}

/// Dense `Ũ = Λ ∘ U` of a noisy gate (SPAM excluded).
pub fn densify_noisy_gate<T: Real>(gate: &NoisyGate<T>) -> Result<DenseChannel<T>, OracleError> {
    DenseChannel::ideal_of_gate(gate)?.then(&DenseChannel::noise_of_gate(gate)?)
}

/// `Tr(R)/4ⁿ`: the probability that the Pauli-twirled channel applies no
/// error.
pub fn exact_pr0<T: Real>(channel: &DenseChannel<T>) -> T {
    let r = channel.ptm_f64();
    T::lit(r.trace() / r.nrows() as f64)
}

/// PTM of `𝒰† ∘ Ũ`.
fn relative_ptm<T: Real>(ideal: &CliffordTableau, noisy: &DenseChannel<T>) -> Result<DMatrix<f64>, OracleError> {
    check_dims(ideal.num_qubits(), noisy.num_qubits())?;
    let u = DenseChannel::<f64>::from_tableau(ideal)?.ptm_f64();
    Ok(u.transpose() * noisy.ptm_f64())
}

/// The noise `𝒰† ∘ Ũ` relative to the ideal gate.
pub fn relative_noise<T: Real>(ideal: &CliffordTableau, noisy: &DenseChannel<T>) -> Result<DenseChannel<T>, OracleError> {
    Ok(DenseChannel::from_f64(noisy.n, relative_ptm(ideal, noisy)?, None))
}

fn fidelity_from_pr0(pr0: f64, n: usize) -> f64 {
    let d = (n as f64).exp2();
    (d * pr0 + 1.0) / (d + 1.0)
}

/// Exact average fidelity of `Ũ` against the ideal Clifford.
pub fn exact_average_fidelity<T: Real>(ideal: &CliffordTableau, noisy: &DenseChannel<T>) -> Result<T, OracleError> {
    let r = relative_ptm(ideal, noisy)?;
    Ok(T::lit(fidelity_from_pr0(r.trace() / r.nrows() as f64, noisy.n)))
}

/// `⟨ψ|Λ(|ψ⟩⟨ψ|)|ψ⟩ = 2⁻ⁿ Σ_{a,b} c_a R[a,b] c_b` with `c_a = ⟨ψ|P_a|ψ⟩`.
fn state_fidelity(paulis: &[SparsePauli], r: &DMatrix<f64>, psi: &[Complex64]) -> f64 {
    let c = nalgebra::DVector::from_iterator(paulis.len(), paulis.iter().map(|p| p.expectation(psi).re));
    c.dot(&(r * &c)) / psi.len() as f64
}

/// Haar-random pure state: a normalized complex Gaussian vector.
fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    v
}

/// Monte Carlo estimate of the average fidelity over Haar-random pure
/// inputs. Returns the mean and its standard error.
pub fn haar_average_fidelity_mc<T: Real, R: Rng + ?Sized>(
    ideal: &CliffordTableau,
    noisy: &DenseChannel<T>,
    num_states: usize,
    rng: &mut R,
) -> Result<(T, T), OracleError> {
    if num_states < 2 {
        return Err(OracleError::TooFewStates(num_states));
    }
    let r = relative_ptm(ideal, noisy)?;
    let paulis = all_paulis(noisy.n);
    let dim = 1 << noisy.n;
    let samples: Vec<f64> = (0..num_states)
        .map(|_| state_fidelity(&paulis, &r, &haar_state(dim, rng)))
        .collect();
    let (mean, stderr) = mean_and_stderr(&samples);
    Ok((T::lit(mean), T::lit(stderr)))
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Result of averaging a channel over the full Clifford group.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordAverage<T> {
    /// Group average of `⟨0|C†ΛC(|0⟩⟨0|)|0⟩`.
    pub fidelity: T,
    /// Zero: the group is enumerated exactly.
    pub stderr: T,
    pub group_size: usize,
    /// `|C|⁻¹ Σ_C C† ∘ Λ ∘ C`.
    pub averaged: DenseChannel<T>,
    /// Common non-unit diagonal entry `c` of the averaged PTM.
    pub depolarizing_parameter: T,
    /// Largest deviation of the averaged PTM from `diag(1, c, …, c)`.
    pub depolarizing_deviation: T,
}

/// Averages the noise channel `noisy` over every Clifford on 1 or 2 qubits.
/// Group elements are realized as unitaries from their generating circuits.
pub fn clifford_group_average_fidelity<T: Real>(noisy: &DenseChannel<T>) -> Result<CliffordAverage<T>, OracleError> {
    let n = noisy.n;
    let words: Vec<CircuitSpec> = match n {
        1 => single_qubit_clifford_group().iter().map(|c| c.word.clone()).collect(),
        2 => enumerate_group(2)?.into_iter().map(|(_, w)| w).collect(),
        _ => return Err(OracleError::TooLarge { n, max: 2 }),
    };
    let r = noisy.ptm_f64();
    let dim = r.nrows();
    // Fiducial |0…0⟩: c_P = 1 for Z-type Paulis, 0 otherwise.
    let fiducial = nalgebra::DVector::from_iterator(
        dim,
        enumerate_all(n).map(|p| if p.x_support().next().is_none() { 1.0 } else { 0.0 }),
    );
    let mut averaged = DMatrix::<f64>::zeros(dim, dim);
    let mut values = Vec::with_capacity(words.len());
    for word in &words {
        let c = ptm_from_map(n, {
            let u = circuit_unitary(word);
            move |p| &u * p * u.adjoint()
        });
        let twirled = c.transpose() * &r * &c;
        values.push(fiducial.dot(&(&twirled * &fiducial)) / (1usize << n) as f64);
        averaged += twirled;
    }
    averaged /= words.len() as f64;
    let (fidelity, _) = mean_and_stderr(&values);
    let c = (1..dim).map(|i| averaged[(i, i)]).sum::<f64>() / (dim - 1) as f64;
    let mut target = DMatrix::<f64>::identity(dim, dim) * c;
    target[(0, 0)] = 1.0;
    let deviation = (&averaged - target).abs().max();
    Ok(CliffordAverage {
        fidelity: T::lit(fidelity),
        stderr: T::zero(),
        group_size: words.len(),
        averaged: DenseChannel::from_f64(n, averaged, None),
        depolarizing_parameter: T::lit(c),
        depolarizing_deviation: T::lit(deviation),
    })
}

/// Pauli-twirl probabilities of `𝒰† ∘ Ũ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwirlSpectrum<T> {
    /// `q_E` for every Pauli `E` in dense-index order.
    pub probabilities: Vec<T>,
    /// `Pr(w) = Σ_{|E|=w} q_E` for `w = 0..=n`.
    pub by_weight: Vec<T>,
}

/// `q_E = 4⁻ⁿ Σ_P χ(E,P)·R[P,P]` binned by weight, where `χ = ±1` for
/// commuting or anticommuting pairs.
pub fn pauli_twirl_spectrum<T: Real>(
    noisy: &DenseChannel<T>,
    ideal: &CliffordTableau,
) -> Result<TwirlSpectrum<T>, OracleError> {
    let n = noisy.n;
    check_size(n, MAX_SPECTRUM_QUBITS)?;
    let r = relative_ptm(ideal, noisy)?;
    let ops: Vec<PauliOperator> = enumerate_all(n).collect();
    let paulis: Vec<SparsePauli> = ops.iter().map(SparsePauli::new).collect();
    let d = (1usize << n) as f64;
    let dim = paulis.len();
    let mut probabilities = Vec::with_capacity(dim);
    let mut by_weight = vec![0.0; n + 1];
    for (e, pe) in paulis.iter().enumerate() {
        let q: f64 = paulis
            .iter()
            .enumerate()
            .map(|(a, pa)| {
                let chi = pe.mul(pa).mul(&pe.adjoint()).mul(pa).trace().re / d;
                chi * r[(a, a)]
            })
            .sum::<f64>()
            / dim as f64;
        by_weight[ops[e].weight()] += q;
        probabilities.push(T::lit(q));
    }
    Ok(TwirlSpectrum {
        probabilities,
        by_weight: by_weight.into_iter().map(T::lit).collect(),
    })
}
