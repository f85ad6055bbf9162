//! Clifford gates as signed symplectic tableaux.
//!
//! A [`CliffordTableau`] stores the images `U X_j U†` and `U Z_j U†` of the
//! `2n` generators. Conjugating an arbitrary Pauli multiplies the images
//! selected by its bits, so the cost is `O(weight · n / 64)` word operations.

mod circuit;
mod group;

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::pauli::{Pauli1, PauliError, PauliOperator};

pub use circuit::{CircuitSpec, Gate, GateKind};
pub use group::{enumerate_group, single_qubit_clifford_group, SingleQubitClifford};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CliffordError {
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { n: usize, index: usize },
    #[error("gate acts twice on qubit {0}")]
    RepeatedQubit(usize),
    #[error("unknown gate {0:?}")]
    UnknownGate(String),
    #[error("{gate} takes {expected} qubit(s), got {got}")]
    BadArity {
        gate: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("spreading chain is not connected: {0}")]
    DisconnectedChain(String),
    #[error("tableau violates the symplectic condition: {0}")]
    NotSymplectic(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n: usize,
    x_images: Vec<PauliOperator>,
    z_images: Vec<PauliOperator>,
}

/// Tableau of `exp(−iπ/4 · G)` for a Hermitian Pauli generator `G`:
/// commuting generators are fixed and anticommuting ones map to `−i·G·P`.
fn quarter_rotation(generator: &PauliOperator) -> CliffordTableau {
    let n = generator.num_qubits();
    let image = |p: PauliOperator| {
        if generator.anticommutes_unchecked(&p) {
            let mut out = generator.clone();
            out.mul_assign_right(&p);
            let phase = out.phase() + 3;
            out.with_phase(phase)
        } else {
            p
        }
    };
    let x_images = (0..n).map(|j| image(PauliOperator::single(n, j, Pauli1::X).unwrap())).collect();
    let z_images = (0..n).map(|j| image(PauliOperator::single(n, j, Pauli1::Z).unwrap())).collect();
    CliffordTableau { n, x_images, z_images }
}

fn parse_local(s: &str) -> PauliOperator {
    s.parse().expect("static Pauli literal")
}

/// The gate's action on its own 1 or 2 qubits.
fn local_tableau(kind: GateKind) -> CliffordTableau {
    let images = |xs: &[&str], zs: &[&str]| CliffordTableau {
        n: xs.len(),
        x_images: xs.iter().map(|s| parse_local(s)).collect(),
        z_images: zs.iter().map(|s| parse_local(s)).collect(),
    };
    match kind {
        GateKind::H => images(&["Z"], &["X"]),
        GateKind::S => images(&["Y"], &["Z"]),
        GateKind::Cnot => images(&["XX", "IX"], &["ZI", "ZZ"]),
        GateKind::X90 => quarter_rotation(&parse_local("X")),
        GateKind::Y90 => quarter_rotation(&parse_local("Y")),
        GateKind::Z90 => quarter_rotation(&parse_local("Z")),
        GateKind::Zz90 => quarter_rotation(&parse_local("ZZ")),
    }
}

fn cached_local_tableau(kind: GateKind) -> &'static CliffordTableau {
    use std::sync::OnceLock;
    static CACHE: OnceLock<Vec<CliffordTableau>> = OnceLock::new();
    let all = CACHE.get_or_init(|| GateKind::ALL.iter().map(|&k| local_tableau(k)).collect());
    &all[GateKind::ALL.iter().position(|&k| k == kind).unwrap()]
}

impl Gate {
    /// `G p G†` for this gate. Only the gate's qubits are touched.
    pub fn conjugate(&self, p: &PauliOperator) -> PauliOperator {
        let local = cached_local_tableau(self.kind());
        let qubits = self.qubits();
        let mut sub = PauliOperator::identity(qubits.len());
        for (k, &q) in qubits.iter().enumerate() {
            sub.set(k, p.letter(q));
        }
        let image = local.conjugate_unchecked(&sub);
        let mut out = p.clone();
        for (k, &q) in qubits.iter().enumerate() {
            out.set(q, image.letter(k));
        }
        out.with_phase(p.phase() + image.phase())
    }

    /// Full `n`-qubit tableau of this gate.
    pub fn tableau(&self, n: usize) -> Result<CliffordTableau, CliffordError> {
        if let Some(&q) = self.qubits().iter().find(|&&q| q >= n) {
            return Err(CliffordError::QubitOutOfRange { n, index: q });
        }
        let mut t = CliffordTableau::identity(n);
        t.apply_gate(self);
        Ok(t)
    }
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x_images: (0..n).map(|j| PauliOperator::single(n, j, Pauli1::X).unwrap()).collect(),
            z_images: (0..n).map(|j| PauliOperator::single(n, j, Pauli1::Z).unwrap()).collect(),
        }
    }

    /// Builds a tableau from explicit generator images and checks the
    /// symplectic condition.
    pub fn from_images(
        x_images: Vec<PauliOperator>,
        z_images: Vec<PauliOperator>,
    ) -> Result<Self, CliffordError> {
        let n = x_images.len();
        if z_images.len() != n {
            return Err(CliffordError::DimensionMismatch {
                left: n,
                right: z_images.len(),
            });
        }
        if let Some(p) = x_images.iter().chain(&z_images).find(|p| p.num_qubits() != n) {
            return Err(CliffordError::DimensionMismatch {
                left: n,
                right: p.num_qubits(),
            });
        }
        let t = Self { n, x_images, z_images };
        t.validate()?;
        Ok(t)
    }

    /// Tableau of a single elementary gate.
    pub fn elementary(n: usize, kind: GateKind, qubits: &[usize]) -> Result<Self, CliffordError> {
        Gate::new(kind, qubits)?.tableau(n)
    }

    /// Tableau of a whole circuit, gates applied in list order.
    pub fn from_circuit(circuit: &CircuitSpec) -> Self {
        let mut t = Self::identity(circuit.num_qubits());
        for g in circuit.gates() {
            t.apply_gate(g);
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_image(&self, qubit: usize) -> &PauliOperator {
        &self.x_images[qubit]
    }

    pub fn z_image(&self, qubit: usize) -> &PauliOperator {
        &self.z_images[qubit]
    }

    /// Replaces `self` with `gate ∘ self`.
    pub fn apply_gate(&mut self, gate: &Gate) {
        for img in self.x_images.iter_mut().chain(self.z_images.iter_mut()) {
            *img = gate.conjugate(img);
        }
    }

    pub(crate) fn conjugate_unchecked(&self, p: &PauliOperator) -> PauliOperator {
        // p = i^(phase + #Y) · Π_j X_j^{x_j} Z_j^{z_j}, since Y = iXZ.
        let mut out = PauliOperator::identity(self.n);
        for q in p.support() {
            if p.x_bit(q) {
                out.mul_assign_right(&self.x_images[q]);
            }
            if p.z_bit(q) {
                out.mul_assign_right(&self.z_images[q]);
            }
        }
        let extra = (p.phase() as usize + p.y_count()) % 4;
        let phase = out.phase() + extra as u8;
        out.with_phase(phase)
    }

    /// `U p U†`, sign included.
    pub fn conjugate(&self, p: &PauliOperator) -> Result<PauliOperator, CliffordError> {
        if p.num_qubits() != self.n {
            return Err(CliffordError::DimensionMismatch {
                left: self.n,
                right: p.num_qubits(),
            });
        }
        Ok(self.conjugate_unchecked(p))
    }

    /// Tableau of `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &CliffordTableau) -> Result<CliffordTableau, CliffordError> {
        if other.n != self.n {
            return Err(CliffordError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            x_images: other.x_images.iter().map(|p| self.conjugate_unchecked(p)).collect(),
            z_images: other.z_images.iter().map(|p| self.conjugate_unchecked(p)).collect(),
        })
    }

    pub fn inverse(&self) -> CliffordTableau {
        let n = self.n;
        // Bits of U†PU are read off through symplectic products with the
        // images: [U†PU]_x,k = ω(P, U Z_k U†) and [U†PU]_z,k = ω(P, U X_k U†).
        let preimage = |target: &PauliOperator| {
            let mut q = PauliOperator::identity(n);
            for k in 0..n {
                let xb = target.anticommutes_unchecked(&self.z_images[k]);
                let zb = target.anticommutes_unchecked(&self.x_images[k]);
                q.set(k, Pauli1::from_bits(xb, zb));
            }
            // Fix the sign so that U q U† = +target.
            let image = self.conjugate_unchecked(&q);
            debug_assert_eq!(image.unsigned(), target.unsigned());
            if image.phase() == target.phase() {
                q
            } else {
                q.negated()
            }
        };
        let x_images = (0..n).map(|j| preimage(&PauliOperator::single(n, j, Pauli1::X).unwrap())).collect();
        let z_images = (0..n).map(|j| preimage(&PauliOperator::single(n, j, Pauli1::Z).unwrap())).collect();
        Self { n, x_images, z_images }
    }

    /// Checks Hermitian images and the symplectic commutation pattern.
    pub fn validate(&self) -> Result<(), CliffordError> {
        let n = self.n;
        for (j, p) in self.x_images.iter().chain(&self.z_images).enumerate() {
            if !p.is_hermitian() {
                return Err(CliffordError::NotSymplectic(format!("image {j} has phase {}", p.phase())));
            }
            if p.is_identity() {
                return Err(CliffordError::NotSymplectic(format!("image {j} is the identity")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let xz = self.x_images[a].anticommutes_unchecked(&self.z_images[b]);
                if xz != (a == b) {
                    return Err(CliffordError::NotSymplectic(format!(
                        "X{a} and Z{b} images have the wrong commutation"
                    )));
                }
                if b > a
                    && (self.x_images[a].anticommutes_unchecked(&self.x_images[b])
                        || self.z_images[a].anticommutes_unchecked(&self.z_images[b]))
                {
                    return Err(CliffordError::NotSymplectic(format!(
                        "images of generators {a} and {b} anticommute"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// Tensor product of per-qubit single-qubit tableaux.
    pub fn tensor_single_qubit(factors: &[&CliffordTableau]) -> Result<Self, CliffordError> {
        let n = factors.len();
        let mut t = Self::identity(n);
        for (q, f) in factors.iter().enumerate() {
            if f.n != 1 {
                return Err(CliffordError::DimensionMismatch { left: 1, right: f.n });
            }
            let embed = |p: &PauliOperator| {
                let mut out = PauliOperator::single(n, q, p.letter(0)).unwrap();
                out = out.with_phase(p.phase());
                out
            };
            t.x_images[q] = embed(&f.x_images[0]);
            t.z_images[q] = embed(&f.z_images[0]);
        }
        Ok(t)
    }

    /// Relabels qubit `j` as `perm[j]`: `X_j → X_perm[j]`, `Z_j → Z_perm[j]`.
    pub fn permutation(perm: &[usize]) -> Result<Self, CliffordError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &t in perm {
            if t >= n {
                return Err(CliffordError::QubitOutOfRange { n, index: t });
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(CliffordError::RepeatedQubit(t));
            }
        }
        Ok(Self {
            n,
            x_images: perm.iter().map(|&t| PauliOperator::single(n, t, Pauli1::X).unwrap()).collect(),
            z_images: perm.iter().map(|&t| PauliOperator::single(n, t, Pauli1::Z).unwrap()).collect(),
        })
    }
}

impl fmt::Debug for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CliffordTableau(n = {})", self.n)?;
        for j in 0..self.n {
            writeln!(f, "  X{} -> {}   Z{} -> {}", j + 1, self.x_images[j], j + 1, self.z_images[j])?;
        }
        Ok(())
    }
}

/// `e^{−iπ/4 X_i} e^{−iπ/4 Z_i Z_j} e^{−iπ/4 Y_i}` as a circuit: maps
/// `Z_i → Z_i Z_j`.
pub fn block_circuit(n: usize, i: usize, j: usize) -> Result<CircuitSpec, CliffordError> {
    if i == j {
        return Err(CliffordError::RepeatedQubit(i));
    }
    CircuitSpec::from_gates(n, vec![Gate::y90(i), Gate::zz90(i, j)?, Gate::x90(i)])
}

pub fn build_block(n: usize, i: usize, j: usize) -> Result<CliffordTableau, CliffordError> {
    Ok(CliffordTableau::from_circuit(&block_circuit(n, i, j)?))
}

/// Default spreading chain from `seed`: down to qubit 0, then up from the
/// seed to the last qubit. For `seed = n − 1` this is
/// `(n−1, n−2), …, (1, 0)`.
pub fn default_chain(n: usize, seed: usize) -> Vec<(usize, usize)> {
    let mut chain: Vec<(usize, usize)> = (1..=seed).rev().map(|q| (q, q - 1)).collect();
    chain.extend((seed..n.saturating_sub(1)).map(|q| (q, q + 1)));
    chain
}

/// Checks that `chain` spreads from a single seed to every qubit, one new
/// qubit per pair. Returns the seed.
pub fn validate_chain(n: usize, chain: &[(usize, usize)]) -> Result<usize, CliffordError> {
    if chain.len() + 1 != n {
        return Err(CliffordError::DisconnectedChain(format!(
            "{} pairs for {n} qubits, need {}",
            chain.len(),
            n.saturating_sub(1)
        )));
    }
    let Some(&(seed, _)) = chain.first() else {
        return Ok(0);
    };
    let mut covered = vec![false; n];
    for &(s, t) in chain {
        for q in [s, t] {
            if q >= n {
                return Err(CliffordError::QubitOutOfRange { n, index: q });
            }
        }
    }
    covered[seed] = true;
    for &(s, t) in chain {
        if !covered[s] {
            return Err(CliffordError::DisconnectedChain(format!(
                "source {} not yet reached",
                s + 1
            )));
        }
        if covered[t] {
            return Err(CliffordError::DisconnectedChain(format!(
                "target {} already reached",
                t + 1
            )));
        }
        covered[t] = true;
    }
    Ok(seed)
}

/// Circuit of the coherence-spreading gate: one block per chain pair, in
/// chain order.
pub fn spreader_circuit(n: usize, chain: &[(usize, usize)]) -> Result<CircuitSpec, CliffordError> {
    validate_chain(n, chain)?;
    let mut circuit = CircuitSpec::new(n);
    for &(s, t) in chain {
        circuit.extend(&block_circuit(n, s, t)?)?;
    }
    Ok(circuit)
}

/// The gate mapping `Z_seed` to `Z^{⊗n}` via a chain of blocks.
pub fn build_coherence_spreader(
    n: usize,
    chain: &[(usize, usize)],
) -> Result<CliffordTableau, CliffordError> {
    Ok(CliffordTableau::from_circuit(&spreader_circuit(n, chain)?))
}

/// Independent uniform draws from the 24-element single-qubit Clifford group
/// on every qubit.
pub fn random_single_qubit_cliffords<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CliffordTableau {
    let group = single_qubit_clifford_group();
    let picks: Vec<&CliffordTableau> = (0..n)
        .map(|_| &group[rng.random_range(0..group.len())].tableau)
        .collect();
    CliffordTableau::tensor_single_qubit(&picks).expect("single-qubit factors")
}

/// Uniformly random qubit relabeling.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CliffordTableau {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    CliffordTableau::permutation(&perm).expect("valid permutation")
}
