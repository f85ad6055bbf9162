//! Dense matrices for Pauli operators and elementary gates.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::clifford::{CircuitSpec, Gate, GateKind};
use crate::pauli::{Pauli1, PauliOperator};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A Pauli matrix stored as a signed permutation: `P|k⟩ = coef[k]·|k ⊕ flip⟩`.
/// Qubit 0 is the most significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePauli {
    pub flip: usize,
    pub coef: Vec<Complex64>,
}

impl SparsePauli {
    pub fn new(p: &PauliOperator) -> Self {
        let n = p.num_qubits();
        let dim = 1usize << n;
        let mut flip = 0;
        let mut coef = vec![I.powu(p.phase() as u32); dim];
        for q in 0..n {
            let bit = 1usize << (n - 1 - q);
            let letter = p.letter(q);
            if matches!(letter, Pauli1::X | Pauli1::Y) {
                flip |= bit;
            }
            for (k, c) in coef.iter_mut().enumerate() {
                let one = k & bit != 0;
                *c *= match (letter, one) {
                    (Pauli1::I, _) | (Pauli1::X, _) => Complex64::new(1.0, 0.0),
                    // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                    (Pauli1::Y, false) => I,
                    (Pauli1::Y, true) => -I,
                    (Pauli1::Z, false) => Complex64::new(1.0, 0.0),
                    (Pauli1::Z, true) => Complex64::new(-1.0, 0.0),
                };
            }
        }
        Self { flip, coef }
    }

    pub fn dim(&self) -> usize {
        self.coef.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for k in 0..d {
            m[(k ^ self.flip, k)] = self.coef[k];
        }
        m
    }

    /// `self · other`.
    pub fn mul(&self, other: &SparsePauli) -> SparsePauli {
        let coef = (0..self.dim())
            .map(|k| self.coef[k ^ other.flip] * other.coef[k])
            .collect();
        SparsePauli {
            flip: self.flip ^ other.flip,
            coef,
        }
    }

    pub fn adjoint(&self) -> SparsePauli {
        let coef = (0..self.dim()).map(|k| self.coef[k ^ self.flip].conj()).collect();
        SparsePauli { flip: self.flip, coef }
    }

    pub fn trace(&self) -> Complex64 {
        if self.flip != 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coef.iter().sum()
    }

    /// `Tr(self · m)`.
    pub fn trace_with(&self, m: &CMatrix) -> Complex64 {
        (0..self.dim()).map(|k| self.coef[k] * m[(k, k ^ self.flip)]).sum()
    }

    /// `self · m`.
    pub fn left_mul(&self, m: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for k in 0..d {
            for c in 0..d {
                out[(k ^ self.flip, c)] = self.coef[k] * m[(k, c)];
            }
        }
        out
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        (0..self.dim())
            .map(|k| psi[k ^ self.flip].conj() * self.coef[k] * psi[k])
            .sum()
    }
}

/// Dense matrix of `p`, phase included.
pub fn pauli_matrix(p: &PauliOperator) -> CMatrix {
    SparsePauli::new(p).to_dense()
}

fn local(n: usize, letters: &[(usize, Pauli1)]) -> CMatrix {
    let mut p = PauliOperator::identity(n);
    for &(q, l) in letters {
        p.set(q, l);
    }
    pauli_matrix(&p)
}

/// Unitary of one gate on `n` qubits, written as a Pauli expansion:
/// quarter rotations are `(I − iG)/√2`, `H = (X + Z)/√2`,
/// `S = ((1+i)I + (1−i)Z)/2`, `CNOT = (I + Z_c + X_t − Z_c X_t)/2`.
pub fn gate_unitary(gate: &Gate, n: usize) -> CMatrix {
    let q = gate.qubits();
    let id = CMatrix::identity(1 << n, 1 << n);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let quarter = |g: CMatrix| (&id - g * I) * Complex64::new(r, 0.0);
    match gate.kind() {
        GateKind::X90 => quarter(local(n, &[(q[0], Pauli1::X)])),
        GateKind::Y90 => quarter(local(n, &[(q[0], Pauli1::Y)])),
        GateKind::Z90 => quarter(local(n, &[(q[0], Pauli1::Z)])),
        GateKind::Zz90 => quarter(local(n, &[(q[0], Pauli1::Z), (q[1], Pauli1::Z)])),
        GateKind::H => (local(n, &[(q[0], Pauli1::X)]) + local(n, &[(q[0], Pauli1::Z)])) * Complex64::new(r, 0.0),
        GateKind::S => {
            (&id * Complex64::new(1.0, 1.0) + local(n, &[(q[0], Pauli1::Z)]) * Complex64::new(1.0, -1.0))
                * Complex64::new(0.5, 0.0)
        }
        GateKind::Cnot => {
            let zc = local(n, &[(q[0], Pauli1::Z)]);
            let xt = local(n, &[(q[1], Pauli1::X)]);
            let zx = local(n, &[(q[0], Pauli1::Z), (q[1], Pauli1::X)]);
            (&id + zc + xt - zx) * Complex64::new(0.5, 0.0)
        }
    }
}

/// Unitary of a whole circuit: `U_k ⋯ U_1` for gates in application order.
pub fn circuit_unitary(circuit: &CircuitSpec) -> CMatrix {
    let n = circuit.num_qubits();
    let mut u = CMatrix::identity(1 << n, 1 << n);
    for g in circuit.gates() {
        u = gate_unitary(g, n) * u;
    }
    u
}
