//! Elementary gates, circuits and the circuit text format.
//!
//! Circuits list gates in application order: the first line acts on the
//! state first. An operator product such as `e^{−iπ/4 X} e^{−iπ/4 ZZ}
//! e^{−iπ/4 Y}` is therefore written bottom-up as `Y90`, `ZZ90`, `X90`.
//!
//! The text format uses 1-based qubit indices, one gate per line:
//!
//! ```text
//! # comment
//! H 3
//! CNOT 1 2
//! ZZ90 3 4
//! ```

use std::fmt;
use std::str::FromStr;

use super::CliffordError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum GateKind {
    H,
    S,
    Cnot,
    X90,
    Y90,
    Z90,
    Zz90,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::H,
        GateKind::S,
        GateKind::Cnot,
        GateKind::X90,
        GateKind::Y90,
        GateKind::Z90,
        GateKind::Zz90,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Zz90 => 2,
            _ => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Cnot => "CNOT",
            GateKind::X90 => "X90",
            GateKind::Y90 => "Y90",
            GateKind::Z90 => "Z90",
            GateKind::Zz90 => "ZZ90",
        }
    }
}

impl FromStr for GateKind {
    type Err = CliffordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| CliffordError::UnknownGate(s.to_string()))
    }
}

/// One gate application on 0-based qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Result<Self, CliffordError> {
        if qubits.len() != kind.arity() {
            return Err(CliffordError::BadArity {
                gate: kind.tag(),
                expected: kind.arity(),
                got: qubits.len(),
            });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CliffordError::RepeatedQubit(qubits[0]));
        }
        Ok(Self {
            kind,
            qubits: qubits.to_vec(),
        })
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, &[q]).unwrap()
    }

    pub fn s(q: usize) -> Self {
        Self::new(GateKind::S, &[q]).unwrap()
    }

    pub fn x90(q: usize) -> Self {
        Self::new(GateKind::X90, &[q]).unwrap()
    }

    pub fn y90(q: usize) -> Self {
        Self::new(GateKind::Y90, &[q]).unwrap()
    }

    pub fn z90(q: usize) -> Self {
        Self::new(GateKind::Z90, &[q]).unwrap()
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self, CliffordError> {
        Self::new(GateKind::Cnot, &[control, target])
    }

    pub fn zz90(a: usize, b: usize) -> Result<Self, CliffordError> {
        Self::new(GateKind::Zz90, &[a, b])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.tag())?;
        for q in &self.qubits {
            write!(f, " {}", q + 1)?;
        }
        Ok(())
    }
}

/// An `n`-qubit gate sequence in application order.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CircuitSpec {
    n: usize,
    gates: Vec<Gate>,
}

impl CircuitSpec {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>) -> Result<Self, CliffordError> {
        let mut circuit = Self::new(n);
        for g in gates {
            circuit.push(g)?;
        }
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CliffordError> {
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.n) {
            return Err(CliffordError::QubitOutOfRange { n: self.n, index: q });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &CircuitSpec) -> Result<(), CliffordError> {
        if other.n != self.n {
            return Err(CliffordError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn single_qubit_count(&self) -> usize {
        self.gates.len() - self.two_qubit_count()
    }

    /// Parses the line-oriented text format. Blank lines and `#` comments are
    /// skipped; indices are 1-based.
    pub fn parse(n: usize, text: &str) -> Result<Self, CliffordError> {
        let mut circuit = Self::new(n);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |message: String| CliffordError::Parse {
                line: lineno + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let kind: GateKind = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|e: CliffordError| at(e.to_string()))?;
            let qubits = fields
                .map(|f| match f.parse::<usize>() {
                    Ok(q) if q >= 1 && q <= n => Ok(q - 1),
                    Ok(q) => Err(at(format!("qubit {q} outside 1..={n}"))),
                    Err(_) => Err(at(format!("bad qubit index {f:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let gate = Gate::new(kind, &qubits).map_err(|e| at(e.to_string()))?;
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    /// Renders the circuit in the text format accepted by [`CircuitSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}
