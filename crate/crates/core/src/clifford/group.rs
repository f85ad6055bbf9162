//! Finite Clifford groups generated by closure.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use super::{CircuitSpec, CliffordError, CliffordTableau, Gate};

/// One element of the single-qubit Clifford group together with an `H`/`S`
/// word that produces it.
#[derive(Debug, Clone)]
pub struct SingleQubitClifford {
    pub tableau: CliffordTableau,
    pub word: CircuitSpec,
}

/// Breadth-first closure of `generators` starting from the identity.
fn closure(n: usize, generators: &[Gate]) -> Vec<(CliffordTableau, CircuitSpec)> {
    let start = CliffordTableau::identity(n);
    let mut seen: HashMap<CliffordTableau, usize> = HashMap::new();
    let mut elements = vec![(start.clone(), CircuitSpec::new(n))];
    seen.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for g in generators {
            let (t, word) = &elements[idx];
            let mut next = t.clone();
            next.apply_gate(g);
            if seen.contains_key(&next) {
                continue;
            }
            let mut next_word = word.clone();
            next_word.push(g.clone()).expect("generator fits");
            seen.insert(next.clone(), elements.len());
            queue.push_back(elements.len());
            elements.push((next, next_word));
        }
    }
    elements
}

/// The 24 single-qubit Cliffords, generated once from `{H, S}` and checked
/// against the symplectic condition.
pub fn single_qubit_clifford_group() -> &'static [SingleQubitClifford] {
    static GROUP: OnceLock<Vec<SingleQubitClifford>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let elements: Vec<_> = closure(1, &[Gate::h(0), Gate::s(0)])
            .into_iter()
            .map(|(tableau, word)| {
                tableau.validate().expect("closure of H and S is symplectic");
                SingleQubitClifford { tableau, word }
            })
            .collect();
        assert_eq!(elements.len(), 24, "single-qubit Clifford group must have 24 elements");
        elements
    })
}

/// Every `n`-qubit Clifford tableau (signs included, global phase dropped),
/// each with a generating circuit. Only `n ≤ 2` is supported: the 3-qubit
/// group already has 92 897 280 elements.
pub fn enumerate_group(n: usize) -> Result<Vec<(CliffordTableau, CircuitSpec)>, CliffordError> {
    if n == 0 || n > 2 {
        return Err(CliffordError::QubitOutOfRange { n: 2, index: n });
    }
    let mut generators = Vec::new();
    for q in 0..n {
        generators.push(Gate::h(q));
        generators.push(Gate::s(q));
    }
    if n == 2 {
        generators.push(Gate::cnot(0, 1)?);
    }
    Ok(closure(n, &generators))
}
