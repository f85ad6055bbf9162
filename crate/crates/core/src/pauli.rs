//! Signed n-qubit Pauli operators in the symplectic (X-bits, Z-bits) form.
//!
//! A [`PauliOperator`] stands for `i^phase · σ_1 ⊗ … ⊗ σ_n` where the letter
//! on qubit `j` is read from the bit pair `(x_j, z_j)`:
//!
//! | x | z | letter |
//! |---|---|--------|
//! | 0 | 0 | I      |
//! | 1 | 0 | X      |
//! | 1 | 1 | Y      |
//! | 0 | 1 | Z      |
//!
//! Products follow `X·Z = −iY`, and the quarter phase is tracked mod 4.
//! Bits are packed 64 qubits per word, so products, commutation checks and
//! weights cost `O(n / 64)` word operations.
//!
//! Qubit indices in the Rust API are 0-based. The text form lists qubit 1
//! (index 0) leftmost: `"+IIIIIIZ"` is `Z` on the seventh qubit.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("weight {weight} is not valid for {n} qubits")]
    InvalidWeight { n: usize, weight: usize },
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { n: usize, index: usize },
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
    #[error("weight-class size overflows u128 for n = {0}")]
    Overflow(usize),
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub const NON_IDENTITY: [Pauli1; 3] = [Pauli1::X, Pauli1::Y, Pauli1::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli1::I => (false, false),
            Pauli1::X => (true, false),
            Pauli1::Y => (true, true),
            Pauli1::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Y => 'Y',
            Pauli1::Z => 'Z',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli1::I),
            'X' => Some(Pauli1::X),
            'Y' => Some(Pauli1::Y),
            'Z' => Some(Pauli1::Z),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

fn check_dims(left: usize, right: usize) -> Result<(), PauliError> {
    if left == right {
        Ok(())
    } else {
        Err(PauliError::DimensionMismatch { left, right })
    }
}

/// Exponent of `i` picked up when the single-qubit Paulis in `(x1, z1)` are
/// multiplied on the right by `(x2, z2)`, evaluated for 64 qubits at once.
/// Returns the number of `+i` and `−i` sites.
#[inline]
fn product_phase_counts(x1: u64, z1: u64, x2: u64, z2: u64) -> (u32, u32) {
    let y1 = x1 & z1;
    let xo1 = x1 & !z1;
    let zo1 = z1 & !x1;
    let y2 = x2 & z2;
    let xo2 = x2 & !z2;
    let zo2 = z2 & !x2;
    // XY = iZ, YZ = iX, ZX = iY and the reversed orders give −i.
    let plus = (xo1 & y2) | (y1 & zo2) | (zo1 & xo2);
    let minus = (xo1 & zo2) | (y1 & xo2) | (zo1 & y2);
    (plus.count_ones(), minus.count_ones())
}

impl PauliOperator {
    /// The identity on `n` qubits with phase `+1`.
    pub fn identity(n: usize) -> Self {
        let words = word_count(n);
        Self {
            n,
            x: vec![0; words],
            z: vec![0; words],
            phase: 0,
        }
    }

    /// Builds an operator from per-qubit letters, qubit 0 first.
    pub fn from_letters(letters: &[Pauli1]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &letter) in letters.iter().enumerate() {
            p.set(q, letter);
        }
        p
    }

    /// A single letter on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, letter: Pauli1) -> Result<Self, PauliError> {
        if qubit >= n {
            return Err(PauliError::QubitOutOfRange { n, index: qubit });
        }
        let mut p = Self::identity(n);
        p.set(qubit, letter);
        Ok(p)
    }

    /// `Z` on the first `w` qubits and identity on the rest: the input
    /// states `Z^{⊗w} I^{⊗(n−w)}` of the memory-twirl protocol.
    pub fn z_prefix(n: usize, w: usize) -> Result<Self, PauliError> {
        if w > n {
            return Err(PauliError::InvalidWeight { n, weight: w });
        }
        let mut p = Self::identity(n);
        for q in 0..w {
            p.set(q, Pauli1::Z);
        }
        Ok(p)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Quarter-phase exponent: the operator carries the factor `i^phase`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    /// True for phases `±1`.
    pub fn is_hermitian(&self) -> bool {
        self.phase & 1 == 0
    }

    /// `+1` for phase 0, `−1` for phase 2. Panics on non-Hermitian phases.
    pub fn sign(&self) -> i8 {
        match self.phase {
            0 => 1,
            2 => -1,
            _ => panic!("sign of a non-Hermitian Pauli"),
        }
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) & 3;
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    /// Same letters, phase reset to `+1`.
    pub fn unsigned(&self) -> Self {
        Self {
            phase: 0,
            ..self.clone()
        }
    }

    pub fn x_bit(&self, qubit: usize) -> bool {
        self.x[qubit / WORD_BITS] >> (qubit % WORD_BITS) & 1 == 1
    }

    pub fn z_bit(&self, qubit: usize) -> bool {
        self.z[qubit / WORD_BITS] >> (qubit % WORD_BITS) & 1 == 1
    }

    pub fn letter(&self, qubit: usize) -> Pauli1 {
        Pauli1::from_bits(self.x_bit(qubit), self.z_bit(qubit))
    }

    /// Overwrites the letter on `qubit`, leaving the phase untouched.
    pub fn set(&mut self, qubit: usize, letter: Pauli1) {
        assert!(qubit < self.n, "qubit {qubit} out of range for {} qubits", self.n);
        let (xb, zb) = letter.bits();
        let word = qubit / WORD_BITS;
        let mask = 1u64 << (qubit % WORD_BITS);
        if xb {
            self.x[word] |= mask;
        } else {
            self.x[word] &= !mask;
        }
        if zb {
            self.z[word] |= mask;
        } else {
            self.z[word] &= !mask;
        }
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    /// Qubits carrying a non-identity letter, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.x
            .iter()
            .zip(&self.z)
            .enumerate()
            .flat_map(|(w, (x, z))| BitIter(x | z).map(move |b| w * WORD_BITS + b))
    }

    /// Qubits whose letter is X or Y.
    pub fn x_support(&self) -> impl Iterator<Item = usize> + '_ {
        self.x
            .iter()
            .enumerate()
            .flat_map(|(w, &x)| BitIter(x).map(move |b| w * WORD_BITS + b))
    }

    /// Qubits whose letter is Z or Y.
    pub fn z_support(&self) -> impl Iterator<Item = usize> + '_ {
        self.z
            .iter()
            .enumerate()
            .flat_map(|(w, &z)| BitIter(z).map(move |b| w * WORD_BITS + b))
    }

    /// Number of Y letters.
    pub fn y_count(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones() as usize)
            .sum()
    }

    /// `self ← self · other`. Dimensions must already agree.
    pub(crate) fn mul_assign_right(&mut self, other: &PauliOperator) {
        debug_assert_eq!(self.n, other.n);
        let mut plus = 0u32;
        let mut minus = 0u32;
        for w in 0..self.x.len() {
            let (p, m) = product_phase_counts(self.x[w], self.z[w], other.x[w], other.z[w]);
            plus += p;
            minus += m;
            self.x[w] ^= other.x[w];
            self.z[w] ^= other.z[w];
        }
        let delta = (plus as i64 - minus as i64).rem_euclid(4) as u8;
        self.phase = (self.phase + other.phase + delta) & 3;
    }

    /// The product `self · other`.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator, PauliError> {
        check_dims(self.n, other.n)?;
        let mut out = self.clone();
        out.mul_assign_right(other);
        Ok(out)
    }

    /// Parity of the symplectic inner product, without dimension checks.
    pub(crate) fn anticommutes_unchecked(&self, other: &PauliOperator) -> bool {
        let mut acc = 0u64;
        for w in 0..self.x.len() {
            acc ^= (self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w]);
        }
        acc.count_ones() % 2 == 1
    }

    pub fn commutes(&self, other: &PauliOperator) -> Result<bool, PauliError> {
        check_dims(self.n, other.n)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    /// Dense index in `0..4^n` with base-4 digits `I=0, X=1, Y=2, Z=3`,
    /// qubit 0 most significant. Used by the dense oracle.
    pub fn dense_index(&self) -> usize {
        (0..self.n).fold(0usize, |acc, q| {
            let digit = match self.letter(q) {
                Pauli1::I => 0,
                Pauli1::X => 1,
                Pauli1::Y => 2,
                Pauli1::Z => 3,
            };
            acc * 4 + digit
        })
    }

    /// Inverse of [`PauliOperator::dense_index`], phase `+1`.
    pub fn from_dense_index(n: usize, mut index: usize) -> Self {
        let mut p = Self::identity(n);
        for q in (0..n).rev() {
            let letter = match index % 4 {
                0 => Pauli1::I,
                1 => Pauli1::X,
                2 => Pauli1::Y,
                _ => Pauli1::Z,
            };
            p.set(q, letter);
            index /= 4;
        }
        p
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(bit)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PauliError::Parse(s.to_string());
        let trimmed = s.trim();
        let (negative, rest) = if let Some(r) = trimmed.strip_prefix('+') {
            (false, r)
        } else if let Some(r) = trimmed.strip_prefix('-') {
            (true, r)
        } else if let Some(r) = trimmed.strip_prefix('\u{2212}') {
            (true, r)
        } else {
            (false, trimmed)
        };
        let (imaginary, letters) = match rest.strip_prefix('i') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        if letters.is_empty() {
            return Err(err());
        }
        let letters: Vec<Pauli1> = letters
            .chars()
            .map(Pauli1::from_symbol)
            .collect::<Option<_>>()
            .ok_or_else(err)?;
        let phase = (if negative { 2 } else { 0 }) + u8::from(imaginary);
        Ok(Self::from_letters(&letters).with_phase(phase))
    }
}

impl Serialize for PauliOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `C(n, k)` with overflow detection.
pub(crate) fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of Pauli operators of weight exactly `w` on `n` qubits,
/// `3^w · C(n, w)`.
pub fn count_weight_class(n: usize, w: usize) -> Result<u128, PauliError> {
    if w > n {
        return Err(PauliError::InvalidWeight { n, weight: w });
    }
    let three_pow = 3u128.checked_pow(w as u32).ok_or(PauliError::Overflow(n))?;
    binomial(n, w)
        .and_then(|c| c.checked_mul(three_pow))
        .ok_or(PauliError::Overflow(n))
}

/// Fraction of the full Pauli group occupied by the weight-`w` class,
/// `3^w · C(n, w) / 4^n`. Exact up to rounding for small `n`, evaluated in
/// log space when the integer counts overflow.
pub fn weight_class_fraction(n: usize, w: usize) -> f64 {
    if w > n {
        return 0.0;
    }
    if n <= 60 {
        if let Ok(count) = count_weight_class(n, w) {
            return count as f64 / 4f64.powi(n as i32);
        }
    }
    let ln_binom: f64 = (1..=w)
        .map(|k| ((n - w + k) as f64 / k as f64).ln())
        .sum();
    (ln_binom + w as f64 * 3f64.ln() - n as f64 * 4f64.ln()).exp()
}

/// Uniformly random unsigned Pauli of weight exactly `w`: a uniform support
/// of size `w`, then an independent uniform letter from {X, Y, Z} per site.
pub fn sample_uniform_weight<R: Rng + ?Sized>(
    n: usize,
    w: usize,
    rng: &mut R,
) -> Result<PauliOperator, PauliError> {
    if w == 0 || w > n {
        return Err(PauliError::InvalidWeight { n, weight: w });
    }
    let mut p = PauliOperator::identity(n);
    for q in index::sample(rng, n, w) {
        p.set(q, Pauli1::NON_IDENTITY[rng.random_range(0..3)]);
    }
    Ok(p)
}

/// Every unsigned Pauli of weight exactly `w`, in a fixed order.
pub fn enumerate_weight_class(n: usize, w: usize) -> Result<Vec<PauliOperator>, PauliError> {
    let size = count_weight_class(n, w)?;
    let mut out = Vec::with_capacity(usize::try_from(size).unwrap_or(0));
    let mut support = Vec::with_capacity(w);
    fn supports(
        n: usize,
        w: usize,
        start: usize,
        support: &mut Vec<usize>,
        out: &mut Vec<PauliOperator>,
    ) {
        if support.len() == w {
            let mut letters = vec![0usize; w];
            loop {
                let mut p = PauliOperator::identity(n);
                for (&q, &l) in support.iter().zip(&letters) {
                    p.set(q, Pauli1::NON_IDENTITY[l]);
                }
                out.push(p);
                // base-3 odometer over the letters
                let mut pos = 0;
                while pos < w {
                    letters[pos] += 1;
                    if letters[pos] < 3 {
                        break;
                    }
                    letters[pos] = 0;
                    pos += 1;
                }
                if pos == w {
                    return;
                }
            }
        }
        for q in start..n {
            support.push(q);
            supports(n, w, q + 1, support, out);
            support.pop();
        }
    }
    supports(n, w, 0, &mut support, &mut out);
    Ok(out)
}

/// Every unsigned Pauli on `n` qubits in dense-index order.
pub fn enumerate_all(n: usize) -> impl Iterator<Item = PauliOperator> {
    (0..1usize << (2 * n)).map(move |i| PauliOperator::from_dense_index(n, i))
}

/// Draws `count` distinct weight-`w` Paulis. Falls back to sampling with
/// replacement when the class holds fewer than `count` operators; the
/// returned flag reports whether that happened.
pub fn sample_distinct_weight<R: Rng + ?Sized>(
    n: usize,
    w: usize,
    count: usize,
    rng: &mut R,
) -> Result<(Vec<PauliOperator>, bool), PauliError> {
    if w == 0 || w > n {
        return Err(PauliError::InvalidWeight { n, weight: w });
    }
    let class_size = count_weight_class(n, w).ok();
    match class_size {
        Some(size) if count as u128 > size => {
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                out.push(sample_uniform_weight(n, w, rng)?);
            }
            Ok((out, true))
        }
        // Dense enough that rejection would stall: enumerate and subsample.
        Some(size) if size <= (1 << 20) && size <= 2 * count as u128 => {
            let class = enumerate_weight_class(n, w)?;
            let picked = index::sample(rng, class.len(), count);
            Ok((picked.into_iter().map(|i| class[i].clone()).collect(), false))
        }
        _ => {
            let mut seen = HashSet::with_capacity(count);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let p = sample_uniform_weight(n, w, rng)?;
                if seen.insert(p.clone()) {
                    out.push(p);
                }
            }
            Ok((out, false))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn x_times_x_is_identity() {
        let out = p("X").multiply(&p("X")).unwrap();
        assert!(out.is_identity());
        assert_eq!(out.phase(), 0);
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let out = p("X").multiply(&p("Z")).unwrap();
        assert_eq!(out, p("-iY"));
        assert_eq!(out.phase(), 3);
    }

    #[test]
    fn two_qubit_product_phases_cancel() {
        // (X⊗Z)(Z⊗X) = (−iY)⊗(iY) = Y⊗Y
        assert_eq!(p("XZ").multiply(&p("ZX")).unwrap(), p("+YY"));
    }

    #[test]
    fn single_qubit_multiplication_table() {
        let cases = [
            ("X", "Y", "+iZ"),
            ("Y", "Z", "+iX"),
            ("Z", "X", "+iY"),
            ("Y", "X", "-iZ"),
            ("Z", "Y", "-iX"),
            ("Y", "Y", "+I"),
            ("Z", "Z", "+I"),
        ];
        for (a, b, c) in cases {
            assert_eq!(p(a).multiply(&p(b)).unwrap(), p(c), "{a}·{b}");
        }
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XI").commutes(&p("IZ")).unwrap());
        assert!(p("XZ").commutes(&p("ZX")).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert_eq!(
            p("XX").multiply(&p("X")),
            Err(PauliError::DimensionMismatch { left: 2, right: 1 })
        );
        assert!(p("XX").commutes(&p("XXX")).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(p("III").weight(), 0);
        assert_eq!(p("ZZI").weight(), 2);
        assert_eq!(p("ZZZZZZZ").weight(), 7);
    }

    #[test]
    fn text_form() {
        let rho1 = p("+IIIIIIZ");
        assert_eq!(rho1.letter(6), Pauli1::Z);
        assert_eq!(rho1.weight(), 1);
        assert_eq!(rho1.to_string(), "+IIIIIIZ");
        assert_eq!(p("-XY").to_string(), "-XY");
        assert_eq!(p("\u{2212}XY"), p("-XY"));
        assert_eq!(p("XY").to_string(), "+XY");
        assert!("".parse::<PauliOperator>().is_err());
        assert!("+".parse::<PauliOperator>().is_err());
        assert!("XQ".parse::<PauliOperator>().is_err());
    }

    #[test]
    fn wide_operators_span_words() {
        let mut a = PauliOperator::identity(130);
        a.set(0, Pauli1::X);
        a.set(64, Pauli1::Y);
        a.set(129, Pauli1::Z);
        assert_eq!(a.weight(), 3);
        assert_eq!(a.support().collect::<Vec<_>>(), vec![0, 64, 129]);
        let b = PauliOperator::single(130, 129, Pauli1::X).unwrap();
        assert!(!a.commutes(&b).unwrap());
        let s = a.to_string();
        assert_eq!(s.parse::<PauliOperator>().unwrap(), a);
    }

    #[test]
    fn weight_class_counts() {
        assert_eq!(count_weight_class(7, 1).unwrap(), 21);
        assert_eq!(count_weight_class(7, 7).unwrap(), 2187);
        let total: u128 = (1..=7).map(|w| count_weight_class(7, w).unwrap()).sum();
        assert_eq!(total, 16383);
        for n in 1..=20 {
            let all: u128 = (0..=n).map(|w| count_weight_class(n, w).unwrap()).sum();
            assert_eq!(all, 4u128.pow(n as u32));
        }
        assert!(count_weight_class(3, 4).is_err());
    }

    #[test]
    fn weight_class_fraction_matches_counts_and_log_path() {
        let total: f64 = (0..=7).map(|w| weight_class_fraction(7, w)).sum();
        assert!((total - 1.0).abs() < 1e-15);
        let total: f64 = (0..=200).map(|w| weight_class_fraction(200, w)).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(weight_class_fraction(1, 1), 0.75);
    }

    #[test]
    fn enumerated_classes_have_the_right_size() {
        for n in 1..=4 {
            for w in 0..=n {
                let class = enumerate_weight_class(n, w).unwrap();
                assert_eq!(class.len() as u128, count_weight_class(n, w).unwrap());
                let distinct: HashSet<_> = class.iter().cloned().collect();
                assert_eq!(distinct.len(), class.len());
                assert!(class.iter().all(|p| p.weight() == w));
            }
        }
    }

    #[test]
    fn sampling_rejects_bad_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_uniform_weight(7, 0, &mut rng).is_err());
        assert!(sample_uniform_weight(7, 8, &mut rng).is_err());
    }

    #[test]
    fn full_weight_samples_have_no_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let s = sample_uniform_weight(7, 7, &mut rng).unwrap();
            assert!((0..7).all(|q| s.letter(q) != Pauli1::I));
            assert_eq!(s.phase(), 0);
            assert_eq!(sample_uniform_weight(7, 2, &mut rng).unwrap().support().count(), 2);
        }
    }

    #[test]
    fn weight_one_sampling_is_uniform() {
        // Chi-square against 21 equiprobable outcomes; the 0.99 quantile of
        // chi-square with 20 degrees of freedom is 37.566.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let class = enumerate_weight_class(7, 1).unwrap();
        let mut counts = std::collections::HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            *counts.entry(sample_uniform_weight(7, 1, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 21);
        let expected = draws as f64 / 21.0;
        let chi2: f64 = class
            .iter()
            .map(|p| {
                let o = counts[p] as f64;
                (o - expected).powi(2) / expected
            })
            .sum();
        assert!(chi2 < 37.566, "chi2 = {chi2}");
    }

    #[test]
    fn distinct_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (s, fallback) = sample_distinct_weight(7, 3, 94, &mut rng).unwrap();
        assert!(!fallback);
        assert_eq!(s.iter().collect::<HashSet<_>>().len(), 94);
        let (s, fallback) = sample_distinct_weight(3, 3, 27, &mut rng).unwrap();
        assert!(!fallback);
        assert_eq!(s.iter().collect::<HashSet<_>>().len(), 27);
        let (s, fallback) = sample_distinct_weight(2, 1, 10, &mut rng).unwrap();
        assert!(fallback);
        assert_eq!(s.len(), 10);
    }

    #[test]
    fn exhaustive_two_qubit_group_closes() {
        let all: Vec<_> = enumerate_all(2).collect();
        assert_eq!(all.len(), 16);
        let mut signed = HashSet::new();
        for a in &all {
            for ph in 0..4 {
                signed.insert(a.clone().with_phase(ph));
            }
        }
        for a in &signed {
            for b in &signed {
                assert!(signed.contains(&a.multiply(b).unwrap()));
            }
        }
        assert_eq!(signed.len(), 64);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(|(letters, phase)| {
            let letters: Vec<_> = letters
                .into_iter()
                .map(|l| [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z][l as usize])
                .collect();
            PauliOperator::from_letters(&letters).with_phase(phase)
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative(
            (a, b, c) in (1usize..80).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n), arb_pauli(n)))
        ) {
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn squares_are_plus_minus_identity(a in (1usize..80).prop_flat_map(arb_pauli)) {
            let sq = a.multiply(&a).unwrap();
            prop_assert!(sq.is_identity());
            prop_assert!(sq.phase() % 2 == 0);
        }

        #[test]
        fn commutation_matches_phase_comparison(
            (a, b) in (1usize..80).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))
        ) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            prop_assert_eq!(a.commutes(&b).unwrap(), ab.phase() == ba.phase());
        }

        #[test]
        fn text_round_trip(a in (1usize..80).prop_flat_map(arb_pauli)) {
            let text = a.to_string();
            prop_assert_eq!(text.parse::<PauliOperator>().unwrap(), a.clone());
            prop_assert_eq!(a.to_string(), text);
        }

        #[test]
        fn dense_index_round_trip(idx in 0usize..4096) {
            let q = PauliOperator::from_dense_index(6, idx);
            prop_assert_eq!(q.dense_index(), idx);
        }
    }
}
