//! Hoeffding sample planning and weight stratification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::pauli::{count_weight_class, weight_class_fraction};
use crate::scalar::Real;

/// Number of experiments `m` for which Hoeffding's inequality bounds
/// `Prob(|x̄ − μ| > δ)` by `prob_epsilon` for samples confined to
/// `[a, b]`: `m = ⌈ln(2/ε)·(b−a)² / (2δ²)⌉`.
pub fn plan_samples<T: Real>(prob_epsilon: T, delta: T, range: (T, T)) -> Result<usize, EstimatorError> {
    let (eps, delta) = (prob_epsilon.as_f64(), delta.as_f64());
    let (a, b) = (range.0.as_f64(), range.1.as_f64());
    if !(eps > 0.0 && eps < 1.0) {
        return Err(EstimatorError::InvalidParameter(format!(
            "prob_epsilon must lie in (0, 1), got {eps}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(EstimatorError::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(EstimatorError::DegenerateRange(a, b));
    }
    let m = ((2.0 / eps).ln() * (b - a).powi(2) / (2.0 * delta * delta)).ceil();
    if m > usize::MAX as f64 {
        return Err(EstimatorError::InvalidParameter(format!("sample count {m} is too large")));
    }
    Ok(m as usize)
}

/// Hoeffding failure probability `2·exp(−2δ²m/(b−a)²)` for `m` samples.
pub fn hoeffding_bound(m: usize, delta: f64, range: (f64, f64)) -> f64 {
    let width = range.1 - range.0;
    (2.0 * (-2.0 * delta * delta * m as f64 / (width * width)).exp()).min(1.0)
}

/// Splits `m` experiments over the weight classes `w = 1..=n`, proportional
/// to the class sizes `3^w·C(n,w)`. Largest-remainder rounding (ties to the
/// lower weight), then every stratum is raised to at least one experiment by
/// taking from the stratum furthest above its quota.
pub fn stratify(n: usize, m: usize) -> Result<BTreeMap<usize, usize>, EstimatorError> {
    if n == 0 {
        return Err(EstimatorError::InvalidParameter("n must be positive".into()));
    }
    if m < n {
        return Err(EstimatorError::TooFewSamples { m, n });
    }
    let non_identity = 1.0 - weight_class_fraction(n, 0);
    let quotas: Vec<f64> = (1..=n)
        .map(|w| m as f64 * weight_class_fraction(n, w) / non_identity)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
        rj.partial_cmp(&ri).unwrap().then(i.cmp(&j))
    });
    // Rounding error in the quotas can leave the floors a little off m.
    let mut remaining = m as isize - assigned as isize;
    let mut cursor = 0;
    while remaining > 0 {
        counts[order[cursor % n]] += 1;
        cursor += 1;
        remaining -= 1;
    }
    while remaining < 0 {
        let i = (0..n).filter(|&i| counts[i] > 0).max_by(|&i, &j| {
            (counts[i] as f64 - quotas[i]).partial_cmp(&(counts[j] as f64 - quotas[j])).unwrap()
        });
        counts[i.expect("m ≥ n > 0")] -= 1;
        remaining += 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let donor = (0..n)
            .filter(|&i| counts[i] > 1)
            .max_by(|&i, &j| {
                let si = counts[i] as f64 - quotas[i];
                let sj = counts[j] as f64 - quotas[j];
                si.partial_cmp(&sj).unwrap().then(counts[i].cmp(&counts[j]))
            })
            .expect("m ≥ n leaves a donor");
        counts[donor] -= 1;
        counts[empty] = 1;
    }
    Ok(counts.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect())
}

/// Shots per experiment: exact expectation values or a finite number of
/// ±1 single-shot outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Count(u64),
}

impl Serialize for Shots {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => serializer.serialize_str("exact"),
            Shots::Count(c) => serializer.serialize_u64(*c),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Count(u64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(s) if s == "exact" => Ok(Shots::Exact),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "shots must be \"exact\" or a positive integer, got {s:?}"
            ))),
            Raw::Count(0) => Err(serde::de::Error::custom("shots must be positive")),
            Raw::Count(c) => Ok(Shots::Count(c)),
        }
    }
}

/// A complete sampling plan for `n` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan<T> {
    pub n: usize,
    pub prob_epsilon: T,
    pub delta: T,
    pub range: (T, T),
    pub m: usize,
    pub allocation: BTreeMap<usize, usize>,
    pub shots: Shots,
}

impl<T: Real> SamplingPlan<T> {
    /// Hoeffding-sized plan, stratified by weight.
    pub fn new(n: usize, prob_epsilon: T, delta: T, range: (T, T), shots: Shots) -> Result<Self, EstimatorError> {
        let m = plan_samples(prob_epsilon, delta, range)?;
        Self::with_total(n, m, prob_epsilon, delta, range, shots)
    }

    /// Plan with an explicit experiment count `m`.
    pub fn with_total(
        n: usize,
        m: usize,
        prob_epsilon: T,
        delta: T,
        range: (T, T),
        shots: Shots,
    ) -> Result<Self, EstimatorError> {
        plan_samples(prob_epsilon, delta, range)?;
        if let Shots::Count(0) = shots {
            return Err(EstimatorError::InvalidParameter("shots must be positive".into()));
        }
        Ok(Self {
            n,
            prob_epsilon,
            delta,
            range,
            m,
            allocation: stratify(n, m)?,
            shots,
        })
    }

    /// Every non-identity Pauli exactly once (`m = 4ⁿ − 1`).
    pub fn full_enumeration(n: usize, shots: Shots) -> Result<Self, EstimatorError> {
        let mut allocation = BTreeMap::new();
        for w in 1..=n {
            let size = count_weight_class(n, w)?;
            let size = usize::try_from(size)
                .ok()
                .filter(|&s| s <= 1 << 24)
                .ok_or(EstimatorError::InvalidParameter(format!(
                    "full enumeration of {n} qubits is too large"
                )))?;
            allocation.insert(w, size);
        }
        Ok(Self {
            n,
            prob_epsilon: T::lit(0.01),
            delta: T::lit(0.04),
            range: (T::zero(), T::one()),
            m: allocation.values().sum(),
            allocation,
            shots,
        })
    }

    /// Confidence level `1 − ε` attached to the half-width `δ`.
    pub fn confidence_level(&self) -> T {
        T::one() - self.prob_epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_examples() {
        assert_eq!(plan_samples(0.01f64, 0.04, (0.0, 1.0)).unwrap(), 1656);
        assert_eq!(plan_samples(0.01f64, 0.04, (-1.0, 1.0)).unwrap(), 6623);
        assert_eq!(plan_samples(0.05f64, 0.05, (0.0, 1.0)).unwrap(), 738);
        assert_eq!(plan_samples(0.01f32, 0.04, (0.0, 1.0)).unwrap(), 1656);
    }

    #[test]
    fn planner_rejects_bad_input() {
        assert!(plan_samples(1.99f64, 0.04, (0.0, 1.0)).is_err());
        assert!(plan_samples(0.0f64, 0.04, (0.0, 1.0)).is_err());
        assert!(plan_samples(0.01f64, 0.0, (0.0, 1.0)).is_err());
        assert!(matches!(
            plan_samples(0.01f64, 0.04, (1.0, 1.0)),
            Err(EstimatorError::DegenerateRange(..))
        ));
    }

    #[test]
    fn planned_count_meets_the_bound() {
        let m = plan_samples(0.01f64, 0.04, (0.0, 1.0)).unwrap();
        assert!(hoeffding_bound(m, 0.04, (0.0, 1.0)) <= 0.01);
        assert!(hoeffding_bound(m - 1, 0.04, (0.0, 1.0)) > 0.01);
    }

    #[test]
    fn stratify_full_enumeration() {
        let alloc = stratify(7, 16383).unwrap();
        assert_eq!(
            alloc.values().copied().collect::<Vec<_>>(),
            vec![21, 189, 945, 2835, 5103, 5103, 2187]
        );
        let alloc = stratify(2, 15).unwrap();
        assert_eq!(alloc.values().copied().collect::<Vec<_>>(), vec![6, 9]);
    }

    #[test]
    fn stratify_default_plan_is_about_one_tenth() {
        let alloc = stratify(7, 1656).unwrap();
        assert_eq!(alloc.values().sum::<usize>(), 1656);
        for (&w, &k) in &alloc {
            let class = count_weight_class(7, w).unwrap() as f64;
            let quota = 1656.0 * class / 16383.0;
            assert!((k as f64 - quota).abs() <= 1.0, "w = {w}: {k} vs {quota}");
        }
        assert_eq!(
            alloc.values().copied().collect::<Vec<_>>(),
            vec![2, 19, 95, 287, 516, 516, 221]
        );
    }

    #[test]
    fn stratify_floors_every_stratum() {
        let alloc = stratify(32, 1656).unwrap();
        assert_eq!(alloc.len(), 32);
        assert!(alloc.values().all(|&k| k >= 1));
        assert_eq!(alloc.values().sum::<usize>(), 1656);
        let alloc = stratify(7, 7).unwrap();
        assert!(alloc.values().all(|&k| k == 1));
        assert!(matches!(stratify(7, 6), Err(EstimatorError::TooFewSamples { .. })));
    }

    #[test]
    fn plans() {
        let plan = SamplingPlan::new(7, 0.01f64, 0.04, (0.0, 1.0), Shots::Exact).unwrap();
        assert_eq!(plan.m, 1656);
        assert_eq!(plan.allocation.values().sum::<usize>(), plan.m);
        assert!((plan.confidence_level() - 0.99).abs() < 1e-15);
        let full = SamplingPlan::<f64>::full_enumeration(3, Shots::Exact).unwrap();
        assert_eq!(full.m, 63);
        assert!(SamplingPlan::new(7, 0.01f64, 0.04, (0.0, 1.0), Shots::Count(0)).is_err());
    }
}
