//! Aggregation of experiment records into `Pr(0)`, the average fidelity and
//! the per-weight table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::run::{substream, ExperimentRecord, RunOptions, BOOTSTRAP_STREAM};
use super::{EstimatorError, SamplingPlan};
use crate::channels::{DephasingModel, NoiseModel, NoisyGate};
use crate::pauli::{count_weight_class, weight_class_fraction};
use crate::scalar::{clamp, Real};

/// First line of every CSV table.
pub const CSV_HEADER: &str = "# cliffcert weight table v1";

/// Default lower bound on `E_d(w)` below which a stratum is not corrected.
pub const DEFAULT_ED_FLOOR: f64 = 1e-6;

/// Weight-class estimate `Pr(0) = 4⁻ⁿ + Σ_w (|class_w| / 4ⁿ)·x̄_w`, from
/// per-stratum means. Every weight `1..=n` must be present.
fn pr0_from_means<T: Real>(n: usize, means: &BTreeMap<usize, T>) -> Result<T, EstimatorError> {
    let mut acc = weight_class_fraction(n, 0);
    for w in 1..=n {
        let mean = means.get(&w).ok_or(EstimatorError::EmptyStratum(w))?;
        acc += weight_class_fraction(n, w) * mean.as_f64();
    }
    Ok(T::lit(acc))
}

/// `Pr(0)` from raw records: each stratum's plain mean overlap weighted by
/// its class size. `allocation` names the strata that must be populated.
pub fn estimate_pr0<T: Real>(
    records: &[ExperimentRecord<T>],
    n: usize,
    allocation: &BTreeMap<usize, usize>,
) -> Result<T, EstimatorError> {
    if records.is_empty() {
        return Err(EstimatorError::InvalidParameter("no records".into()));
    }
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = sums.entry(r.weight).or_default();
        e.0 += r.value.as_f64();
        e.1 += 1;
    }
    let mut means = BTreeMap::new();
    for w in (1..=n).chain(allocation.keys().copied()) {
        let (sum, count) = sums.get(&w).copied().unwrap_or_default();
        if count == 0 {
            return Err(EstimatorError::EmptyStratum(w));
        }
        means.insert(w, T::lit(sum / count as f64));
    }
    pr0_from_means(n, &means)
}

/// `F̄ = (2ⁿ·Pr(0) + 1) / (2ⁿ + 1)`.
pub fn average_fidelity<T: Real>(pr0: T, n: usize) -> Result<T, EstimatorError> {
    if !(pr0 >= T::zero() && pr0 <= T::one()) {
        return Err(EstimatorError::OutOfRange(pr0.as_f64()));
    }
    if n <= 60 {
        let d = T::lit((n as f64).exp2());
        Ok((d * pr0 + T::one()) / (d + T::one()))
    } else {
        let d = T::lit((n as f64).exp2());
        Ok(pr0 + (T::one() - pr0) / (d + T::one()))
    }
}

/// One row of the per-weight table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary<T> {
    pub w: usize,
    pub class_size: u128,
    pub k_w: usize,
    pub prep_time: Option<T>,
    /// Mean gate-free reference signal when SPAM noise is present.
    pub f_i: Option<T>,
    pub fe_raw: T,
    /// `fe_raw` clamped to `[0, 1]`.
    pub fe: T,
    pub ed: Option<T>,
    pub fdc_raw: Option<T>,
    pub fdc: Option<T>,
    /// Sampled with replacement because `k_w` exceeded the class size.
    pub with_replacement: bool,
    /// `E_d(w)` fell below the floor; the stratum keeps its uncorrected value.
    pub ed_below_floor: bool,
}

/// Estimate after dividing out a factorized decoherence contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedEstimate<T> {
    pub pr0_raw: T,
    pub pr0: T,
    pub fidelity: T,
    pub ed_floor: T,
}

/// Estimator value set against the dense ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison<T> {
    pub pr0: T,
    pub fidelity: T,
    pub within_delta: bool,
}

/// Everything a certification run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport<T> {
    pub n: usize,
    pub seed: u64,
    pub plan: SamplingPlan<T>,
    pub calibrated: bool,
    pub strata: Vec<StratumSummary<T>>,
    pub pr0_raw: T,
    /// `pr0_raw` clamped to `[0, 1]`.
    pub pr0: T,
    /// `average_fidelity(pr0, n)`.
    pub fidelity: T,
    pub delta: T,
    pub confidence_level: T,
    pub corrected: Option<CorrectedEstimate<T>>,
    pub bootstrap_stderr: Option<T>,
    pub oracle: Option<OracleComparison<T>>,
    pub warnings: Vec<String>,
    pub records: Vec<ExperimentRecord<T>>,
}

/// Stratum value `F_e(w)`: mean overlap, divided by the mean reference
/// signal when calibrating.
fn stratum_fe(values: &[f64], calibrations: Option<&[f64]>) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    match calibrations {
        Some(c) => mean / (c.iter().sum::<f64>() / c.len() as f64),
        None => mean,
    }
}

impl<T: Real> CertificationReport<T> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        n: usize,
        seed: u64,
        plan: SamplingPlan<T>,
        records: Vec<ExperimentRecord<T>>,
        calibrated: bool,
        replaced: &[usize],
        warnings: Vec<String>,
        options: &RunOptions<T>,
    ) -> Result<Self, EstimatorError> {
        let mut strata = Vec::with_capacity(plan.allocation.len());
        let mut means = BTreeMap::new();
        let mut groups: Vec<StratumValues> = Vec::new();
        for &w in plan.allocation.keys() {
            let group: Vec<&ExperimentRecord<T>> = records.iter().filter(|r| r.weight == w).collect();
            if group.is_empty() {
                return Err(EstimatorError::EmptyStratum(w));
            }
            let values: Vec<f64> = group.iter().map(|r| r.value.as_f64()).collect();
            let cals: Option<Vec<f64>> = group
                .iter()
                .map(|r| r.calibration.map(T::as_f64))
                .collect::<Option<Vec<_>>>();
            let f_i = cals.as_ref().map(|c| T::lit(c.iter().sum::<f64>() / c.len() as f64));
            let fe_raw = T::lit(stratum_fe(
                &values,
                if calibrated { cals.as_deref() } else { None },
            ));
            means.insert(w, fe_raw);
            strata.push(StratumSummary {
                w,
                class_size: count_weight_class(n, w)?,
                k_w: group.len(),
                prep_time: options.prep_times.as_ref().map(|t| t[w - 1]),
                f_i,
                fe_raw,
                fe: clamp(fe_raw, T::zero(), T::one()),
                ed: None,
                fdc_raw: None,
                fdc: None,
                with_replacement: replaced.contains(&w),
                ed_below_floor: false,
            });
            groups.push((w, values, if calibrated { cals } else { None }));
        }
        let pr0_raw = pr0_from_means(n, &means)?;
        let pr0 = clamp(pr0_raw, T::zero(), T::one());
        let fidelity = average_fidelity(pr0, n)?;

        let bootstrap_stderr = match options.bootstrap {
            None => None,
            Some(b) if b < 2 => {
                return Err(EstimatorError::InvalidParameter(
                    "bootstrap needs at least two resamples".into(),
                ))
            }
            Some(b) => Some(T::lit(bootstrap(n, seed, &groups, b)?)),
        };

        Ok(Self {
            n,
            seed,
            confidence_level: plan.confidence_level(),
            delta: plan.delta,
            plan,
            calibrated,
            strata,
            pr0_raw,
            pr0,
            fidelity,
            corrected: None,
            bootstrap_stderr,
            oracle: None,
            warnings,
            records,
        })
    }

    /// Records of weight `w`, in run order.
    pub fn stratum_records(&self, w: usize) -> impl Iterator<Item = &ExperimentRecord<T>> {
        self.records.iter().filter(move |r| r.weight == w)
    }

    /// Per-weight table `w,k,k_w,t_placeholder,F_i,F_e,E_d,F_dc` with floats
    /// at 12 significant digits. Missing values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{CSV_HEADER}").unwrap();
        writeln!(out, "w,k,k_w,t_placeholder,F_i,F_e,E_d,F_dc").unwrap();
        let opt = |v: Option<T>| v.map(|x| format_sig(x.as_f64())).unwrap_or_default();
        for s in &self.strata {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.w,
                self.plan.m,
                s.k_w,
                opt(s.prep_time),
                opt(s.f_i),
                format_sig(s.fe.as_f64()),
                opt(s.ed),
                opt(s.fdc),
            )
            .unwrap();
        }
        out
    }
}

/// Weight, overlaps and optional reference signals of one stratum.
type StratumValues = (usize, Vec<f64>, Option<Vec<f64>>);

/// Standard deviation of `F̄` over stratified bootstrap resamples.
fn bootstrap(
    n: usize,
    seed: u64,
    groups: &[StratumValues],
    resamples: usize,
) -> Result<f64, EstimatorError> {
    let mut rng = substream(seed, BOOTSTRAP_STREAM, 0, 0);
    let mut estimates = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut means = BTreeMap::new();
        for (w, values, cals) in groups {
            let picks: Vec<usize> = (0..values.len()).map(|_| rng.random_range(0..values.len())).collect();
            let v: Vec<f64> = picks.iter().map(|&i| values[i]).collect();
            let c: Option<Vec<f64>> = cals.as_ref().map(|c| picks.iter().map(|&i| c[i]).collect());
            means.insert(*w, stratum_fe(&v, c.as_deref()));
        }
        let pr0: f64 = pr0_from_means(n, &means)?;
        estimates.push(average_fidelity(pr0.clamp(0.0, 1.0), n)?);
    }
    let mean = estimates.iter().sum::<f64>() / resamples as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

/// `%g`-style rendering with 12 significant digits.
pub(crate) fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// [`remove_decoherence_with_floor`] with the floor [`DEFAULT_ED_FLOOR`].
pub fn remove_decoherence<T: Real>(
    report: &CertificationReport<T>,
    dephasing: &DephasingModel<T>,
    gate: &NoisyGate<T>,
) -> Result<CertificationReport<T>, EstimatorError> {
    remove_decoherence_with_floor(report, dephasing, gate, T::lit(DEFAULT_ED_FLOOR))
}

/// Divides each stratum's `F_e(w)` by `E_d(w)`, the mean attenuation the
/// dephasing model alone produces on the stratum's sampled inputs, and
/// recomputes `Pr(0)` and `F̄` from the corrected strata. Strata with
/// `E_d(w) < floor` are flagged and keep their uncorrected value.
pub fn remove_decoherence_with_floor<T: Real>(
    report: &CertificationReport<T>,
    dephasing: &DephasingModel<T>,
    gate: &NoisyGate<T>,
    floor: T,
) -> Result<CertificationReport<T>, EstimatorError> {
    if dephasing.num_qubits() != report.n || gate.num_qubits() != report.n {
        return Err(EstimatorError::DimensionMismatch {
            plan: report.n,
            gate: if gate.num_qubits() != report.n { gate.num_qubits() } else { dephasing.num_qubits() },
        });
    }
    if !(floor >= T::zero()) {
        return Err(EstimatorError::InvalidParameter("floor must be non-negative".into()));
    }
    let model = NoiseModel::Dephasing(dephasing.clone());
    let mut out = report.clone();
    let mut means = BTreeMap::new();
    for s in &mut out.strata {
        let group: Vec<_> = report.stratum_records(s.w).collect();
        if group.is_empty() {
            return Err(EstimatorError::EmptyStratum(s.w));
        }
        let mut attenuations = Vec::with_capacity(group.len());
        for r in &group {
            attenuations.push(
                model
                    .gate_attenuation(&r.input, &r.observable, gate.circuit())?
                    .as_f64(),
            );
        }
        let ed = T::lit(attenuations.iter().sum::<f64>() / attenuations.len() as f64);
        s.ed = Some(ed);
        if ed < floor {
            s.ed_below_floor = true;
            s.fdc_raw = None;
            s.fdc = None;
            means.insert(s.w, s.fe_raw);
        } else {
            let fdc_raw = s.fe_raw / ed;
            s.ed_below_floor = false;
            s.fdc_raw = Some(fdc_raw);
            s.fdc = Some(clamp(fdc_raw, T::zero(), T::one()));
            means.insert(s.w, fdc_raw);
        }
    }
    let flagged: Vec<usize> = out.strata.iter().filter(|s| s.ed_below_floor).map(|s| s.w).collect();
    if !flagged.is_empty() {
        out.warnings.push(format!(
            "decoherence correction skipped for weights {flagged:?}: E_d below {floor}"
        ));
    }
    let pr0_raw = pr0_from_means(report.n, &means)?;
    let pr0 = clamp(pr0_raw, T::zero(), T::one());
    out.corrected = Some(CorrectedEstimate {
        pr0_raw,
        pr0,
        fidelity: average_fidelity(pr0, report.n)?,
        ed_floor: floor,
    });
    Ok(out)
}
