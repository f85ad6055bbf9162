//! Execution of the sampled experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::CertificationReport;
use super::{EstimatorError, SamplingPlan, Shots};
use crate::channels::NoisyGate;
use crate::pauli::{sample_distinct_weight, PauliOperator};
use crate::scalar::{clamp, Real};

const SAMPLE_STREAM: u64 = 1;
const SHOT_STREAM: u64 = 2;
pub(crate) const BOOTSTRAP_STREAM: u64 = 3;

/// Independent generator for `(tag, stratum, index)` under `seed`.
pub(crate) fn substream(seed: u64, tag: u64, stratum: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) | ((stratum as u64 & 0xff_ffff) << 32) | (index as u64 & 0xffff_ffff));
    rng
}

/// Something that can run the certification circuit for one input Pauli.
pub trait ExperimentBackend<T: Real>: Sync {
    fn num_qubits(&self) -> usize;

    /// Ideal output observable `U ρ U†`, sign included.
    fn observable(&self, input: &PauliOperator) -> Result<PauliOperator, EstimatorError>;

    /// Expected overlap of the noisy output with `observable`.
    fn overlap(&self, input: &PauliOperator, observable: &PauliOperator) -> Result<T, EstimatorError>;

    /// Gate-free reference signal, or `None` without SPAM noise.
    fn calibration(&self, input: &PauliOperator) -> Result<Option<T>, EstimatorError>;

    /// Whether stratum means are divided by the reference signal.
    fn calibrates(&self) -> bool;
}

impl<T: Real> ExperimentBackend<T> for NoisyGate<T> {
    fn num_qubits(&self) -> usize {
        NoisyGate::num_qubits(self)
    }

    fn observable(&self, input: &PauliOperator) -> Result<PauliOperator, EstimatorError> {
        Ok(NoisyGate::observable(self, input)?)
    }

    fn overlap(&self, input: &PauliOperator, observable: &PauliOperator) -> Result<T, EstimatorError> {
        Ok(NoisyGate::overlap(self, input, observable)?)
    }

    fn calibration(&self, input: &PauliOperator) -> Result<Option<T>, EstimatorError> {
        match self.spam() {
            None => Ok(None),
            Some(_) => Ok(Some(NoisyGate::calibration(self, input)?)),
        }
    }

    fn calibrates(&self) -> bool {
        self.spam().is_some_and(|s| s.calibrate)
    }
}

/// One experiment: input `ρ_i`, observable `M`, measured overlap `x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord<T> {
    pub input: PauliOperator,
    pub weight: usize,
    pub observable: PauliOperator,
    pub value: T,
    pub calibration: Option<T>,
    pub shots: Shots,
}

/// Execution knobs that never change the result.
#[derive(Debug, Clone, Default)]
pub struct RunOptions<T> {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Preparation durations per weight `w = 1..=n`, copied into the report.
    pub prep_times: Option<Vec<T>>,
    /// Bootstrap resamples for a diagnostic standard error of `F̄`.
    pub bootstrap: Option<usize>,
}

/// Runs `plan` against `gate` with every random choice derived from `seed`.
pub fn run_certification<T: Real, B: ExperimentBackend<T>>(
    gate: &B,
    plan: &SamplingPlan<T>,
    seed: u64,
) -> Result<CertificationReport<T>, EstimatorError> {
    run_certification_with(gate, plan, seed, &RunOptions::default())
}

pub fn run_certification_with<T: Real, B: ExperimentBackend<T>>(
    gate: &B,
    plan: &SamplingPlan<T>,
    seed: u64,
    options: &RunOptions<T>,
) -> Result<CertificationReport<T>, EstimatorError> {
    let n = gate.num_qubits();
    if plan.n != n {
        return Err(EstimatorError::DimensionMismatch { plan: plan.n, gate: n });
    }
    if plan.allocation.values().sum::<usize>() != plan.m {
        return Err(EstimatorError::InvalidParameter(
            "allocation does not sum to m".into(),
        ));
    }
    if let Some(times) = &options.prep_times {
        if times.len() != n {
            return Err(EstimatorError::InvalidParameter(format!(
                "expected {n} preparation times, got {}",
                times.len()
            )));
        }
    }

    let mut jobs = Vec::with_capacity(plan.m);
    let mut warnings = Vec::new();
    let mut replaced = Vec::new();
    for (&w, &k) in &plan.allocation {
        if k == 0 {
            return Err(EstimatorError::EmptyStratum(w));
        }
        let mut rng = substream(seed, SAMPLE_STREAM, w, 0);
        let (inputs, with_replacement) = sample_distinct_weight(n, w, k, &mut rng)?;
        if with_replacement {
            warnings.push(format!(
                "weight {w}: {k} draws exceed the class size, sampled with replacement"
            ));
            replaced.push(w);
        }
        jobs.extend(inputs.into_iter().enumerate().map(|(i, p)| (w, i, p)));
    }

    let evaluate = || {
        jobs.par_iter()
            .map(|(w, i, input)| run_one(gate, plan.shots, seed, *w, *i, input))
            .collect::<Result<Vec<_>, _>>()
    };
    let records = match options.workers {
        None => evaluate()?,
        Some(0) => {
            return Err(EstimatorError::InvalidParameter("workers must be positive".into()))
        }
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| EstimatorError::ThreadPool(e.to_string()))?
            .install(evaluate)?,
    };

    CertificationReport::assemble(
        n,
        seed,
        plan.clone(),
        records,
        gate.calibrates(),
        &replaced,
        warnings,
        options,
    )
}

fn run_one<T: Real, B: ExperimentBackend<T>>(
    gate: &B,
    shots: Shots,
    seed: u64,
    w: usize,
    index: usize,
    input: &PauliOperator,
) -> Result<ExperimentRecord<T>, EstimatorError> {
    let observable = gate.observable(input)?;
    let exact = gate.overlap(input, &observable)?;
    let reference = gate.calibration(input)?;
    let (value, calibration) = match shots {
        Shots::Exact => (exact, reference),
        Shots::Count(count) => {
            let mut rng = substream(seed, SHOT_STREAM, w, index);
            let value = measure(exact, count, &mut rng)?;
            let calibration = match reference {
                Some(r) => Some(measure(r, count, &mut rng)?),
                None => None,
            };
            (value, calibration)
        }
    };
    Ok(ExperimentRecord {
        input: input.clone(),
        weight: w,
        observable,
        value: clamp(value, -T::one(), T::one()),
        calibration,
        shots,
    })
}

/// Mean of `count` ±1 outcomes with expectation `mean`.
fn measure<T: Real>(mean: T, count: u64, rng: &mut ChaCha8Rng) -> Result<T, EstimatorError> {
    let p = ((1.0 + mean.as_f64()) / 2.0).clamp(0.0, 1.0);
    let ups = Binomial::new(count, p)
        .map_err(|e| EstimatorError::InvalidParameter(e.to_string()))?
        .sample(rng);
    Ok(T::lit((2.0 * ups as f64 - count as f64) / count as f64))
}
