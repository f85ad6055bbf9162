//! The certification pipeline: sample planning, stratified Pauli
//! experiments, aggregation into `Pr(0)` and the average fidelity, and
//! removal of a factorized decoherence contribution.

mod plan;
mod report;
mod run;

pub use plan::{hoeffding_bound, plan_samples, stratify, SamplingPlan, Shots};
pub use report::{
    average_fidelity, estimate_pr0, remove_decoherence, remove_decoherence_with_floor,
    CertificationReport, OracleComparison, StratumSummary, CSV_HEADER, DEFAULT_ED_FLOOR,
};
pub use run::{
    run_certification, run_certification_with, ExperimentBackend, ExperimentRecord, RunOptions,
};

use thiserror::Error;

use crate::channels::ChannelError;
use crate::clifford::CliffordError;
use crate::pauli::PauliError;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate range ({0}, {1}): need a < b")]
    DegenerateRange(f64, f64),
    #[error("{m} experiments cannot cover {n} weight strata")]
    TooFewSamples { m: usize, n: usize },
    #[error("stratum of weight {0} has no records")]
    EmptyStratum(usize),
    #[error("value {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("plan is for {plan} qubits but the gate acts on {gate}")]
    DimensionMismatch { plan: usize, gate: usize },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
}
