//! Run configuration read from TOML.
//!
//! ```toml
//! [system]
//! n = 7
//! backend = "scalable"        # or "dense" (n <= 5)
//!
//! [gate]
//! kind = "spreader"           # or "circuit" with path = "gate.txt"
//! seed_qubit = 7              # 1-based
//!
//! [noise]
//! kind = "depolarizing"
//! p = 0.2
//!
//! [sampling]
//! epsilon = 0.01
//! delta = 0.04
//! range = [0.0, 1.0]
//! shots = "exact"
//! seed = 42
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use cliffcert::channels::{
    depolarizing, DephasingMode, DephasingModel, NoiseModel, NoisyGate, PauliChannel, Spam,
};
use cliffcert::clifford::{default_chain, spreader_circuit, CircuitSpec};
use cliffcert::estimator::{SamplingPlan, Shots};
use cliffcert::oracle::{DenseChannel, DenseGate, MAX_DENSE_QUBITS};
use serde::Deserialize;

use crate::error::{CliError, FieldContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Scalable,
    Dense,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    #[serde(default)]
    pub backend: Backend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSource {
    #[default]
    Spreader,
    Circuit,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    #[serde(default)]
    pub kind: GateSource,
    /// 1-based; defaults to the last qubit.
    pub seed_qubit: Option<usize>,
    /// 1-based `[source, target]` pairs; overrides `seed_qubit`.
    pub chain: Option<Vec<[usize; 2]>>,
    /// Circuit file, relative to the config file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerQubit {
    Uniform(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingSpec {
    pub t2: PerQubit,
    pub tau: f64,
    #[serde(default = "endpoint")]
    pub mode: DephasingMode,
    /// Per-gate durations for stepwise mode; defaults to `tau / gates`.
    pub durations: Option<Vec<f64>>,
}

fn endpoint() -> DephasingMode {
    DephasingMode::Endpoint
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    Depolarizing {
        p: f64,
    },
    /// `errors = [["XI", 0.1], ["IZ", 0.05]]`; the identity takes the rest
    /// unless listed.
    Pauli {
        errors: Vec<(String, f64)>,
    },
    Dephasing(DephasingSpec),
    /// Applied in list order.
    Composite {
        parts: Vec<NoiseSpec>,
    },
    /// Dense backend only.
    AmplitudeDamping {
        gamma: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamSection {
    #[serde(default)]
    pub prep: NoiseSpec,
    #[serde(default)]
    pub meas: NoiseSpec,
    #[serde(default = "yes")]
    pub calibrate: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_range")]
    pub range: [f64; 2],
    #[serde(default = "exact")]
    pub shots: Shots,
    pub seed: Option<u64>,
    /// Overrides the Hoeffding count.
    pub m: Option<usize>,
    /// Every non-identity Pauli once; ignores `m`.
    #[serde(default)]
    pub full_enumeration: bool,
    pub bootstrap: Option<usize>,
    /// Preparation durations per weight, copied into the CSV.
    pub prep_times: Option<Vec<f64>>,
}

fn default_epsilon() -> f64 {
    0.01
}
fn default_delta() -> f64 {
    0.04
}
fn default_range() -> [f64; 2] {
    [0.0, 1.0]
}
fn exact() -> Shots {
    Shots::Exact
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            delta: default_delta(),
            range: default_range(),
            shots: Shots::Exact,
            seed: None,
            m: None,
            full_enumeration: false,
            bootstrap: None,
            prep_times: None,
        }
    }
}

impl SamplingSection {
    /// Field checks; `n` enables the ones that depend on the qubit count.
    pub fn validate(&self, n: Option<usize>) -> Result<(), CliError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::invalid("sampling.epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CliError::invalid("sampling.delta", format!("must be positive, got {}", self.delta)));
        }
        let [a, b] = self.range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(CliError::invalid("sampling.range", format!("need a < b, got [{a}, {b}]")));
        }
        if let Some(b) = self.bootstrap {
            if b < 2 {
                return Err(CliError::invalid("sampling.bootstrap", "needs at least 2 resamples"));
            }
        }
        let Some(n) = n else { return Ok(()) };
        if let Some(m) = self.m {
            if m < n {
                return Err(CliError::invalid("sampling.m", format!("{m} cannot cover {n} weight strata")));
            }
        }
        if let Some(t) = &self.prep_times {
            if t.len() != n {
                return Err(CliError::invalid("sampling.prep_times", format!("expected {n} values, got {}", t.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    #[serde(default = "default_json")]
    pub json: String,
    #[serde(default = "default_csv")]
    pub csv: String,
}

fn default_json() -> String {
    "report.json".into()
}
fn default_csv() -> String {
    "report.csv".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            json: default_json(),
            csv: default_csv(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub spam: Option<SpamSection>,
    /// Dephasing model divided out of the estimate.
    pub correction: Option<DephasingSpec>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text).map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn n(&self) -> usize {
        self.system.n
    }

    /// Checks every field that does not need the gate or noise built.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.n();
        if n == 0 {
            return Err(CliError::invalid("system.n", "must be at least 1"));
        }
        if self.system.backend == Backend::Dense && n > MAX_DENSE_QUBITS {
            return Err(CliError::CapExceeded {
                what: "the dense backend",
                n,
                max: MAX_DENSE_QUBITS,
            });
        }
        self.sampling.validate(Some(n))
    }

    /// Seed from the command line, else from `[sampling]`.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.sampling.seed)
            .ok_or_else(|| CliError::invalid("sampling.seed", "a seed is required (config or --seed)"))
    }

    pub fn circuit(&self) -> Result<CircuitSpec, CliError> {
        let n = self.n();
        match self.gate.kind {
            GateSource::Spreader => {
                if self.gate.path.is_some() {
                    return Err(CliError::invalid("gate.path", "only used with kind = \"circuit\""));
                }
                let chain = match (&self.gate.chain, self.gate.seed_qubit) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::invalid("gate.chain", "give either chain or seed_qubit"))
                    }
                    (Some(pairs), None) => pairs
                        .iter()
                        .map(|&[s, t]| {
                            if s == 0 || t == 0 {
                                Err(CliError::invalid("gate.chain", "qubits are 1-based"))
                            } else {
                                Ok((s - 1, t - 1))
                            }
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    (None, seed) => {
                        let seed = seed.unwrap_or(n);
                        if seed == 0 || seed > n {
                            return Err(CliError::invalid("gate.seed_qubit", format!("must lie in 1..={n}, got {seed}")));
                        }
                        default_chain(n, seed - 1)
                    }
                };
                spreader_circuit(n, &chain).field("gate.chain")
            }
            GateSource::Circuit => {
                let rel = self
                    .gate
                    .path
                    .as_ref()
                    .ok_or_else(|| CliError::invalid("gate.path", "required for kind = \"circuit\""))?;
                let path = self.base_dir.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::invalid("gate.path", format!("{}: {e}", path.display())))?;
                CircuitSpec::parse(n, &text).field("gate.path")
            }
        }
    }

    /// Scalable noise model, or `None` for noise only the dense backend has.
    pub fn noise_model(&self) -> Result<Option<NoiseModel<f64>>, CliError> {
        noise_model(&self.noise, self.n(), "noise")
    }

    /// The noisy gate on the scalable backend.
    pub fn noisy_gate(&self) -> Result<NoisyGate<f64>, CliError> {
        let circuit = self.circuit()?;
        let noise = self.noise_model()?.ok_or_else(|| {
            CliError::invalid("noise.kind", "amplitude_damping requires backend = \"dense\"")
        })?;
        let gate = NoisyGate::from_circuit(circuit, noise).field("noise")?;
        self.attach_spam(gate)
    }

    fn attach_spam(&self, gate: NoisyGate<f64>) -> Result<NoisyGate<f64>, CliError> {
        let Some(spam) = &self.spam else {
            return Ok(gate);
        };
        let n = self.n();
        let dense_only = || CliError::invalid("spam", "SPAM noise must be expressible on the scalable backend");
        let spam = Spam {
            prep: noise_model(&spam.prep, n, "spam.prep")?.ok_or_else(dense_only)?,
            meas: noise_model(&spam.meas, n, "spam.meas")?.ok_or_else(dense_only)?,
            calibrate: spam.calibrate,
        };
        gate.with_spam(spam).field("spam")
    }

    /// The ideal gate with no noise attached.
    pub fn ideal_gate(&self) -> Result<NoisyGate<f64>, CliError> {
        NoisyGate::from_circuit(self.circuit()?, NoiseModel::identity(self.n())).field("gate")
    }

    /// The noisy gate on the dense backend.
    pub fn dense_gate(&self) -> Result<DenseGate<f64>, CliError> {
        let gate = self.ideal_gate()?;
        let noise = self.dense_noise(&gate)?;
        let dense = DenseGate::new(gate.ideal().clone(), &noise)?;
        match self.attach_spam(gate)?.spam() {
            None => Ok(dense),
            Some(spam) => Ok(dense.with_spam(
                &DenseChannel::from_noise_model(&spam.prep)?,
                &DenseChannel::from_noise_model(&spam.meas)?,
                spam.calibrate,
            )?),
        }
    }

    /// Dense noise channel `Λ` of the configured gate.
    pub fn dense_noise(&self, gate: &NoisyGate<f64>) -> Result<DenseChannel<f64>, CliError> {
        if gate.num_qubits() > MAX_DENSE_QUBITS {
            return Err(CliError::CapExceeded {
                what: "the dense backend",
                n: gate.num_qubits(),
                max: MAX_DENSE_QUBITS,
            });
        }
        dense_noise(&self.noise, gate, "noise")
    }

    /// Dephasing model for `[correction]`.
    pub fn correction(&self) -> Result<Option<DephasingModel<f64>>, CliError> {
        self.correction
            .as_ref()
            .map(|spec| dephasing_model(spec, self.n(), "correction"))
            .transpose()
    }

    pub fn plan(&self) -> Result<SamplingPlan<f64>, CliError> {
        let s = &self.sampling;
        let n = self.n();
        let range = (s.range[0], s.range[1]);
        let plan = if s.full_enumeration {
            let mut plan = SamplingPlan::full_enumeration(n, s.shots).field("sampling.full_enumeration")?;
            plan.prob_epsilon = s.epsilon;
            plan.delta = s.delta;
            plan.range = range;
            plan
        } else if let Some(m) = s.m {
            SamplingPlan::with_total(n, m, s.epsilon, s.delta, range, s.shots).field("sampling.m")?
        } else {
            SamplingPlan::new(n, s.epsilon, s.delta, range, s.shots).field("sampling")?
        };
        Ok(plan)
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        match (flag, &self.output.dir) {
            (Some(dir), _) => Ok(dir.to_path_buf()),
            (None, Some(dir)) => Ok(self.base_dir.join(dir)),
            (None, None) => Err(CliError::invalid("output.dir", "an output directory is required (config or --out)")),
        }
    }
}

fn per_qubit(values: &PerQubit, n: usize, field: &str) -> Result<Vec<f64>, CliError> {
    match values {
        PerQubit::Uniform(v) => Ok(vec![*v; n]),
        PerQubit::List(v) if v.len() == n => Ok(v.clone()),
        PerQubit::List(v) => Err(CliError::invalid(field, format!("expected {n} values, got {}", v.len()))),
    }
}

fn dephasing_model(spec: &DephasingSpec, n: usize, field: &str) -> Result<DephasingModel<f64>, CliError> {
    let t2 = per_qubit(&spec.t2, n, &format!("{field}.t2"))?;
    let mut model = DephasingModel::new(t2, spec.tau, spec.mode).field(field)?;
    if let Some(d) = &spec.durations {
        model = model.with_step_durations(d.clone()).field(&format!("{field}.durations"))?;
    }
    Ok(model)
}

fn noise_model(spec: &NoiseSpec, n: usize, field: &str) -> Result<Option<NoiseModel<f64>>, CliError> {
    Ok(Some(match spec {
        NoiseSpec::None => NoiseModel::identity(n),
        NoiseSpec::Depolarizing { p } => NoiseModel::Depolarizing(depolarizing(n, *p).field(&format!("{field}.p"))?),
        NoiseSpec::Pauli { errors } => {
            let mut table = errors.clone();
            let identity = "I".repeat(n);
            if !table.iter().any(|(s, _)| s.trim_start_matches('+') == identity) {
                let total: f64 = table.iter().map(|(_, p)| p).sum();
                table.push((identity, 1.0 - total));
            }
            let borrowed: Vec<(&str, f64)> = table.iter().map(|(s, p)| (s.as_str(), *p)).collect();
            NoiseModel::Pauli(PauliChannel::from_strings(n, &borrowed).field(&format!("{field}.errors"))?)
        }
        NoiseSpec::Dephasing(d) => NoiseModel::Dephasing(dephasing_model(d, n, field)?),
        NoiseSpec::Composite { parts } => {
            if parts.is_empty() {
                return Err(CliError::invalid(&format!("{field}.parts"), "must not be empty"));
            }
            let mut models = Vec::with_capacity(parts.len());
            for (i, part) in parts.iter().enumerate() {
                match noise_model(part, n, &format!("{field}.parts[{i}]"))? {
                    Some(m) => models.push(m),
                    None => return Ok(None),
                }
            }
            NoiseModel::Composite(models)
        }
        NoiseSpec::AmplitudeDamping { gamma } => {
            if !(0.0..=1.0).contains(gamma) {
                return Err(CliError::invalid(&format!("{field}.gamma"), format!("must lie in [0, 1], got {gamma}")));
            }
            return Ok(None);
        }
    }))
}

fn dense_noise(spec: &NoiseSpec, gate: &NoisyGate<f64>, field: &str) -> Result<DenseChannel<f64>, CliError> {
    let n = gate.num_qubits();
    match spec {
        NoiseSpec::AmplitudeDamping { gamma } => {
            DenseChannel::amplitude_damping(n, *gamma).map_err(|e| CliError::invalid(&format!("{field}.gamma"), e))
        }
        NoiseSpec::Composite { parts } if !parts.is_empty() => {
            let mut acc = DenseChannel::identity(n)?;
            for (i, part) in parts.iter().enumerate() {
                acc = acc.then(&dense_noise(part, gate, &format!("{field}.parts[{i}]"))?)?;
            }
            Ok(acc)
        }
        other => {
            let model = noise_model(other, n, field)?.expect("scalable noise");
            let with = gate.with_noise(model).field(field)?;
            Ok(DenseChannel::noise_of_gate(&with)?)
        }
    }
}
