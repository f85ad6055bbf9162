use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cliffcert::estimator::{
    remove_decoherence, run_certification_with, CertificationReport, OracleComparison, RunOptions, SamplingPlan,
};
use cliffcert::oracle::{exact_average_fidelity, exact_pr0, pauli_twirl_spectrum, relative_noise, DenseChannel};
use cliffcert::pauli::{count_weight_class, enumerate_all};
use serde_json::json;

use crate::config::{Backend, RunConfig, SamplingSection};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cliffcert", version, about = "Average-fidelity certification of noisy Clifford gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the experiment count m and the per-weight allocation.
    Plan(PlanArgs),
    /// Run the certification protocol and write JSON and CSV reports.
    Certify(CertifyArgs),
    /// Print exact Pr(0), fidelity and Pr(w) from the dense model.
    Oracle(GateArgs),
    /// Print the exact Pauli-twirl spectrum.
    Spectrum(GateArgs),
}

#[derive(Debug, Args)]
pub struct GateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Spreader seed qubit, 1-based.
    #[arg(long)]
    pub seed_qubit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub range: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Plan(args) => cmd_plan(args, stdout),
        Command::Certify(args) => cmd_certify(args, stdout),
        Command::Oracle(args) => cmd_oracle(args, stdout),
        Command::Spectrum(args) => cmd_spectrum(args, stdout),
    }
}

fn load(args: &GateArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(q) = args.seed_qubit {
        config.gate.seed_qubit = Some(q);
    }
    config.validate()?;
    Ok(config)
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(|source| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

pub fn cmd_plan(args: &PlanArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (mut sampling, mut n) = match &args.config {
        Some(path) => {
            let config = RunConfig::load(path)?;
            (config.sampling, Some(config.system.n))
        }
        None => (SamplingSection::default(), None),
    };
    n = args.n.or(n);
    if let Some(e) = args.epsilon {
        sampling.epsilon = e;
    }
    if let Some(d) = args.delta {
        sampling.delta = d;
    }
    if let Some(r) = &args.range {
        sampling.range = [r[0], r[1]];
    }
    if n == Some(0) {
        return Err(CliError::invalid("system.n", "must be at least 1"));
    }
    sampling.validate(n)?;
    let range = (sampling.range[0], sampling.range[1]);

    let mut text = format!(
        "epsilon = {}\ndelta = {}\nrange = [{}, {}]\n",
        sampling.epsilon, sampling.delta, range.0, range.1
    );
    let Some(n) = n else {
        let m = cliffcert::estimator::plan_samples(sampling.epsilon, sampling.delta, range)
            .map_err(|e| CliError::invalid("sampling", e))?;
        text += &format!("m = {m}\n");
        return emit(stdout, &text);
    };
    let plan = match sampling.m {
        Some(m) => SamplingPlan::with_total(n, m, sampling.epsilon, sampling.delta, range, sampling.shots),
        None => SamplingPlan::new(n, sampling.epsilon, sampling.delta, range, sampling.shots),
    }
    .map_err(|e| CliError::invalid("sampling", e))?;
    text += &format!("n = {n}\nm = {}\n\n{:>3} {:>8} {:>24}\n", plan.m, "w", "k_w", "class_size");
    for (&w, &k) in &plan.allocation {
        let size = count_weight_class(n, w).map_err(|e| CliError::invalid("system.n", e))?;
        text += &format!("{w:>3} {k:>8} {size:>24}\n");
    }
    emit(stdout, &text)
}

pub fn cmd_certify(args: &CertifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load(&args.gate)?;
    let seed = config.seed(args.seed)?;
    if args.workers == Some(0) {
        return Err(CliError::invalid("--workers", "must be at least 1"));
    }
    let out_dir = config.output_dir(args.out.as_deref())?;
    let report = certify(&config, seed, args.workers)?;
    let json_path = out_dir.join(&config.output.json);
    let csv_path = out_dir.join(&config.output.csv);
    write_reports(&report, &out_dir, &json_path, &csv_path)?;

    let mut text = format!("F = {}\nPr(0) = {}\n", report.fidelity, report.pr0);
    if let Some(c) = &report.corrected {
        text += &format!("F (decoherence removed) = {}\n", c.fidelity);
    }
    if let Some(o) = &report.oracle {
        text += &format!("oracle F = {} (within delta: {})\n", o.fidelity, o.within_delta);
    }
    for w in &report.warnings {
        text += &format!("warning: {w}\n");
    }
    text += &format!("wrote {}\nwrote {}\n", json_path.display(), csv_path.display());
    emit(stdout, &text)
}

/// Runs the configured protocol and returns the report without writing it.
pub fn certify(config: &RunConfig, seed: u64, workers: Option<usize>) -> Result<CertificationReport<f64>, CliError> {
    let plan = config.plan()?;
    let options = RunOptions {
        workers,
        prep_times: config.sampling.prep_times.clone(),
        bootstrap: config.sampling.bootstrap,
    };
    let mut report = match config.system.backend {
        Backend::Scalable => run_certification_with(&config.noisy_gate()?, &plan, seed, &options)?,
        Backend::Dense => {
            let mut report = run_certification_with(&config.dense_gate()?, &plan, seed, &options)?;
            let exact = exact_values(config)?;
            report.oracle = Some(OracleComparison {
                pr0: exact.pr0,
                fidelity: exact.fidelity,
                within_delta: (report.fidelity - exact.fidelity).abs() <= report.delta,
            });
            report
        }
    };
    if let Some(model) = config.correction()? {
        let oracle = report.oracle.take();
        report = remove_decoherence(&report, &model, &config.ideal_gate()?)?;
        report.oracle = oracle;
    }
    Ok(report)
}

fn write_reports(
    report: &CertificationReport<f64>,
    dir: &Path,
    json_path: &Path,
    csv_path: &Path,
) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Write { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(json_path, json).map_err(io(json_path))?;
    std::fs::write(csv_path, report.to_csv()).map_err(io(csv_path))?;
    Ok(())
}

struct Exact {
    pr0: f64,
    fidelity: f64,
    by_weight: Option<Vec<f64>>,
}

fn exact_values(config: &RunConfig) -> Result<Exact, CliError> {
    let gate = config.ideal_gate()?;
    let noise = config.dense_noise(&gate)?;
    let noisy = DenseChannel::ideal_of_gate(&gate)?.then(&noise)?;
    let pr0 = exact_pr0(&relative_noise(gate.ideal(), &noisy)?);
    let fidelity = exact_average_fidelity(gate.ideal(), &noisy)?;
    let by_weight = match pauli_twirl_spectrum(&noisy, gate.ideal()) {
        Ok(s) => Some(s.by_weight),
        Err(cliffcert::oracle::OracleError::TooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Exact {
        pr0,
        fidelity,
        by_weight,
    })
}

pub fn cmd_oracle(args: &GateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load(args)?;
    let exact = exact_values(&config)?;
    let value = json!({
        "n": config.n(),
        "pr0": exact.pr0,
        "fidelity": exact.fidelity,
        "pr_w": exact.by_weight,
    });
    emit(stdout, &(serde_json::to_string_pretty(&value)? + "\n"))
}

pub fn cmd_spectrum(args: &GateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load(args)?;
    let gate = config.ideal_gate()?;
    let noise = config.dense_noise(&gate)?;
    let noisy = DenseChannel::ideal_of_gate(&gate)?.then(&noise)?;
    let spectrum = pauli_twirl_spectrum(&noisy, gate.ideal())?;
    let q: Vec<_> = enumerate_all(config.n())
        .zip(&spectrum.probabilities)
        .map(|(p, q)| json!({ "pauli": p.to_string(), "q": q }))
        .collect();
    let value = json!({
        "n": config.n(),
        "pr_w": spectrum.by_weight,
        "total": spectrum.by_weight.iter().sum::<f64>(),
        "q": q,
    });
    emit(stdout, &(serde_json::to_string_pretty(&value)? + "\n"))
}
