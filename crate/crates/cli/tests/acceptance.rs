//! Acceptance suite: one PASS/FAIL line per criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cliffcert::channels::{
    depolarizing, random_pauli_channel, DephasingMode, DephasingModel, NoiseModel, NoisyGate, PauliChannel,
};
use cliffcert::clifford::{block_circuit, default_chain, spreader_circuit, CircuitSpec};
use cliffcert::estimator::{
    plan_samples, remove_decoherence, run_certification, CertificationReport, SamplingPlan, Shots,
};
use cliffcert::oracle::{
    circuit_unitary, clifford_group_average_fidelity, exact_average_fidelity, exact_pr0, haar_average_fidelity_mc,
    pauli_matrix, pauli_twirl_spectrum, CMatrix, DenseChannel,
};
use cliffcert::pauli::enumerate_all;
use cliffcert::{CliffordTableau, GateKind, Pauli1, PauliOperator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "Hoeffding planner", budget: Duration::from_secs(1), check: hoeffding_planner },
        Criterion { id: 2, name: "gate correctness", budget: Duration::from_secs(5), check: gate_correctness },
        Criterion { id: 3, name: "oracle equivalence", budget: Duration::from_secs(30), check: oracle_equivalence },
        Criterion { id: 4, name: "2-design identity", budget: Duration::from_secs(30), check: two_design_identity },
        Criterion { id: 5, name: "statistical coverage", budget: Duration::from_secs(120), check: statistical_coverage },
        Criterion { id: 6, name: "decoherence separation", budget: Duration::from_secs(60), check: decoherence_separation },
        Criterion { id: 7, name: "weight spectrum", budget: Duration::from_secs(10), check: weight_spectrum },
        Criterion { id: 8, name: "determinism", budget: Duration::from_secs(60), check: determinism },
        Criterion { id: 9, name: "scalability", budget: Duration::from_secs(10), check: scalability },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over budget {:?}", c.budget)),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {}: {} ({detail}) [{:.2}s]", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn hoeffding_planner() -> Outcome {
    let a = plan_samples(0.01, 0.04, (0.0, 1.0)).map_err(err)?;
    let b = plan_samples(0.05, 0.05, (0.0, 1.0)).map_err(err)?;
    ensure!(a == 1656, "m(0.01, 0.04) = {a}, expected 1656");
    ensure!(b == 738, "m(0.05, 0.05) = {b}, expected 738");
    Ok(format!("m = {a}, {b}"))
}

/// `exp(−iπ/4·G)` by the matrix exponential.
fn quarter_rotation(n: usize, letters: &[(usize, Pauli1)]) -> CMatrix {
    let mut g = PauliOperator::identity(n);
    for &(q, l) in letters {
        g.set(q, l);
    }
    (pauli_matrix(&g) * Complex64::new(0.0, -std::f64::consts::FRAC_PI_4)).exp()
}

fn rotation_unitary(circuit: &CircuitSpec) -> Result<CMatrix, String> {
    let n = circuit.num_qubits();
    let mut u = CMatrix::identity(1 << n, 1 << n);
    for g in circuit.gates() {
        let q = g.qubits();
        let step = match g.kind() {
            GateKind::X90 => quarter_rotation(n, &[(q[0], Pauli1::X)]),
            GateKind::Y90 => quarter_rotation(n, &[(q[0], Pauli1::Y)]),
            GateKind::Z90 => quarter_rotation(n, &[(q[0], Pauli1::Z)]),
            GateKind::Zz90 => quarter_rotation(n, &[(q[0], Pauli1::Z), (q[1], Pauli1::Z)]),
            other => return Err(format!("unexpected gate {other:?} in a block circuit")),
        };
        u = step * u;
    }
    Ok(u)
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_conjugation(circuit: &CircuitSpec) -> Result<(usize, f64), String> {
    let n = circuit.num_qubits();
    let tableau = CliffordTableau::from_circuit(circuit);
    let u = rotation_unitary(circuit)?;
    let lib = circuit_unitary(circuit);
    let worst_lib = max_diff(&u, &lib);
    ensure!(worst_lib < 1e-12, "library unitary differs from the exponentials by {worst_lib:e}");
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in enumerate_all(n) {
        for signed in [p.clone(), p.negated()] {
            let image = tableau.conjugate(&signed).map_err(err)?;
            let dense = &u * pauli_matrix(&signed) * u.adjoint();
            worst = worst.max(max_diff(&dense, &pauli_matrix(&image)));
            count += 1;
        }
    }
    Ok((count, worst))
}

fn gate_correctness() -> Outcome {
    let n = 7;
    let spreader = CliffordTableau::from_circuit(&spreader_circuit(n, &default_chain(n, n - 1)).map_err(err)?);
    let input = PauliOperator::single(n, n - 1, Pauli1::Z).map_err(err)?;
    let image = spreader.conjugate(&input).map_err(err)?;
    let target = PauliOperator::from_letters(&[Pauli1::Z; 7]);
    ensure!(image == target, "U_c maps {input} to {image}, expected {target}");

    let mut circuits = Vec::new();
    for n in 2..=4 {
        for seed in 0..n {
            circuits.push(spreader_circuit(n, &default_chain(n, seed)).map_err(err)?);
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    circuits.push(block_circuit(n, i, j).map_err(err)?);
                }
            }
        }
    }
    let mut total = 0;
    let mut worst = 0.0f64;
    for c in &circuits {
        let (count, w) = check_conjugation(c)?;
        total += count;
        worst = worst.max(w);
    }
    ensure!(worst < 1e-12, "tableau and dense conjugation differ by {worst:e}");
    Ok(format!(
        "IIIIIIZ -> {image}; {} circuits, {total} signed Paulis, max dev {worst:.1e}",
        circuits.len()
    ))
}

fn spreader_gate(n: usize, noise: NoiseModel<f64>) -> Result<NoisyGate<f64>, String> {
    let circuit = spreader_circuit(n, &default_chain(n, n - 1)).map_err(err)?;
    NoisyGate::from_circuit(circuit, noise).map_err(err)
}

fn noisy_dense(gate: &NoisyGate<f64>, noise: &DenseChannel<f64>) -> Result<DenseChannel<f64>, String> {
    DenseChannel::from_circuit(gate.circuit().expect("built from a circuit"))
        .and_then(|u| u.then(noise))
        .map_err(err)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_pr0 = 0.0f64;
    let mut worst_f = 0.0f64;
    for n in 1..=3 {
        let plan = SamplingPlan::<f64>::full_enumeration(n, Shots::Exact).map_err(err)?;
        for trial in 0..25 {
            let channel: PauliChannel<f64> = random_pauli_channel(n, 6, &mut rng);
            let gate = spreader_gate(n, NoiseModel::Pauli(channel.clone()))?;
            let report = run_certification(&gate, &plan, trial).map_err(err)?;
            let dense_noise = DenseChannel::pauli_channel(&channel).map_err(err)?;
            let pr0 = exact_pr0(&dense_noise);
            let f = exact_average_fidelity(gate.ideal(), &noisy_dense(&gate, &dense_noise)?).map_err(err)?;
            worst_pr0 = worst_pr0.max((report.pr0 - pr0).abs());
            worst_f = worst_f.max((report.fidelity - f).abs());
        }
    }
    ensure!(worst_pr0 <= 1e-12, "Pr(0) deviates by {worst_pr0:e}");
    ensure!(worst_f <= 1e-12, "fidelity deviates by {worst_f:e}");
    Ok(format!("75 channels, max |dPr0| {worst_pr0:.1e}, max |dF| {worst_f:.1e}"))
}

fn two_design_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pauli: PauliChannel<f64> = random_pauli_channel(1, 3, &mut rng);
    let noisy = DenseChannel::amplitude_damping(1, 0.3)
        .and_then(|a| a.then(&DenseChannel::pauli_channel(&pauli)?))
        .map_err(err)?;
    let identity = CliffordTableau::identity(1);
    let exact = exact_average_fidelity(&identity, &noisy).map_err(err)?;
    let group = clifford_group_average_fidelity(&noisy).map_err(err)?;
    let (haar, se) = haar_average_fidelity_mc(&identity, &noisy, 100_000, &mut rng).map_err(err)?;
    ensure!(group.group_size == 24, "group has {} elements", group.group_size);
    let d_group = (group.fidelity - exact).abs();
    ensure!(d_group <= 1e-10, "group average {} vs exact {exact}: {d_group:e}", group.fidelity);
    ensure!(
        (haar - exact).abs() <= 3.0 * se,
        "Haar {haar} ± {se} vs exact {exact}"
    );
    ensure!(
        group.depolarizing_deviation <= 1e-10,
        "averaged PTM deviates from diag(1,c,c,c) by {:e}",
        group.depolarizing_deviation
    );
    Ok(format!(
        "F = {exact:.12}, group dev {d_group:.1e}, Haar {haar:.5} ± {se:.1e}, c = {:.6}",
        group.depolarizing_parameter
    ))
}

fn true_depolarizing_fidelity(n: usize, p: f64) -> f64 {
    let d2 = 4f64.powi(n as i32);
    let pr0 = 1.0 - p * (d2 - 1.0) / d2;
    let d = 2f64.powi(n as i32);
    (d * pr0 + 1.0) / (d + 1.0)
}

fn statistical_coverage() -> Outcome {
    let n = 7;
    let p = 0.2;
    let gate = spreader_gate(n, NoiseModel::Depolarizing(depolarizing(n, p).map_err(err)?))?;
    let plan = SamplingPlan::<f64>::new(n, 0.01, 0.04, (0.0, 1.0), Shots::Exact).map_err(err)?;
    ensure!(plan.m == 1656, "m = {}", plan.m);
    let truth = true_depolarizing_fidelity(n, p);
    let mut covered = 0;
    let mut worst = 0.0f64;
    for seed in 0..400u64 {
        let report = run_certification(&gate, &plan, seed).map_err(err)?;
        let dev = (report.fidelity - truth).abs();
        worst = worst.max(dev);
        if dev <= 0.04 {
            covered += 1;
        }
    }
    ensure!(covered >= 396, "{covered}/400 runs within 0.04");
    Ok(format!("{covered}/400 within 0.04 of {truth:.6}, max dev {worst:.2e}"))
}

fn random_t2(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(2.0..20.0)).collect()
}

fn decoherence_separation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let plan7 = SamplingPlan::<f64>::new(7, 0.01, 0.04, (0.0, 1.0), Shots::Exact).map_err(err)?;
    let dephasing = DephasingModel::new(random_t2(7, &mut rng), 1.0, DephasingMode::Endpoint).map_err(err)?;
    let gate = spreader_gate(7, NoiseModel::Dephasing(dephasing.clone()))?;
    let report = run_certification(&gate, &plan7, 5).map_err(err)?;
    let corrected = remove_decoherence(&report, &dephasing, &gate).map_err(err)?;
    let worst_fdc = worst_unit_deviation(&corrected)?;
    ensure!(worst_fdc <= 1e-9, "F_dc deviates from 1 by {worst_fdc:e}");

    let n = 5;
    let p = 0.15;
    let plan = SamplingPlan::<f64>::new(n, 0.01, 0.04, (0.0, 1.0), Shots::Exact).map_err(err)?;
    let dephasing = DephasingModel::new(random_t2(n, &mut rng), 1.0, DephasingMode::Endpoint).map_err(err)?;
    let dep = depolarizing(n, p).map_err(err)?;
    let composite = NoiseModel::Composite(vec![NoiseModel::Depolarizing(dep), NoiseModel::Dephasing(dephasing.clone())]);
    let gate = spreader_gate(n, composite)?;
    let report = run_certification(&gate, &plan, 6).map_err(err)?;
    let corrected = remove_decoherence(&report, &dephasing, &gate).map_err(err)?;
    let f = corrected.corrected.as_ref().ok_or("no corrected estimate")?.fidelity;
    let dense_dep = DenseChannel::depolarizing(&dep).map_err(err)?;
    let oracle = exact_average_fidelity(gate.ideal(), &noisy_dense(&gate, &dense_dep)?).map_err(err)?;
    let dev = (f - oracle).abs();
    ensure!(dev <= 1e-6, "corrected F {f} vs depolarizing oracle {oracle}: {dev:e}");
    Ok(format!("max |F_dc - 1| {worst_fdc:.1e}; corrected F {f:.9} vs oracle {oracle:.9}"))
}

fn worst_unit_deviation(report: &CertificationReport<f64>) -> Result<f64, String> {
    report
        .strata
        .iter()
        .map(|s| s.fdc.map(|v| (v - 1.0).abs()).ok_or(format!("stratum {} has no F_dc", s.w)))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
}

fn weight_spectrum() -> Outcome {
    let damping = DenseChannel::amplitude_damping(2, 0.35).map_err(err)?;
    let s = pauli_twirl_spectrum(&damping, &CliffordTableau::identity(2)).map_err(err)?;
    let total: f64 = s.by_weight.iter().sum();
    let min = s.probabilities.iter().copied().fold(f64::INFINITY, f64::min);
    ensure!((total - 1.0).abs() <= 1e-10, "Pr(w) sums to {total}");
    ensure!(min >= -1e-10, "twirled probability {min}");

    let q: f64 = 0.137;
    let id = pauli_matrix(&PauliOperator::identity(1));
    let z = pauli_matrix(&PauliOperator::single(1, 0, Pauli1::Z).map_err(err)?);
    let kraus = vec![id * Complex64::new((1.0 - q).sqrt(), 0.0), z * Complex64::new(q.sqrt(), 0.0)];
    let dephasing = DenseChannel::from_kraus(1, kraus).map_err(err)?;
    let s1 = pauli_twirl_spectrum(&dephasing, &CliffordTableau::identity(1)).map_err(err)?;
    let dev = (s1.by_weight[1] - q).abs();
    ensure!(dev <= 1e-12, "Pr(1) = {} vs q = {q}", s1.by_weight[1]);
    let on_z = s1.probabilities[3];
    ensure!((on_z - q).abs() <= 1e-12, "q_Z = {on_z}");
    Ok(format!("sum {total:.12}, min q_E {min:.1e}; Pr(1) - q = {dev:.1e}"))
}

fn run_certify(config: &Path, out: &Path, workers: usize) -> Result<(Vec<u8>, Vec<u8>), String> {
    let output = Command::new(env!("CARGO_BIN_EXE_cliffcert"))
        .args(["certify", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--workers", &workers.to_string()])
        .output()
        .map_err(err)?;
    ensure!(
        output.status.success(),
        "certify failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let json = std::fs::read(out.join("report.json")).map_err(err)?;
    let csv = std::fs::read(out.join("report.csv")).map_err(err)?;
    Ok((json, csv))
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(err)?;
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[system]\nn = 7\n\n[gate]\nkind = \"spreader\"\nseed_qubit = 7\n\n\
         [noise]\nkind = \"depolarizing\"\np = 0.2\n\n\
         [sampling]\nepsilon = 0.01\ndelta = 0.04\nshots = 400\nseed = 20240611\nbootstrap = 100\n",
    )
    .map_err(err)?;
    let runs = [(1, "a"), (1, "b"), (4, "c"), (8, "d")];
    let mut outputs = Vec::new();
    for (workers, name) in runs {
        outputs.push(run_certify(&config, &dir.path().join(name), workers)?);
    }
    for (i, o) in outputs.iter().enumerate().skip(1) {
        ensure!(o.0 == outputs[0].0, "JSON of run {i} differs");
        ensure!(o.1 == outputs[0].1, "CSV of run {i} differs");
    }
    Ok(format!(
        "{} runs with workers 1,1,4,8 identical ({} B JSON, {} B CSV)",
        runs.len(),
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn scalability() -> Outcome {
    let n = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let model = DephasingModel::new(random_t2(n, &mut rng), 0.5, DephasingMode::Endpoint).map_err(err)?;
    let gate = spreader_gate(n, NoiseModel::Factorized(cliffcert::channels::dephasing(&model)))?;
    let plan = SamplingPlan::<f64>::new(n, 0.01, 0.04, (0.0, 1.0), Shots::Exact).map_err(err)?;
    ensure!(plan.m == 1656, "m = {}", plan.m);
    let start = Instant::now();
    let report = run_certification(&gate, &plan, 1).map_err(err)?;
    let elapsed = start.elapsed();
    ensure!(report.records.len() == 1656, "{} records", report.records.len());
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("n = 32, m = 1656, F = {:.6}, run {:.3}s", report.fidelity, elapsed.as_secs_f64()))
}
