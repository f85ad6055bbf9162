use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cliffcert::estimator::CertificationReport;
use tempfile::TempDir;

fn cliffcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cliffcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", stderr(out));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn plan_default_parameters() {
    let out = cliffcert(&["plan", "--n", "7", "--epsilon", "0.01", "--delta", "0.04"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("m = 1656"), "{text}");
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .collect();
    assert_eq!(rows.len(), 7);
}

#[test]
fn plan_symmetric_range() {
    let out = cliffcert(&["plan", "--range", "-1", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("m = 6623"));
}

#[test]
fn plan_rejects_epsilon_out_of_range() {
    let out = cliffcert(&["plan", "--epsilon", "1.99"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sampling.epsilon"), "{}", stderr(&out));
}

#[test]
fn plan_reads_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 7\n[sampling]\nepsilon = 0.05\ndelta = 0.05\n",
    );
    let out = cliffcert(&["plan", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&out).contains("m = 738"), "{}", stderr(&out));
}

#[test]
fn certify_noiseless_spreader() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 7\n[gate]\nkind = \"spreader\"\nseed_qubit = 7\n[noise]\nkind = \"none\"\n\
         [sampling]\nseed = 3\n[output]\ndir = \"out\"\n",
    );
    let out = cliffcert(&["certify", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let report: CertificationReport<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(report.fidelity, 1.0);
    assert_eq!(report.plan.m, 1656);
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 7);
}

#[test]
fn certify_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 4\n[noise]\nkind = \"depolarizing\"\np = 0.1\n\
         [sampling]\nseed = 9\nshots = 200\nbootstrap = 50\n",
    );
    let out_dir = dir.path().join("o");
    let out = cliffcert(&["certify", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    let report: CertificationReport<f64> = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, text);
    let reparsed: CertificationReport<f64> = serde_json::from_str(&again).unwrap();
    assert_eq!(reparsed, report);
}

#[test]
fn certify_requires_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "[system]\nn = 3\n[output]\ndir = \"out\"\n");
    let out = cliffcert(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sampling.seed"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn dense_certify_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 3\nbackend = \"dense\"\n[noise]\nkind = \"depolarizing\"\np = 0.2\n\
         [sampling]\nseed = 11\n[output]\ndir = \"out\"\n",
    );
    let out = cliffcert(&["certify", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let report: CertificationReport<f64> = serde_json::from_str(&text).unwrap();
    let oracle = report.oracle.expect("dense runs carry the oracle");
    assert!(oracle.within_delta);
    assert!((report.fidelity - oracle.fidelity).abs() <= 0.04);
    let pr0 = 1.0 - 0.2 * 63.0 / 64.0;
    assert!((oracle.pr0 - pr0).abs() < 1e-12);
    assert!((oracle.fidelity - (8.0 * pr0 + 1.0) / 9.0).abs() < 1e-12);
}

#[test]
fn dense_backend_cap_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 6\nbackend = \"dense\"\n[sampling]\nseed = 1\n[output]\ndir = \"out\"\n",
    );
    let out = cliffcert(&["certify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn oracle_identity_noise() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "[system]\nn = 2\n");
    let v = json(&cliffcert(&["oracle", "--config", cfg.to_str().unwrap()]));
    assert!((v["pr0"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_single_qubit_depolarizing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 1\n[noise]\nkind = \"depolarizing\"\np = 0.1\n",
    );
    let v = json(&cliffcert(&["oracle", "--config", cfg.to_str().unwrap()]));
    assert!((v["fidelity"].as_f64().unwrap() - 0.95).abs() < 1e-12);
    assert!((v["pr0"].as_f64().unwrap() - 0.925).abs() < 1e-12);
    let pr_w: Vec<f64> = serde_json::from_value(v["pr_w"].clone()).unwrap();
    assert!((pr_w[0] - 0.925).abs() < 1e-12);
}

#[test]
fn oracle_beyond_cap_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "[system]\nn = 6\n");
    let out = cliffcert(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn spectrum_of_dephasing_sums_to_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 2\n[noise]\nkind = \"dephasing\"\nt2 = [1.0, 2.0]\ntau = 0.3\n",
    );
    let v = json(&cliffcert(&["spectrum", "--config", cfg.to_str().unwrap()]));
    let pr_w: Vec<f64> = serde_json::from_value(v["pr_w"].clone()).unwrap();
    assert_eq!(pr_w.len(), 3);
    assert!((pr_w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(pr_w.iter().all(|&p| p >= -1e-10));
}

#[test]
fn spectrum_beyond_cap_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", "[system]\nn = 5\n");
    let out = cliffcert(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn spectrum_amplitude_damping() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 2\n[noise]\nkind = \"amplitude_damping\"\ngamma = 0.3\n",
    );
    let v = json(&cliffcert(&["spectrum", "--config", cfg.to_str().unwrap()]));
    assert!((v["total"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    for entry in v["q"].as_array().unwrap() {
        assert!(entry["q"].as_f64().unwrap() >= -1e-10);
    }
}

#[test]
fn circuit_file_is_resolved_relative_to_config() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("gate.txt"), "# bell\nH 1\nCNOT 1 2\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        "[system]\nn = 2\n[gate]\nkind = \"circuit\"\npath = \"gate.txt\"\n\
         [noise]\nkind = \"pauli\"\nerrors = [[\"XI\", 0.1], [\"ZZ\", 0.05]]\n",
    );
    let v = json(&cliffcert(&["oracle", "--config", cfg.to_str().unwrap()]));
    assert!((v["pr0"].as_f64().unwrap() - 0.85).abs() < 1e-12);
}

#[test]
fn validation_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("[system]\nn = 0\n", "system.n"),
        ("[system]\nn = 3\n[sampling]\ndelta = -1.0\n", "sampling.delta"),
        ("[system]\nn = 3\n[sampling]\nrange = [1.0, 0.0]\n", "sampling.range"),
        ("[system]\nn = 3\n[gate]\nseed_qubit = 4\n", "gate.seed_qubit"),
        ("[system]\nn = 3\n[gate]\nkind = \"circuit\"\n", "gate.path"),
        ("[system]\nn = 3\n[gate]\nkind = \"circuit\"\npath = \"missing.txt\"\n", "gate.path"),
        ("[system]\nn = 3\n[noise]\nkind = \"depolarizing\"\np = 1.5\n", "noise.p"),
        ("[system]\nn = 2\n[noise]\nkind = \"dephasing\"\nt2 = [1.0]\ntau = 0.1\n", "noise.t2"),
        ("[system]\nn = 3\n[noise]\nkind = \"amplitude_damping\"\ngamma = 0.1\n", "noise.kind"),
        ("[system]\nn = 3\n[sampling]\nprep_times = [1.0]\n", "sampling.prep_times"),
        ("[system]\nn = 3\n[sampling]\nshots = 0\n", "shots"),
        ("[system]\nn = 3\nbogus = 1\n", "bogus"),
    ];
    for (i, (body, field)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.toml"), body);
        let out = cliffcert(&[
            "certify",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(1), "case {i}: {}", stderr(&out));
        assert!(stderr(&out).contains(field), "case {i}: {}", stderr(&out));
    }
}

#[test]
fn missing_config_file_exits_1() {
    let out = cliffcert(&["oracle", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_exits_1() {
    assert_eq!(cliffcert(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cliffcert(&["--help"]).status.code(), Some(0));
}
