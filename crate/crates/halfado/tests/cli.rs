use std::path::Path;
use std::process::{Command, Output};

use halfado::experiment::ExperimentConfig;
use halfado::io::read_manifest;
use halfado::runner::RunReport;
use halfado_core::Mode;

fn halfado(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfado")).args(args).current_dir(dir).output().unwrap()
}

fn ok(output: Output) -> String {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "mode = \"auction\"\nc = 0.3\nm = 50\n").unwrap();
    let printed = ok(halfado(&["config", "--config", "run.toml", "--m", "70", "--oracle", "truth"], dir.path()));
    let config = ExperimentConfig::from_toml(&printed).unwrap();
    assert_eq!((config.mode, config.c, config.m), (Mode::Auction, 0.3, 70));
    assert_eq!(config.oracle.unwrap().to_string(), "truth");
}

#[test]
fn generated_dataset_replays_with_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let gen = ["--input", "gen:fintech", "--events", "20000", "--population", "5000", "--seed", "3"];
    ok(halfado(&[&["generate", "data", "--out", "tx.ndjson"], &gen[..]].concat(), dir.path()));
    let manifest = read_manifest(&dir.path().join("tx.ndjson")).unwrap();
    assert_eq!(manifest.records, 20_000);

    let common = ["run", "--mode", "auction", "--m", "100"];
    ok(halfado(&[&common[..], &["--input", "tx.ndjson", "--seed", "3", "--report", "file.json"]].concat(), dir.path()));
    ok(halfado(&[&common[..], &gen[..], &["--report", "gen.json", "--decisions", "d.csv"]].concat(), dir.path()));

    let read = |name: &str| -> RunReport {
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap()
    };
    let (from_file, generated) = (read("file.json").without_timing(), read("gen.json").without_timing());
    assert_eq!(from_file, generated);
    assert_eq!(generated.events_processed, 20_000);
    assert_eq!(generated.planted.len(), 2);
    let decisions = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(decisions.lines().count(), 20_001);
}

#[test]
fn report_goes_to_stdout_without_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--mode", "agnostic", "--input", "gen:text", "--events", "3000", "--m", "300"];
    let stdout =
        ok(halfado(&[&args[..], &["--theta", "0.001", "--alpha", "0.2", "--vocabulary", "200"]].concat(), dir.path()));
    let report: RunReport = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report.events_processed, 3000);
    assert!(report.baselines.is_some());
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--mode", "sideways"][..],
        &["run", "--input", "missing.txt"][..],
        &["run", "--oracle", "human"][..],
        &["run", "--config", "absent.toml"][..],
    ] {
        let output = halfado(args, dir.path());
        assert!(!output.status.success(), "{args:?} should fail");
        assert!(!output.stderr.is_empty());
    }
}
