//! End-to-end tests that drive the compiled `qdiff` binary: config
//! resolution, every subcommand at miniature scale, on-disk format layout,
//! manifest bookkeeping, exit codes, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdiff_core::{ClassSpec, StateSet, Streams, TargetFamily};
use tempfile::TempDir;

/// Miniature two-class single-qubit experiment: everything trains in
/// milliseconds so each subcommand can be exercised for real.
const TINY: &str = r#"
name = "tiny"
seed = 7
metric = "wass"
samples_per_class = 6
ancilla_qubits = 1
layers = 1
steps = 2
conditioning = "rx"

[schedule]
kind = "linear"
coeff = 0.3

[trainer]
iterations_per_step = 3

[[class]]
label = "ring-a"
family = "equator_ring"
alpha = 0.9

[[class]]
label = "ring-b"
family = "equator_ring"
alpha = 2.2
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn qdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdiff"))
        .args(args)
        .output()
        .expect("spawn qdiff")
}

fn run_ok(args: &[&str]) -> Output {
    let output = qdiff(args);
    assert!(
        output.status.success(),
        "qdiff {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Parses the documented binary container layout directly, independent of
/// the writer/reader pair inside the binary.
fn parse_qset(bytes: &[u8]) -> (String, usize, Vec<Vec<(f64, f64)>>) {
    let mut at = 0usize;
    let mut take = |n: usize| {
        let slice = &bytes[at..at + n];
        at += n;
        slice
    };
    assert_eq!(take(8), b"QDIFFSET");
    let version = u32::from_le_bytes(take(4).try_into().unwrap());
    assert_eq!(version, 1);
    let qubits = u32::from_le_bytes(take(4).try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(take(8).try_into().unwrap()) as usize;
    let label_len = u32::from_le_bytes(take(4).try_into().unwrap()) as usize;
    let label = String::from_utf8(take(label_len).to_vec()).unwrap();
    let prov_len = u32::from_le_bytes(take(4).try_into().unwrap()) as usize;
    let provenance: serde_json::Value = serde_json::from_slice(take(prov_len)).unwrap();
    assert_eq!(provenance["purpose"], "targets");
    let dim = 1usize << qubits;
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let mut amps = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re = f64::from_le_bytes(take(8).try_into().unwrap());
            let im = f64::from_le_bytes(take(8).try_into().unwrap());
            amps.push((re, im));
        }
        states.push(amps);
    }
    assert_eq!(at, bytes.len(), "trailing bytes after the last amplitude");
    (label, qubits, states)
}

fn tiny_class(label: &str, alpha: f64) -> ClassSpec {
    ClassSpec {
        label: label.to_string(),
        family: TargetFamily::EquatorRing { alpha },
        samples: 6,
    }
}

fn expected_targets() -> Vec<StateSet> {
    let streams = Streams::new(7);
    [tiny_class("ring-a", 0.9), tiny_class("ring-b", 2.2)]
        .iter()
        .enumerate()
        .map(|(j, class)| {
            let mut rng = streams.stream("targets", &[j as u64]);
            class.generate(&mut rng).unwrap()
        })
        .collect()
}

#[test]
fn gen_data_layout_matches_the_documented_container() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let out = tmp.path().join("out");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "gen-data",
    ]);

    for (j, expected) in expected_targets().iter().enumerate() {
        let label = expected.label().unwrap();
        let bytes = std::fs::read(out.join(format!("targets-{label}.qset"))).unwrap();
        let (file_label, qubits, states) = parse_qset(&bytes);
        assert_eq!(file_label, label);
        assert_eq!(qubits, 1);
        assert_eq!(states.len(), 6);
        for (parsed, state) in states.iter().zip(expected.iter()) {
            for (got, want) in parsed.iter().zip(state.amplitudes()) {
                assert_eq!(got.0.to_bits(), want.re.to_bits());
                assert_eq!(got.1.to_bits(), want.im.to_bits());
            }
        }
        let _ = j;
    }
}

#[test]
fn manifest_checksums_every_output() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let out = tmp.path().join("out");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "gen-data",
    ]);

    let doc = manifest(&out);
    assert_eq!(doc["command"], "gen-data");
    assert_eq!(doc["partial"], false);
    assert_eq!(doc["master_seed"], 7);
    assert_eq!(doc["config"]["samples_per_class"], 6);
    let files = doc["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(names.contains(&"targets-ring-a.qset"));
    assert!(names.contains(&"targets-ring-b.qset"));
    for file in files {
        assert_eq!(file["sha256"].as_str().unwrap().len(), 64);
        assert!(file["bytes"].as_u64().unwrap() > 0);
    }
}

#[test]
fn eval_scores_generated_targets_at_zero_distance() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let data = tmp.path().join("data");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "gen-data",
        "--format",
        "jsonl",
    ]);

    let out = tmp.path().join("eval");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "eval",
        "--states",
        data.to_str().unwrap(),
    ]);

    let (header, rows) = read_csv(&out.join("eval_losses.csv"));
    assert_eq!(header, ["label", "phase", "distance", "percent"]);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row[1], "states");
        let distance: f64 = row[2].parse().unwrap();
        assert!(distance.abs() < 1e-9, "self-distance {distance}");
    }
    assert!(out.join("spread.csv").exists());
    assert!(out.join("class_summary.csv").exists());
    assert!(out.join("bloch-ring-a.csv").exists());
}

#[test]
fn diffuse_reports_every_step_for_every_class() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let out = tmp.path().join("out");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "diffuse",
    ]);

    let (header, rows) = read_csv(&out.join("diffusion.csv"));
    assert_eq!(header, ["step", "label", "distance", "normalized", "floor"]);
    // Steps 0..=2 for each of the two classes.
    assert_eq!(rows.len(), 6);
    for t in 0..=2 {
        assert!(out.join(format!("scrambled-ring-a-t{t}.qset")).exists());
        assert!(out.join(format!("scrambled-ring-b-t{t}.qset")).exists());
    }
    // The untouched ensembles sit at the normalization scale, so the worst
    // class's step-0 row reads exactly 1 after normalization.
    let max_step0: f64 = rows
        .iter()
        .filter(|r| r[0] == "0")
        .map(|r| r[3].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((max_step0 - 1.0).abs() < 1e-12);
}

#[test]
fn train_sample_eval_chain_works() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let train_dir = tmp.path().join("train");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "train",
    ]);
    let model = train_dir.join("model.json");
    assert!(model.exists());
    assert!(train_dir.join("losses.jsonl").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(train_dir.join("train_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["master_seed"], 7);
    assert_eq!(report["steps"].as_array().unwrap().len(), 2);

    let sample_dir = tmp.path().join("sample");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        sample_dir.to_str().unwrap(),
        "sample",
        "--model",
        model.to_str().unwrap(),
        "--count",
        "4",
    ]);
    let bytes = std::fs::read(sample_dir.join("samples-ring-a.qset")).unwrap();
    // magic(8) version(4) qubits(4) count(8) label-len(4)
    let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    assert_eq!(count, 4);

    let eval_dir = tmp.path().join("eval");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
        "eval",
        "--model",
        model.to_str().unwrap(),
    ]);
    let (_, rows) = read_csv(&eval_dir.join("eval_losses.csv"));
    let phases: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(phases, ["train", "train", "test", "test"]);
}

#[test]
fn training_artifacts_are_byte_identical_across_runs_and_threads() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for (dir, threads) in dirs.iter().zip(["1", "2"]) {
        run_ok(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--threads",
            threads,
            "train",
        ]);
    }
    for name in ["model.json", "losses.jsonl", "train_report.json"] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn ablate_skips_grid_points_that_break_the_depth_budget() {
    let tmp = TempDir::new().unwrap();
    let body = format!(
        "{TINY}\n[ablate]\nvary = \"ancillas_constrained\"\nvalues = [4, 5]\ntest_samples = 4\npartitions = 2\n"
    );
    let config = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "ablate",
    ]);

    let (header, rows) = read_csv(&out.join("ablation.csv"));
    assert_eq!(header[0], "value");
    assert_eq!(rows.len(), 2);
    // 4 ancillas force depth 12/4 = 3; 5 does not divide the budget.
    assert_eq!(rows[0][0], "4");
    assert_eq!(rows[0][2], "4");
    assert_eq!(rows[0][3], "3");
    assert!(rows[0][9].is_empty());
    let _: f64 = rows[0][7].parse().unwrap();
    assert_eq!(rows[1][0], "5");
    assert!(rows[1][7].is_empty());
    assert!(rows[1][9].contains("not an integer"));
}

#[test]
fn sweep_mu_walks_the_requested_grid() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let train_dir = tmp.path().join("train");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "train",
    ]);

    let out = tmp.path().join("sweep");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "sweep-mu",
        "--model",
        train_dir.join("model.json").to_str().unwrap(),
        "--points",
        "3",
    ]);

    let (header, rows) = read_csv(&out.join("mu_sweep.csv"));
    assert_eq!(header, ["mu", "dist_ring-a", "dist_ring-b", "note"]);
    assert_eq!(rows.len(), 3);
    let mus: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(mus[0], 0.0);
    assert!((mus[1] - std::f64::consts::PI).abs() < 1e-12);
    assert!((mus[2] - std::f64::consts::TAU).abs() < 1e-12);
}

#[test]
fn benchmark_trains_both_arms_with_matched_totals() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let out = tmp.path().join("out");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "benchmark",
    ]);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("benchmark.json")).unwrap())
            .unwrap();
    assert_eq!(summary["total_training_states"], 12);
    assert!(summary["loss_ratio"].as_f64().unwrap() > 0.0);
    assert!(out.join("conditioned/model.json").exists());
    assert!(out.join("unconditioned/model.json").exists());
    let (_, rows) = read_csv(&out.join("benchmark.csv"));
    assert_eq!(rows.len(), 2);
}

#[test]
fn compare_conditioning_flags_the_phase_only_mode_as_classless() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let out = tmp.path().join("out");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "compare-conditioning",
    ]);

    let (header, rows) = read_csv(&out.join("conditioning.csv"));
    assert_eq!(header[0], "mode");
    assert_eq!(rows.len(), 4);
    let rz = rows.iter().find(|r| r[0] == "rz").unwrap();
    assert_eq!(rz[3], "0", "rz identity gap must be exactly zero");
    assert!(!rz[4].is_empty());
    let rx = rows.iter().find(|r| r[0] == "rx").unwrap();
    assert!(rx[3].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "name = \"x\"\n[[class]]\nlabel = \"a\"\nfamily = \"ghz_phase\"\n");
    let output = qdiff(&["--config", config.to_str().unwrap(), "gen-data"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("seed"));
}

#[test]
fn unknown_preset_lists_the_valid_names() {
    let output = qdiff(&["--preset", "nope", "--seed", "1", "gen-data"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("planar-rings"), "stderr: {stderr}");
}

#[test]
fn eval_requires_exactly_one_input_mode() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let out = tmp.path().join("out");
    let output = qdiff(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "eval",
    ]);
    assert_eq!(output.status.code(), Some(2));
    // The aborted run still leaves a manifest that says so.
    let doc = manifest(&out);
    assert_eq!(doc["partial"], true);
    assert!(doc["abort"].as_str().unwrap().contains("--model"));
}

#[test]
fn sample_rejects_a_model_trained_on_a_different_architecture() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), TINY);
    let train_dir = tmp.path().join("train");
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "train",
    ]);

    let other = TINY.replace("ancilla_qubits = 1", "ancilla_qubits = 2");
    let other_dir = TempDir::new().unwrap();
    let other_config = write_config(other_dir.path(), &other);
    let output = qdiff(&[
        "--config",
        other_config.to_str().unwrap(),
        "--out",
        other_dir.path().join("out").to_str().unwrap(),
        "sample",
        "--model",
        train_dir.join("model.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("does not match"));
}
