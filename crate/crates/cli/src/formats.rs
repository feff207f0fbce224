//! Versioned on-disk artifacts: state-set containers (binary and JSON-lines),
//! model checkpoints, loss records, CSV tables, and the run manifest that
//! inventories every written file with a content checksum.
//!
//! State-set binary layout, all integers little-endian:
//! magic `QDIFFSET` · u32 version · u32 qubits · u64 count ·
//! u32 label length + UTF-8 label · u32 provenance length + provenance JSON ·
//! then `count · 2^qubits` amplitude pairs as little-endian f64 (re, im).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qdiff_core::rng::SeedRecord;
use qdiff_core::train::TrainingRecord;
use qdiff_core::{DenoiseModel, StateSet, StateVector};

use crate::config::ExperimentConfig;
use crate::fail::{CmdResult, Failure};

pub const SET_MAGIC: &[u8; 8] = b"QDIFFSET";
pub const SET_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: u32 = 1;

/// How a state set is serialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SetFormat {
    /// Compact bit-exact container (`.qset`).
    Binary,
    /// Self-describing JSON-lines text (`.jsonl`).
    Jsonl,
}

impl SetFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SetFormat::Binary => "qset",
            SetFormat::Jsonl => "jsonl",
        }
    }
}

fn io_ctx(path: &Path, err: impl std::fmt::Display) -> Failure {
    Failure::io(format!("{}: {err}", path.display()))
}

/// JSON-lines header record (first line of `.jsonl` state sets) and the
/// metadata block carried by both formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetHeader {
    pub version: u32,
    pub qubits: u32,
    pub count: u64,
    pub label: String,
    pub provenance: SeedRecord,
}

#[derive(Serialize, Deserialize)]
struct JsonlState {
    /// `[re, im]` pairs in amplitude index order.
    amplitudes: Vec<[f64; 2]>,
}

/// Writes a uniform state set. Weighted (measurement-branch) ensembles are
/// in-memory objects only and are rejected here.
pub fn write_state_set(
    path: &Path,
    set: &StateSet,
    provenance: &SeedRecord,
    format: SetFormat,
) -> CmdResult<()> {
    if !set.is_uniform() {
        return Err(Failure::config(format!(
            "state-set files hold uniform ensembles; '{}' carries explicit weights",
            set.label().unwrap_or("unlabeled")
        )));
    }
    let header = SetHeader {
        version: SET_VERSION,
        qubits: set.num_qubits() as u32,
        count: set.len() as u64,
        label: set.label().unwrap_or("unlabeled").to_string(),
        provenance: provenance.clone(),
    };
    let file = File::create(path).map_err(|e| io_ctx(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        SetFormat::Binary => {
            let provenance_json = serde_json::to_vec(&header.provenance)?;
            out.write_all(SET_MAGIC).map_err(|e| io_ctx(path, e))?;
            out.write_all(&header.version.to_le_bytes())
                .map_err(|e| io_ctx(path, e))?;
            out.write_all(&header.qubits.to_le_bytes())
                .map_err(|e| io_ctx(path, e))?;
            out.write_all(&header.count.to_le_bytes())
                .map_err(|e| io_ctx(path, e))?;
            let label = header.label.as_bytes();
            out.write_all(&(label.len() as u32).to_le_bytes())
                .map_err(|e| io_ctx(path, e))?;
            out.write_all(label).map_err(|e| io_ctx(path, e))?;
            out.write_all(&(provenance_json.len() as u32).to_le_bytes())
                .map_err(|e| io_ctx(path, e))?;
            out.write_all(&provenance_json).map_err(|e| io_ctx(path, e))?;
            for state in set.iter() {
                for amp in state.amplitudes() {
                    out.write_all(&amp.re.to_le_bytes())
                        .map_err(|e| io_ctx(path, e))?;
                    out.write_all(&amp.im.to_le_bytes())
                        .map_err(|e| io_ctx(path, e))?;
                }
            }
        }
        SetFormat::Jsonl => {
            serde_json::to_writer(&mut out, &header)?;
            out.write_all(b"\n").map_err(|e| io_ctx(path, e))?;
            for state in set.iter() {
                let record = JsonlState {
                    amplitudes: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
                };
                serde_json::to_writer(&mut out, &record)?;
                out.write_all(b"\n").map_err(|e| io_ctx(path, e))?;
            }
        }
    }
    out.flush().map_err(|e| io_ctx(path, e))?;
    Ok(())
}

/// Reads either container format, dispatching on the magic bytes.
pub fn read_state_set(path: &Path) -> CmdResult<(StateSet, SetHeader)> {
    let file = File::open(path).map_err(|e| io_ctx(path, e))?;
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic).map_err(|e| io_ctx(path, e))?;
    if &magic == SET_MAGIC {
        read_binary_body(path, reader)
    } else {
        drop(reader);
        read_jsonl(path)
    }
}

fn read_u32(path: &Path, reader: &mut impl Read) -> CmdResult<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf).map_err(|e| io_ctx(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(path: &Path, reader: &mut impl Read) -> CmdResult<u64> {
    let mut buf = [0u8; 8];
    reader.read_exact(&mut buf).map_err(|e| io_ctx(path, e))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_binary_body(path: &Path, mut reader: impl Read) -> CmdResult<(StateSet, SetHeader)> {
    let version = read_u32(path, &mut reader)?;
    if version != SET_VERSION {
        return Err(Failure::config(format!(
            "{}: unsupported state-set version {version}",
            path.display()
        )));
    }
    let qubits = read_u32(path, &mut reader)?;
    let count = read_u64(path, &mut reader)?;
    let label_len = read_u32(path, &mut reader)? as usize;
    let mut label = vec![0u8; label_len];
    reader.read_exact(&mut label).map_err(|e| io_ctx(path, e))?;
    let label = String::from_utf8(label)
        .map_err(|_| Failure::config(format!("{}: label is not UTF-8", path.display())))?;
    let provenance_len = read_u32(path, &mut reader)? as usize;
    let mut provenance = vec![0u8; provenance_len];
    reader
        .read_exact(&mut provenance)
        .map_err(|e| io_ctx(path, e))?;
    let provenance: SeedRecord = serde_json::from_slice(&provenance)?;

    let dim = 1usize << qubits;
    let mut states = Vec::with_capacity(count as usize);
    let mut buf = vec![0u8; dim * 16];
    for _ in 0..count {
        reader.read_exact(&mut buf).map_err(|e| io_ctx(path, e))?;
        let amps: Vec<Complex64> = buf
            .chunks_exact(16)
            .map(|pair| {
                Complex64::new(
                    f64::from_le_bytes(pair[..8].try_into().unwrap()),
                    f64::from_le_bytes(pair[8..].try_into().unwrap()),
                )
            })
            .collect();
        states.push(StateVector::from_amplitudes(amps)?);
    }
    let header = SetHeader {
        version,
        qubits,
        count,
        label: label.clone(),
        provenance,
    };
    let set = StateSet::new(states)?.labeled(label);
    Ok((set, header))
}

fn read_jsonl(path: &Path) -> CmdResult<(StateSet, SetHeader)> {
    let text = std::fs::read_to_string(path).map_err(|e| io_ctx(path, e))?;
    let mut lines = text.lines().filter(|line| !line.trim().is_empty());
    let header_line = lines
        .next()
        .ok_or_else(|| Failure::config(format!("{}: empty state-set file", path.display())))?;
    let header: SetHeader = serde_json::from_str(header_line)?;
    if header.version != SET_VERSION {
        return Err(Failure::config(format!(
            "{}: unsupported state-set version {}",
            path.display(),
            header.version
        )));
    }
    let mut states = Vec::with_capacity(header.count as usize);
    for line in lines {
        let record: JsonlState = serde_json::from_str(line)?;
        let amps = record
            .amplitudes
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        states.push(StateVector::from_amplitudes(amps)?);
    }
    if states.len() != header.count as usize {
        return Err(Failure::config(format!(
            "{}: header promises {} states, file holds {}",
            path.display(),
            header.count,
            states.len()
        )));
    }
    let set = StateSet::new(states)?.labeled(header.label.clone());
    Ok((set, header))
}

pub fn write_model(path: &Path, model: &DenoiseModel) -> CmdResult<()> {
    let file = File::create(path).map_err(|e| io_ctx(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), model)?;
    Ok(())
}

pub fn read_model(path: &Path) -> CmdResult<DenoiseModel> {
    let file = File::open(path).map_err(|e| io_ctx(path, e))?;
    let model: DenoiseModel = serde_json::from_reader(BufReader::new(file))?;
    model.validate()?;
    Ok(model)
}

/// One line per optimizer iteration: the raw objective and the running best.
/// Contains no timing fields, so reruns are byte-identical.
pub fn write_loss_records(path: &Path, record: &TrainingRecord) -> CmdResult<()> {
    let file = File::create(path).map_err(|e| io_ctx(path, e))?;
    let mut out = BufWriter::new(file);
    for step in &record.steps {
        for point in &step.curve {
            serde_json::to_writer(&mut out, point)?;
            out.write_all(b"\n").map_err(|e| io_ctx(path, e))?;
        }
    }
    out.flush().map_err(|e| io_ctx(path, e))?;
    Ok(())
}

#[derive(Serialize)]
struct StepSummary {
    step: usize,
    best_loss: f64,
    best_iteration: usize,
}

/// Deterministic training summary (wall-clock timings live in the manifest,
/// which is the only artifact allowed to differ between identical reruns).
#[derive(Serialize)]
pub struct TrainReport {
    master_seed: u64,
    metric: String,
    normalization_constant: f64,
    final_train_loss: f64,
    final_test_loss: f64,
    steps: Vec<StepSummary>,
}

impl TrainReport {
    pub fn from_record(record: &TrainingRecord) -> Self {
        Self {
            master_seed: record.master_seed,
            metric: record.metric.to_string(),
            normalization_constant: record.norm_constant,
            final_train_loss: record.final_train_loss,
            final_test_loss: record.final_test_loss,
            steps: record
                .steps
                .iter()
                .map(|s| StepSummary {
                    step: s.step,
                    best_loss: s.best_loss,
                    best_iteration: s.best_iteration,
                })
                .collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<()> {
    let file = File::create(path).map_err(|e| io_ctx(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

/// Writes a CSV table with a header row; cells are preformatted strings
/// (floats use Rust's shortest round-trip notation with a `.` separator).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CmdResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| io_ctx(path, e))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(|e| io_ctx(path, e))?;
    Ok(())
}

pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct ManifestDoc<'a> {
    artifact_version: u32,
    command: &'a str,
    config_hash: &'a str,
    config: &'a serde_json::Value,
    master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalization_constant: Option<f64>,
    wall_clock_seconds: f64,
    /// True when the run aborted and the inventory may be incomplete.
    partial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    abort: Option<String>,
    files: Vec<&'a FileEntry>,
}

/// Accumulates the file inventory for one command invocation and writes
/// `manifest.json` at the end — or a manifest flagged `partial` if the
/// command aborts after producing some outputs.
pub struct Manifest {
    dir: PathBuf,
    command: String,
    config_hash: String,
    config: serde_json::Value,
    master_seed: u64,
    normalization_constant: Option<f64>,
    started: Instant,
    files: Vec<FileEntry>,
}

impl Manifest {
    pub fn begin(dir: &Path, command: &str, config: &ExperimentConfig) -> CmdResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_ctx(dir, e))?;
        let config_json = serde_json::to_value(config)?;
        let canonical = serde_json::to_vec(&config_json)?;
        let config_hash = hex_digest(&canonical);
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_hash,
            config: config_json,
            master_seed: config.seed,
            normalization_constant: None,
            started: Instant::now(),
            files: Vec::new(),
        })
    }

    /// Absolute path for a run-relative file name.
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn set_normalization(&mut self, value: f64) {
        self.normalization_constant = Some(value);
    }

    /// Checksums a file that was just written and adds it to the inventory.
    pub fn record(&mut self, name: &str) -> CmdResult<()> {
        let path = self.path(name);
        let bytes = std::fs::read(&path).map_err(|e| io_ctx(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    fn write(&self, partial: bool, abort: Option<String>) -> CmdResult<()> {
        let doc = ManifestDoc {
            artifact_version: ARTIFACT_VERSION,
            command: &self.command,
            config_hash: &self.config_hash,
            config: &self.config,
            master_seed: self.master_seed,
            normalization_constant: self.normalization_constant,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            partial,
            abort,
            files: self.files.iter().collect(),
        };
        write_json(&self.path("manifest.json"), &doc)
    }

    /// Writes the final manifest; on failure the inventory written so far is
    /// flagged as partial and the original error is passed through.
    pub fn finish<T>(self, outcome: CmdResult<T>) -> CmdResult<T> {
        match outcome {
            Ok(value) => {
                self.write(false, None)?;
                Ok(value)
            }
            Err(err) => {
                // Best effort: the abort reason outranks a manifest I/O error.
                let _ = self.write(true, Some(err.to_string()));
                Err(err)
            }
        }
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdiff_core::Streams;

    fn sample_set(qubits: usize, count: usize, seed: u64) -> StateSet {
        let streams = Streams::new(seed);
        let states = (0..count)
            .map(|i| {
                let mut rng = streams.stream("fmt-test", &[i as u64]);
                StateVector::haar_random(qubits, &mut rng).unwrap()
            })
            .collect();
        StateSet::new(states).unwrap().labeled("fmt")
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_set(2, 5, 41);
        let record = SeedRecord::new(41, "fmt-test", &[]);
        let path = dir.path().join("set.qset");
        write_state_set(&path, &set, &record, SetFormat::Binary).unwrap();
        let (loaded, header) = read_state_set(&path).unwrap();
        assert_eq!(header.label, "fmt");
        assert_eq!(header.provenance, record);
        assert_eq!(loaded.len(), set.len());
        for (a, b) in loaded.iter().zip(set.iter()) {
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn jsonl_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_set(1, 1, 7);
        let record = SeedRecord::new(7, "fmt-test", &[3]);
        let path = dir.path().join("set.jsonl");
        write_state_set(&path, &set, &record, SetFormat::Jsonl).unwrap();
        let (loaded, header) = read_state_set(&path).unwrap();
        assert_eq!(header.count, 1);
        for (a, b) in loaded.iter().zip(set.iter()) {
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn weighted_sets_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let states = sample_set(1, 2, 3).into_states();
        let weighted = StateSet::with_weights(states, vec![0.25, 0.75]).unwrap();
        let record = SeedRecord::new(3, "fmt-test", &[]);
        let err = write_state_set(
            &dir.path().join("w.qset"),
            &weighted,
            &record,
            SetFormat::Binary,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn truncated_binary_reports_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_set(1, 4, 9);
        let record = SeedRecord::new(9, "fmt-test", &[]);
        let path = dir.path().join("set.qset");
        write_state_set(&path, &set, &record, SetFormat::Binary).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        let err = read_state_set(&path).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn manifest_inventories_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = crate::config::load(
            None,
            &crate::config::CliOverrides {
                preset: Some("entanglement".into()),
                seed: Some(5),
            },
        )
        .unwrap();
        let mut manifest = Manifest::begin(dir.path(), "gen-data", &config).unwrap();
        std::fs::write(manifest.path("a.csv"), "x,y\n1,2\n").unwrap();
        manifest.record("a.csv").unwrap();
        manifest.set_normalization(0.5);
        manifest.finish(Ok(())).unwrap();

        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["command"], "gen-data");
        assert_eq!(doc["partial"], false);
        assert_eq!(doc["normalization_constant"], 0.5);
        assert_eq!(doc["files"][0]["path"], "a.csv");
        let expected = hex_digest(b"x,y\n1,2\n");
        assert_eq!(doc["files"][0]["sha256"], expected.as_str());
        // The resolved config is embedded, defaults included.
        assert_eq!(doc["config"]["trainer"]["iterations_per_step"], 5000);
    }

    #[test]
    fn manifest_flags_aborts_as_partial() {
        let dir = tempfile::tempdir().unwrap();
        let config = crate::config::load(
            None,
            &crate::config::CliOverrides {
                preset: Some("rings-union".into()),
                seed: Some(6),
            },
        )
        .unwrap();
        let manifest = Manifest::begin(dir.path(), "train", &config).unwrap();
        let result: CmdResult<()> =
            manifest.finish(Err(Failure::Numeric("objective diverged".into())));
        assert!(result.is_err());
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["partial"], true);
        assert!(doc["abort"].as_str().unwrap().contains("diverged"));
    }

}
