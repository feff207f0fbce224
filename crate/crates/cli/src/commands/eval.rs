//! `eval`: score generated ensembles against the configured targets.
//!
//! Two input modes: `--model` regenerates the training-time and held-out
//! ensembles from a checkpoint; `--states` loads state-set files (for
//! example the output of `gen-data` or `sample`) and scores those directly.
//!
//! Always writes per-class normalized losses and the per-class spread table;
//! adds Bloch-coordinate tables for single-qubit tasks, projected Bloch
//! coordinates and subspace overlaps for phase-family tasks, mean
//! entanglement (`Q`) for multi-qubit tasks, and magnetization distributions
//! for Ising ground-state tasks.

use std::collections::BTreeMap;
use std::path::Path;

use qdiff_core::ansatz::generate;
use qdiff_core::datasets::{BellKind, TargetFamily};
use qdiff_core::distances::normalization_constant;
use qdiff_core::metrics::{magnetization, meyer_wallach, per_class_spread, subspace_overlap};
use qdiff_core::train::{haar_class_set, NORM_HAAR_PURPOSE, TEST_PURPOSE, TRAIN_PURPOSE};
use qdiff_core::{StateSet, Streams};

use crate::commands::{check_model_matches, safe_label, target_sets};
use crate::config::ExperimentConfig;
use crate::fail::{CmdResult, Failure};
use crate::formats::{fmt_f64, read_model, read_state_set, write_csv, Manifest};

/// Basis indices whose combined weight measures "being in the right
/// subspace" for a phase family; `None` when the family has no designated
/// subspace.
pub fn designated_subspace(family: &TargetFamily) -> Option<Vec<usize>> {
    match family {
        TargetFamily::Bell { kind: BellKind::Phi } => Some(vec![0, 3]),
        TargetFamily::Bell { kind: BellKind::Psi } => Some(vec![1, 2]),
        TargetFamily::GhzPhase => Some(vec![0, 7]),
        TargetFamily::WPhase => Some(vec![1, 2, 4]),
        TargetFamily::GhzString { bits } => {
            let n = bits.len();
            let index = usize::from_str_radix(bits, 2).ok()?;
            let complement = !index & ((1usize << n) - 1);
            Some(vec![index.min(complement), index.max(complement)])
        }
        _ => None,
    }
}

/// Two basis indices spanning the plane used for projected Bloch pictures.
pub fn projection_pair(family: &TargetFamily) -> Option<(usize, usize)> {
    match family {
        TargetFamily::Bell { kind: BellKind::Phi } => Some((0, 3)),
        TargetFamily::Bell { kind: BellKind::Psi } => Some((1, 2)),
        TargetFamily::GhzPhase => Some((0, 7)),
        // The rank-3 span is pictured through its outer pair.
        TargetFamily::WPhase => Some((1, 4)),
        TargetFamily::GhzString { bits } => {
            let n = bits.len();
            let index = usize::from_str_radix(bits, 2).ok()?;
            let complement = !index & ((1usize << n) - 1);
            Some((index.min(complement), index.max(complement)))
        }
        _ => None,
    }
}

fn load_state_dir(dir: &Path, config: &ExperimentConfig) -> CmdResult<Vec<StateSet>> {
    let mut by_label: BTreeMap<String, StateSet> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))? {
        let entry = entry.map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
        let path = entry.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext != "qset" && ext != "jsonl" {
            continue;
        }
        let (set, header) = read_state_set(&path)?;
        by_label.insert(header.label, set);
    }
    config
        .classes
        .iter()
        .map(|class| {
            by_label.get(&class.label).cloned().ok_or_else(|| {
                Failure::config(format!(
                    "no state-set file labeled '{}' found in {}",
                    class.label,
                    dir.display()
                ))
            })
        })
        .collect()
}

fn bloch_rows(set: &StateSet, which: &str) -> CmdResult<Vec<Vec<String>>> {
    set.iter()
        .map(|state| {
            let projection = state.bloch_projection(0, 1)?;
            let [x, y, z] = projection.coords.ok_or_else(|| {
                Failure::Numeric("single-qubit state with vanishing norm".into())
            })?;
            Ok(vec![
                which.to_string(),
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(z),
            ])
        })
        .collect()
}

fn projected_rows(
    set: &StateSet,
    which: &str,
    pair: (usize, usize),
) -> CmdResult<Vec<Vec<String>>> {
    set.iter()
        .map(|state| {
            let projection = state.bloch_projection(pair.0, pair.1)?;
            let (x, y, z) = match projection.coords {
                Some([x, y, z]) => (fmt_f64(x), fmt_f64(y), fmt_f64(z)),
                None => (String::new(), String::new(), String::new()),
            };
            Ok(vec![
                which.to_string(),
                x,
                y,
                z,
                fmt_f64(projection.weight),
            ])
        })
        .collect()
}

/// Probabilities of each magnetization sector averaged over the set.
fn mean_magnetization(set: &StateSet) -> CmdResult<(Vec<i32>, Vec<f64>, f64)> {
    let mut support: Vec<i32> = Vec::new();
    let mut totals: Vec<f64> = Vec::new();
    let mut mean_total = 0.0;
    for state in set.iter() {
        let (dist, mean) = magnetization(state)?;
        if support.is_empty() {
            support = dist.support.clone();
            totals = vec![0.0; support.len()];
        }
        for (total, p) in totals.iter_mut().zip(&dist.probabilities) {
            *total += p;
        }
        mean_total += mean;
    }
    let n = set.len() as f64;
    for total in &mut totals {
        *total /= n;
    }
    Ok((support, totals, mean_total / n))
}

fn mean_over(set: &StateSet, f: impl Fn(&qdiff_core::StateVector) -> CmdResult<f64>) -> CmdResult<f64> {
    let mut total = 0.0;
    for state in set.iter() {
        total += f(state)?;
    }
    Ok(total / set.len() as f64)
}

pub fn run(
    config: &ExperimentConfig,
    out: &Path,
    model_path: Option<&Path>,
    states_dir: Option<&Path>,
) -> CmdResult<()> {
    let mut manifest = Manifest::begin(out, "eval", config)?;
    let outcome = (|mf: &mut Manifest| {
        let config_streams = Streams::new(config.seed);
        let targets = target_sets(config, &config_streams)?;
        let qubits = config.system_qubits();
        let count = targets[0].len();

        // Phased ensembles to score: train/test from a checkpoint, or the
        // literal contents of a state-set directory.
        let mut phases: Vec<(&str, Vec<StateSet>)> = Vec::new();
        let norm;
        match (model_path, states_dir) {
            (Some(path), None) => {
                let model = read_model(path)?;
                check_model_matches(&model, config)?;
                let streams = Streams::new(model.metadata.master_seed);
                let mut train_sets = Vec::new();
                let mut test_sets = Vec::new();
                for entry in &model.classes {
                    train_sets
                        .push(generate(&model, &entry.label, count, &streams, TRAIN_PURPOSE)?[0].clone());
                    test_sets
                        .push(generate(&model, &entry.label, count, &streams, TEST_PURPOSE)?[0].clone());
                }
                norm = match model.metadata.normalization_constant {
                    Some(value) => value,
                    None => {
                        let haar =
                            haar_class_set(qubits, count, &streams, NORM_HAAR_PURPOSE, 0)?;
                        normalization_constant(&targets, &haar, config.metric)?
                    }
                };
                phases.push(("train", train_sets));
                phases.push(("test", test_sets));
            }
            (None, Some(dir)) => {
                let sets = load_state_dir(dir, config)?;
                let haar =
                    haar_class_set(qubits, count, &config_streams, NORM_HAAR_PURPOSE, 0)?;
                norm = normalization_constant(&targets, &haar, config.metric)?;
                phases.push(("states", sets));
            }
            _ => {
                return Err(Failure::config(
                    "eval needs exactly one of --model FILE or --states DIR",
                ));
            }
        }
        mf.set_normalization(norm);

        let mut loss_rows = Vec::new();
        for (phase, sets) in &phases {
            for (target, set) in targets.iter().zip(sets) {
                let distance = config.metric.evaluate(set, target)?;
                loss_rows.push(vec![
                    target.label().unwrap_or("class").to_string(),
                    phase.to_string(),
                    fmt_f64(distance),
                    fmt_f64(100.0 * distance / norm),
                ]);
            }
        }
        write_csv(
            &mf.path("eval_losses.csv"),
            &["label", "phase", "distance", "percent"],
            &loss_rows,
        )?;
        mf.record("eval_losses.csv")?;

        // Spread table: per-class normalizers instead of the shared worst-case
        // constant; scored on the last phase (test or states).
        let headline = &phases.last().unwrap().1;
        let haar = haar_class_set(qubits, count, &config_streams, "haar-ref", 0)?;
        let spread = per_class_spread(headline, &targets, &haar, config.metric)?;
        let spread_rows: Vec<Vec<String>> = spread
            .iter()
            .map(|row| {
                vec![
                    row.label.clone(),
                    fmt_f64(row.distance),
                    fmt_f64(row.normalizer),
                    fmt_f64(row.percent),
                ]
            })
            .collect();
        write_csv(
            &mf.path("spread.csv"),
            &["label", "distance", "normalizer", "percent"],
            &spread_rows,
        )?;
        mf.record("spread.csv")?;

        // Task-appropriate per-class summaries.
        let mut summary_rows = Vec::new();
        for (class, set) in config.classes.iter().zip(headline) {
            let q = if qubits >= 2 {
                fmt_f64(mean_over(set, |s| Ok(meyer_wallach(s)?))?)
            } else {
                String::new()
            };
            let overlap = match designated_subspace(&class.family) {
                Some(indices) => {
                    fmt_f64(mean_over(set, |s| Ok(subspace_overlap(s, &indices)?))?)
                }
                None => String::new(),
            };
            let mag = if matches!(class.family, TargetFamily::Tlfim { .. }) {
                let (_, _, mean) = mean_magnetization(set)?;
                fmt_f64(mean)
            } else {
                String::new()
            };
            summary_rows.push(vec![class.label.clone(), q, overlap, mag]);
        }
        write_csv(
            &mf.path("class_summary.csv"),
            &["label", "q_mean", "subspace_overlap_mean", "magnetization_mean"],
            &summary_rows,
        )?;
        mf.record("class_summary.csv")?;

        for ((class, target), set) in config.classes.iter().zip(&targets).zip(headline) {
            let label = safe_label(&class.label);
            if qubits == 1 {
                let mut rows = bloch_rows(target, "target")?;
                rows.extend(bloch_rows(set, "generated")?);
                let name = format!("bloch-{label}.csv");
                write_csv(&mf.path(&name), &["which", "x", "y", "z"], &rows)?;
                mf.record(&name)?;
            }
            if let Some(pair) = projection_pair(&class.family) {
                let mut rows = projected_rows(target, "target", pair)?;
                rows.extend(projected_rows(set, "generated", pair)?);
                let name = format!("bloch-projected-{label}.csv");
                write_csv(&mf.path(&name), &["which", "x", "y", "z", "weight"], &rows)?;
                mf.record(&name)?;
            }
            if matches!(class.family, TargetFamily::Tlfim { .. }) {
                let (support, target_probs, _) = mean_magnetization(target)?;
                let (_, set_probs, _) = mean_magnetization(set)?;
                let rows: Vec<Vec<String>> = support
                    .iter()
                    .zip(target_probs.iter().zip(&set_probs))
                    .map(|(m, (tp, gp))| {
                        vec![m.to_string(), fmt_f64(*tp), fmt_f64(*gp)]
                    })
                    .collect();
                let name = format!("magnetization-{label}.csv");
                write_csv(
                    &mf.path(&name),
                    &["m", "target_probability", "generated_probability"],
                    &rows,
                )?;
                mf.record(&name)?;
            }
        }

        for row in &loss_rows {
            println!(
                "{} [{}]: distance {} ({}%)",
                row[0], row[1], row[2], row[3]
            );
        }
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}
