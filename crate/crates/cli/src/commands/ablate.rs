//! `ablate`: train the configured task across a hyperparameter grid and
//! report held-out losses as mean ± standard deviation over equal test
//! partitions (by default 250 states split five ways).
//!
//! Grid axes: circuit depth, diffusion steps, training-set size, ancilla
//! count (free, or with depth tied so `layers · ancillas = 12`), and class
//! count (rebuilding the class list from a named scaling family). Invalid
//! grid points are not errors; their rows carry the skip reason.

use std::path::Path;

use qdiff_core::ansatz::{assign_mu, generate};
use qdiff_core::datasets::{TargetFamily, CANONICAL_GHZ_STRINGS};
use qdiff_core::train::{train_all, TEST_PURPOSE};
use qdiff_core::{ClassSpec, StateSet, Streams};

use crate::commands::target_sets;
use crate::config::{AblateAxis, AblateSection, ExperimentConfig, ScalingFamily};
use crate::fail::{CmdResult, Failure};
use crate::formats::{fmt_f64, write_csv, Manifest};

/// Tied product for the constrained ancilla axis.
const CONSTRAINED_BUDGET: usize = 12;

fn variant(
    base: &ExperimentConfig,
    section: &AblateSection,
    value: usize,
) -> CmdResult<Result<ExperimentConfig, String>> {
    let mut config = base.clone();
    match section.vary {
        AblateAxis::Layers => config.layers = value,
        AblateAxis::Steps => config.steps = value,
        AblateAxis::Samples => {
            config.samples_per_class = value;
            for class in &mut config.classes {
                class.samples = value;
            }
        }
        AblateAxis::Ancillas => config.ancilla_qubits = value,
        AblateAxis::AncillasConstrained => {
            if value == 0 || CONSTRAINED_BUDGET % value != 0 {
                return Ok(Err(format!(
                    "depth {CONSTRAINED_BUDGET}/{value} is not an integer"
                )));
            }
            config.ancilla_qubits = value;
            config.layers = CONSTRAINED_BUDGET / value;
        }
        AblateAxis::Classes => {
            let family = section.family.ok_or_else(|| {
                Failure::config("class-count ablation needs `family` in the [ablate] section")
            })?;
            let classes = match family {
                ScalingFamily::EquatorRing => (1..=value)
                    .map(|j| ClassSpec {
                        label: format!("ring-{j}"),
                        family: TargetFamily::EquatorRing {
                            alpha: j as f64 * std::f64::consts::PI / (value + 1) as f64,
                        },
                        samples: config.samples_per_class,
                    })
                    .collect::<Vec<_>>(),
                ScalingFamily::GhzString => {
                    if value > CANONICAL_GHZ_STRINGS.len() {
                        return Ok(Err(format!(
                            "only {} canonical strings are available",
                            CANONICAL_GHZ_STRINGS.len()
                        )));
                    }
                    CANONICAL_GHZ_STRINGS[..value]
                        .iter()
                        .map(|bits| ClassSpec {
                            label: format!("ghz-{bits}"),
                            family: TargetFamily::GhzString {
                                bits: (*bits).to_string(),
                            },
                            samples: config.samples_per_class,
                        })
                        .collect()
                }
            };
            if classes.is_empty() {
                return Ok(Err("class count must be at least one".into()));
            }
            config.mu = assign_mu(classes.len())?;
            config.classes = classes;
        }
    }
    match config.validate() {
        Ok(()) => Ok(Ok(config)),
        Err(err) => Ok(Err(err.to_string())),
    }
}

/// Mean ± population standard deviation of the normalized loss over equal
/// partitions of freshly generated held-out samples.
fn partitioned_losses(
    config: &ExperimentConfig,
    section: &AblateSection,
    targets: &[StateSet],
    model: &qdiff_core::DenoiseModel,
    norm: f64,
) -> CmdResult<(f64, f64)> {
    let streams = Streams::new(config.seed);
    let chunk = section.test_samples / section.partitions;
    let mut partition_losses = vec![0.0; section.partitions];
    for (target, entry) in targets.iter().zip(&model.classes) {
        let history = generate(model, &entry.label, section.test_samples, &streams, TEST_PURPOSE)?;
        let generated = &history[0];
        for p in 0..section.partitions {
            let states: Vec<_> = generated.states()[p * chunk..(p + 1) * chunk].to_vec();
            let part = StateSet::new(states)?;
            partition_losses[p] += config.metric.evaluate(&part, target)? / norm;
        }
    }
    let c = targets.len() as f64;
    for loss in &mut partition_losses {
        *loss /= c;
    }
    let mean = partition_losses.iter().sum::<f64>() / section.partitions as f64;
    let var = partition_losses
        .iter()
        .map(|l| (l - mean) * (l - mean))
        .sum::<f64>()
        / section.partitions as f64;
    Ok((mean, var.sqrt()))
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CmdResult<()> {
    let section = config.ablate.clone().ok_or_else(|| {
        Failure::config("ablate needs an [ablate] section with `vary` and `values`")
    })?;
    if section.partitions == 0 || section.test_samples % section.partitions != 0 {
        return Err(Failure::config(format!(
            "test_samples {} must divide into {} equal partitions",
            section.test_samples, section.partitions
        )));
    }

    let mut manifest = Manifest::begin(out, "ablate", config)?;
    let outcome = (|mf: &mut Manifest| {
        let mut rows = Vec::new();
        for &value in &section.values {
            let row = match variant(config, &section, value)? {
                Err(reason) => {
                    eprintln!("{} = {value}: skipped ({reason})", section.vary);
                    skip_row(value, &reason)
                }
                Ok(point) => {
                    eprintln!(
                        "{} = {value}: training (n={}, n_a={}, L={}, T={}, N={}, |C|={})",
                        section.vary,
                        point.system_qubits(),
                        point.ancilla_qubits,
                        point.layers,
                        point.steps,
                        point.samples_per_class,
                        point.classes.len()
                    );
                    let streams = Streams::new(point.seed);
                    let targets = target_sets(&point, &streams)?;
                    let spec = point.ansatz_spec()?;
                    let schedule = point.noise_schedule()?;
                    let (model, record) =
                        train_all(&targets, &schedule, &spec, &point.mu, &point.trainer_config())?;
                    let (mean, std) = partitioned_losses(
                        &point,
                        &section,
                        &targets,
                        &model,
                        record.norm_constant,
                    )?;
                    eprintln!(
                        "{} = {value}: loss {:.4} ± {:.4} over {} partitions",
                        section.vary, mean, std, section.partitions
                    );
                    vec![
                        value.to_string(),
                        point.system_qubits().to_string(),
                        point.ancilla_qubits.to_string(),
                        point.layers.to_string(),
                        point.steps.to_string(),
                        point.samples_per_class.to_string(),
                        point.classes.len().to_string(),
                        fmt_f64(mean),
                        fmt_f64(std),
                        String::new(),
                    ]
                }
            };
            rows.push(row);
        }
        write_csv(
            &mf.path("ablation.csv"),
            &[
                "value",
                "system_qubits",
                "ancilla_qubits",
                "layers",
                "steps",
                "samples_per_class",
                "num_classes",
                "loss_mean",
                "loss_std",
                "note",
            ],
            &rows,
        )?;
        mf.record("ablation.csv")?;
        println!(
            "ablation over {} ({} grid points) written to ablation.csv",
            section.vary,
            section.values.len()
        );
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}

fn skip_row(value: usize, reason: &str) -> Vec<String> {
    vec![
        value.to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        reason.to_string(),
    ]
}
