//! Command implementations and the plumbing they share: target-set
//! generation, Haar reference draws, and backward generation with an
//! explicit ancilla preparation (for angle sweeps and conditioning
//! comparisons that must reuse identical random streams).

pub mod ablate;
pub mod benchmark;
pub mod compare_conditioning;
pub mod diffuse;
pub mod eval;
pub mod gen_data;
pub mod sample;
pub mod sweep_mu;
pub mod train;

use rayon::prelude::*;

use qdiff_core::ansatz::denoise_step;
use qdiff_core::statevec::AncillaInit;
use qdiff_core::train::haar_class_set;
use qdiff_core::{AnsatzSpec, DenoiseModel, MeasMode, StateSet, StateVector, Streams};

use crate::config::ExperimentConfig;
use crate::fail::{CmdResult, Failure};

/// Stream purpose for drawing target sets; class `j` uses `("targets", [j])`.
pub const TARGETS_PURPOSE: &str = "targets";

/// Draws every class's target set from the config seed.
pub fn target_sets(config: &ExperimentConfig, streams: &Streams) -> CmdResult<Vec<StateSet>> {
    config
        .classes
        .iter()
        .enumerate()
        .map(|(j, class)| {
            let mut rng = streams.stream(TARGETS_PURPOSE, &[j as u64]);
            Ok(class.generate(&mut rng)?)
        })
        .collect()
}

/// Haar reference ensemble `index` of the given size (0 and 1 give two
/// independent sets for noise-floor estimates).
pub fn haar_reference(
    qubits: usize,
    count: usize,
    streams: &Streams,
    index: u64,
) -> CmdResult<StateSet> {
    Ok(haar_class_set(qubits, count, streams, "haar-ref", index)?)
}

/// File-name-safe version of a class label.
pub fn safe_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '+' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Rejects a model whose architecture disagrees with the config.
pub fn check_model_matches(model: &DenoiseModel, config: &ExperimentConfig) -> CmdResult<()> {
    let spec = config.ansatz_spec()?;
    if model.spec != spec {
        return Err(Failure::config(format!(
            "model architecture (n={}, n_a={}, L={}, {}) does not match the config \
             (n={}, n_a={}, L={}, {})",
            model.spec.system_qubits,
            model.spec.ancilla_qubits,
            model.spec.layers,
            model.spec.conditioning,
            spec.system_qubits,
            spec.ancilla_qubits,
            spec.layers,
            spec.conditioning
        )));
    }
    if model.steps != config.steps {
        return Err(Failure::config(format!(
            "model has {} diffusion steps, config expects {}",
            model.steps, config.steps
        )));
    }
    let model_labels: Vec<&str> = model.classes.iter().map(|c| c.label.as_str()).collect();
    let config_labels: Vec<&str> = config.classes.iter().map(|c| c.label.as_str()).collect();
    if model_labels != config_labels {
        return Err(Failure::config(format!(
            "model classes {model_labels:?} do not match config classes {config_labels:?}"
        )));
    }
    Ok(())
}

/// Runs the full backward pass for `count` samples under a fixed ancilla
/// preparation, drawing the Haar input for sample `i` from
/// `("<purpose>-haar", [stream_index, i])` and step `k` from
/// `("<purpose>-step", [stream_index, k, i])`.
///
/// Keeping `stream_index` fixed while varying only `prep` reuses identical
/// randomness across preparations, which is what angle sweeps and the
/// conditioning comparison need.
pub fn generate_with_prep(
    spec: &AnsatzSpec,
    thetas: &[Vec<f64>],
    prep: AncillaInit,
    count: usize,
    streams: &Streams,
    purpose: &str,
    stream_index: u64,
) -> CmdResult<Vec<StateVector>> {
    let steps = thetas.len();
    let haar_purpose = format!("{purpose}-haar");
    let step_purpose = format!("{purpose}-step");
    let states: Vec<StateVector> = (0..count)
        .into_par_iter()
        .map(|i| -> qdiff_core::Result<StateVector> {
            let mut rng = streams.stream(&haar_purpose, &[stream_index, i as u64]);
            let mut state = StateVector::haar_random(spec.system_qubits, &mut rng)?;
            for k in (1..=steps).rev() {
                let mut rng =
                    streams.stream(&step_purpose, &[stream_index, k as u64, i as u64]);
                state = denoise_step(&state, &thetas[k - 1], prep, spec, MeasMode::Born, &mut rng)?
                    .into_single()?;
            }
            Ok(state)
        })
        .collect::<qdiff_core::Result<_>>()?;
    Ok(states)
}
