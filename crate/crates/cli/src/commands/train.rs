//! `train`: scramble the targets forward, optimize the backward model step
//! by step, and write the checkpoint, loss records, and summary report.

use std::path::Path;

use qdiff_core::train::train_all;
use qdiff_core::{DenoiseModel, Streams};

use crate::commands::target_sets;
use crate::config::ExperimentConfig;
use crate::fail::CmdResult;
use crate::formats::{write_json, write_loss_records, write_model, Manifest, TrainReport};

pub const MODEL_FILE: &str = "model.json";
pub const LOSSES_FILE: &str = "losses.jsonl";
pub const REPORT_FILE: &str = "train_report.json";

/// Trains the configured model and returns it with its record; shared with
/// the benchmark and conditioning-comparison commands.
pub fn train_to_dir(
    config: &ExperimentConfig,
    manifest: &mut Manifest,
    prefix: &str,
) -> CmdResult<DenoiseModel> {
    let streams = Streams::new(config.seed);
    let targets = target_sets(config, &streams)?;
    let spec = config.ansatz_spec()?;
    let schedule = config.noise_schedule()?;
    let trainer = config.trainer_config();

    let (mut model, record) = train_all(&targets, &schedule, &spec, &config.mu, &trainer)?;
    manifest.set_normalization(record.norm_constant);

    let losses_name = format!("{prefix}{LOSSES_FILE}");
    model.metadata.loss_records = Some(losses_name.clone());
    write_loss_records(&manifest.path(&losses_name), &record)?;
    manifest.record(&losses_name)?;

    let model_name = format!("{prefix}{MODEL_FILE}");
    write_model(&manifest.path(&model_name), &model)?;
    manifest.record(&model_name)?;

    let report_name = format!("{prefix}{REPORT_FILE}");
    write_json(&manifest.path(&report_name), &TrainReport::from_record(&record))?;
    manifest.record(&report_name)?;

    println!(
        "{}trained {} steps: final train loss {:.4}, test loss {:.4} \
         (norm {:.6}, {:.1}s)",
        if prefix.is_empty() {
            String::new()
        } else {
            format!("[{}] ", prefix.trim_end_matches('/'))
        },
        model.steps,
        record.final_train_loss,
        record.final_test_loss,
        record.norm_constant,
        record.total_wall_seconds
    );
    Ok(model)
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CmdResult<()> {
    let mut manifest = Manifest::begin(out, "train", config)?;
    let outcome = train_to_dir(config, &mut manifest, "").map(|_| ());
    manifest.finish(outcome)
}
