//! `benchmark`: train the conditioned model (one class per target family)
//! and an unconditioned twin (all targets pooled into one unlabeled class,
//! same total sample count and hyperparameters, same master seed), then
//! report both loss curves and final held-out losses side by side.

use std::path::Path;

use serde::Serialize;

use qdiff_core::train::{train_all, TrainingRecord};
use qdiff_core::{StateSet, Streams};

use crate::commands::target_sets;
use crate::config::ExperimentConfig;
use crate::fail::{CmdResult, Failure};
use crate::formats::{
    fmt_f64, write_csv, write_json, write_loss_records, write_model, Manifest, TrainReport,
};

#[derive(Serialize)]
struct BenchmarkSummary {
    conditioned_final_test_loss: f64,
    unconditioned_final_test_loss: f64,
    /// conditioned / unconditioned; < 1 means conditioning helps.
    loss_ratio: f64,
    total_training_states: usize,
}

fn write_run(
    manifest: &mut Manifest,
    subdir: &str,
    model: &qdiff_core::DenoiseModel,
    record: &TrainingRecord,
) -> CmdResult<()> {
    std::fs::create_dir_all(manifest.path(subdir))
        .map_err(|e| Failure::io(format!("{subdir}: {e}")))?;
    let mut model = model.clone();
    let losses = format!("{subdir}/losses.jsonl");
    model.metadata.loss_records = Some(losses.clone());
    write_loss_records(&manifest.path(&losses), record)?;
    manifest.record(&losses)?;
    let model_name = format!("{subdir}/model.json");
    write_model(&manifest.path(&model_name), &model)?;
    manifest.record(&model_name)?;
    let report = format!("{subdir}/train_report.json");
    write_json(&manifest.path(&report), &TrainReport::from_record(record))?;
    manifest.record(&report)?;
    Ok(())
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CmdResult<()> {
    if config.classes.len() < 2 {
        return Err(Failure::config(
            "benchmark compares conditioned vs pooled training and needs at least two classes",
        ));
    }
    let mut manifest = Manifest::begin(out, "benchmark", config)?;
    let outcome = (|mf: &mut Manifest| {
        let streams = Streams::new(config.seed);
        let targets = target_sets(config, &streams)?;
        let spec = config.ansatz_spec()?;
        let schedule = config.noise_schedule()?;
        let trainer = config.trainer_config();

        eprintln!("training conditioned model ({} classes)", targets.len());
        let (cond_model, cond_record) =
            train_all(&targets, &schedule, &spec, &config.mu, &trainer)?;
        mf.set_normalization(cond_record.norm_constant);
        write_run(mf, "conditioned", &cond_model, &cond_record)?;

        // Pool every class into one unlabeled ensemble with matched totals.
        let pooled_states: Vec<_> = targets
            .iter()
            .flat_map(|set| set.states().iter().cloned())
            .collect();
        let total = pooled_states.len();
        let pooled = StateSet::new(pooled_states)?.labeled("pooled");
        eprintln!("training unconditioned model (1 pooled class, {total} states)");
        let (pool_model, pool_record) =
            train_all(&[pooled], &schedule, &spec, &[0.0], &trainer)?;
        write_run(mf, "unconditioned", &pool_model, &pool_record)?;

        // Per-step minimum-loss markers for both runs, aligned on the step
        // index (training order is T down to 1).
        let rows: Vec<Vec<String>> = cond_record
            .steps
            .iter()
            .zip(&pool_record.steps)
            .map(|(c, u)| {
                vec![
                    c.step.to_string(),
                    fmt_f64(c.best_loss),
                    fmt_f64(u.best_loss),
                ]
            })
            .collect();
        write_csv(
            &mf.path("benchmark.csv"),
            &["step", "conditioned_min_loss", "unconditioned_min_loss"],
            &rows,
        )?;
        mf.record("benchmark.csv")?;

        let summary = BenchmarkSummary {
            conditioned_final_test_loss: cond_record.final_test_loss,
            unconditioned_final_test_loss: pool_record.final_test_loss,
            loss_ratio: cond_record.final_test_loss / pool_record.final_test_loss,
            total_training_states: total,
        };
        write_json(&mf.path("benchmark.json"), &summary)?;
        mf.record("benchmark.json")?;

        println!(
            "conditioned test loss {:.4} vs unconditioned {:.4} (ratio {:.4})",
            summary.conditioned_final_test_loss,
            summary.unconditioned_final_test_loss,
            summary.loss_ratio
        );
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}
