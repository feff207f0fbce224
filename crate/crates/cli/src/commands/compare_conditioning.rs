//! `compare-conditioning`: train the same task under each ancilla
//! preparation style — computational basis labels, RX(μ), RY(μ), and the
//! degenerate RZ(μ) — with one shared master seed, and tabulate the final
//! held-out losses.
//!
//! The table also reports, per mode, the largest amplitude difference
//! between classes when generation reuses identical random streams and only
//! the class preparation changes. RZ prepares the same register for every
//! angle, so its gap is exactly zero: the model cannot tell classes apart.

use std::path::Path;

use qdiff_core::train::train_all;
use qdiff_core::{Conditioning, Streams};

use crate::commands::{generate_with_prep, target_sets};
use crate::config::ExperimentConfig;
use crate::fail::CmdResult;
use crate::formats::{fmt_f64, write_csv, write_model, Manifest};

/// Samples used for the shared-stream class-identity probe.
const PROBE_SAMPLES: usize = 16;
const PROBE_PURPOSE: &str = "probe";

/// Largest `|amplitude difference|` between class 0's generations and every
/// other class's, with identical streams so only the preparation differs.
fn class_identity_gap(model: &qdiff_core::DenoiseModel, streams: &Streams) -> CmdResult<f64> {
    let reference = generate_with_prep(
        &model.spec,
        &model.thetas,
        model.ancilla_init(0)?,
        PROBE_SAMPLES,
        streams,
        PROBE_PURPOSE,
        0,
    )?;
    let mut gap = 0.0f64;
    for class in 1..model.classes.len() {
        let other = generate_with_prep(
            &model.spec,
            &model.thetas,
            model.ancilla_init(class)?,
            PROBE_SAMPLES,
            streams,
            PROBE_PURPOSE,
            0,
        )?;
        for (a, b) in reference.iter().zip(&other) {
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                gap = gap.max((x - y).norm());
            }
        }
    }
    Ok(gap)
}

pub fn run(config: &ExperimentConfig, out: &Path) -> CmdResult<()> {
    let mut manifest = Manifest::begin(out, "compare-conditioning", config)?;
    let outcome = (|mf: &mut Manifest| {
        let modes = [
            Conditioning::Basis,
            Conditioning::Rx,
            Conditioning::Ry,
            Conditioning::Rz,
        ];
        let mut rows = Vec::new();
        for mode in modes {
            let mut point = config.clone();
            point.conditioning = mode;
            point.validate()?;
            eprintln!("training with {mode} conditioning");

            let streams = Streams::new(point.seed);
            let targets = target_sets(&point, &streams)?;
            let spec = point.ansatz_spec()?;
            let schedule = point.noise_schedule()?;
            let (model, record) =
                train_all(&targets, &schedule, &spec, &point.mu, &point.trainer_config())?;
            if mode == Conditioning::Rx {
                mf.set_normalization(record.norm_constant);
            }

            let model_name = format!("model-{mode}.json");
            write_model(&mf.path(&model_name), &model)?;
            mf.record(&model_name)?;

            let gap = class_identity_gap(&model, &streams)?;
            let note = if mode == Conditioning::Rz {
                "expected degenerate: the angle enters only as a global phase"
            } else {
                ""
            };
            eprintln!(
                "{mode}: test loss {:.4}, class identity gap {gap:.3e}",
                record.final_test_loss
            );
            rows.push(vec![
                mode.to_string(),
                fmt_f64(record.final_test_loss),
                fmt_f64(100.0 * record.final_test_loss),
                fmt_f64(gap),
                note.to_string(),
            ]);
        }
        write_csv(
            &mf.path("conditioning.csv"),
            &[
                "mode",
                "final_test_loss",
                "final_test_percent",
                "class_identity_gap",
                "note",
            ],
            &rows,
        )?;
        mf.record("conditioning.csv")?;
        for row in &rows {
            println!(
                "{}: test loss {} (identity gap {})",
                row[0], row[1], row[3]
            );
        }
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}
