//! `diffuse`: run the forward scrambling process on every class and report
//! how quickly the ensembles approach Haar randomness.
//!
//! Outputs one state-set file per class and step, plus `diffusion.csv` with
//! the per-step divergence from a fresh Haar ensemble. Distances are
//! normalized by the worst-class target-vs-Haar constant, and each row also
//! carries the Haar-vs-Haar noise floor measured at the same ensemble size,
//! so saturation is visible as `normalized` meeting `floor`.

use std::path::Path;

use qdiff_core::diffusion::forward_diffuse;
use qdiff_core::distances::normalization_constant;
use qdiff_core::rng::SeedRecord;
use qdiff_core::Streams;

use crate::commands::{haar_reference, safe_label, target_sets};
use crate::config::ExperimentConfig;
use crate::fail::CmdResult;
use crate::formats::{fmt_f64, write_csv, write_state_set, Manifest, SetFormat};

pub fn run(config: &ExperimentConfig, out: &Path, format: SetFormat) -> CmdResult<()> {
    let mut manifest = Manifest::begin(out, "diffuse", config)?;
    let streams = Streams::new(config.seed);
    let outcome = (|mf: &mut Manifest| {
        let targets = target_sets(config, &streams)?;
        let schedule = config.noise_schedule()?;
        let qubits = config.system_qubits();
        let count = targets[0].len();

        let haar_fresh = haar_reference(qubits, count, &streams, 0)?;
        let haar_other = haar_reference(qubits, count, &streams, 1)?;
        let norm = normalization_constant(&targets, &haar_fresh, config.metric)?;
        mf.set_normalization(norm);
        let floor = config.metric.evaluate(&haar_fresh, &haar_other)? / norm;

        let mut rows = Vec::new();
        for (j, target) in targets.iter().enumerate() {
            let trajectory = forward_diffuse(target, &schedule, &streams, j as u64)?;
            let label = safe_label(&trajectory.class_label);
            for (t, set) in trajectory.sets.iter().enumerate() {
                let name = format!("scrambled-{label}-t{t}.{}", format.extension());
                let record = SeedRecord::new(config.seed, "diffuse", &[j as u64, t as u64]);
                write_state_set(&mf.path(&name), set, &record, format)?;
                mf.record(&name)?;

                let distance = config.metric.evaluate(set, &haar_fresh)?;
                rows.push(vec![
                    t.to_string(),
                    trajectory.class_label.clone(),
                    fmt_f64(distance),
                    fmt_f64(distance / norm),
                    fmt_f64(floor),
                ]);
            }
        }
        write_csv(
            &mf.path("diffusion.csv"),
            &["step", "label", "distance", "normalized", "floor"],
            &rows,
        )?;
        mf.record("diffusion.csv")?;
        println!(
            "diffusion over {} steps written for {} classes (noise floor {floor:.4})",
            config.steps,
            targets.len()
        );
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}
