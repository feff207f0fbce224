//! `sweep-mu`: generate from a trained model across a uniform grid of
//! conditioning angles over [0, 2π] and report the normalized transport
//! distance to every trained class's target set, one row per angle.
//!
//! Every grid point reuses identical random streams, so the angle is the
//! only thing that varies between rows. Models whose preparation ignores
//! the angle (rz, basis) and single-class models still sweep, but each row
//! carries a warning note since the sweep cannot steer them.

use std::f64::consts::TAU;
use std::path::Path;

use qdiff_core::distances::{normalization_constant, wasserstein};
use qdiff_core::statevec::AncillaInit;
use qdiff_core::train::{haar_class_set, NORM_HAAR_PURPOSE};
use qdiff_core::{Conditioning, StateSet, Streams};

use crate::commands::{check_model_matches, generate_with_prep, target_sets};
use crate::config::ExperimentConfig;
use crate::fail::CmdResult;
use crate::formats::{fmt_f64, read_model, write_csv, Manifest};

const SWEEP_PURPOSE: &str = "sweep";

pub fn run(
    config: &ExperimentConfig,
    out: &Path,
    model_path: &Path,
    points_flag: Option<usize>,
) -> CmdResult<()> {
    let section = config.sweep.clone().unwrap_or_default();
    let points = points_flag.unwrap_or(section.points).max(1);
    let samples = section.samples.unwrap_or(config.samples_per_class);

    let mut manifest = Manifest::begin(out, "sweep-mu", config)?;
    let outcome = (|mf: &mut Manifest| {
        let model = read_model(model_path)?;
        check_model_matches(&model, config)?;
        let streams = Streams::new(config.seed);
        let targets = target_sets(config, &streams)?;

        let norm = match model.metadata.normalization_constant {
            Some(value) => value,
            None => {
                let haar = haar_class_set(
                    config.system_qubits(),
                    targets[0].len(),
                    &streams,
                    NORM_HAAR_PURPOSE,
                    0,
                )?;
                normalization_constant(&targets, &haar, config.metric)?
            }
        };
        mf.set_normalization(norm);

        let note = match model.spec.conditioning {
            Conditioning::Rz => {
                "rz preparation ignores the angle; outputs are identical across the grid"
            }
            Conditioning::Basis => {
                "basis preparation ignores the angle; outputs are identical across the grid"
            }
            _ if model.classes.len() < 2 => "model was trained on a single class",
            _ => "",
        };

        let spec = model.spec;
        let mut rows = Vec::new();
        for i in 0..points {
            let mu = if points == 1 {
                0.0
            } else {
                TAU * i as f64 / (points - 1) as f64
            };
            let prep = match spec.conditioning {
                Conditioning::Rx => AncillaInit::Rx(mu),
                Conditioning::Ry => AncillaInit::Ry(mu),
                Conditioning::Rz => AncillaInit::Rz(mu),
                Conditioning::Basis => AncillaInit::Basis(0),
            };
            let states = generate_with_prep(
                &spec,
                &model.thetas,
                prep,
                samples,
                &streams,
                SWEEP_PURPOSE,
                0,
            )?;
            let generated = StateSet::new(states)?;

            let mut row = vec![fmt_f64(mu)];
            for target in &targets {
                let distance = wasserstein(&generated, target)?;
                row.push(fmt_f64(distance / norm));
            }
            row.push(note.to_string());
            rows.push(row);
            eprintln!("mu = {mu:.4}: done ({}/{points})", i + 1);
        }

        let mut header: Vec<String> = vec!["mu".to_string()];
        for target in &targets {
            header.push(format!("dist_{}", target.label().unwrap_or("class")));
        }
        header.push("note".to_string());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&mf.path("mu_sweep.csv"), &header_refs, &rows)?;
        mf.record("mu_sweep.csv")?;
        println!("swept {points} angles with {samples} samples each");
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}
