//! `sample`: load a trained model and generate fresh state sets for each of
//! its classes.

use std::path::Path;

use qdiff_core::ansatz::generate;
use qdiff_core::rng::SeedRecord;
use qdiff_core::Streams;

use crate::commands::{check_model_matches, safe_label};
use crate::config::ExperimentConfig;
use crate::fail::CmdResult;
use crate::formats::{read_model, write_state_set, Manifest, SetFormat};

const SAMPLE_PURPOSE: &str = "sample";

pub fn run(
    config: &ExperimentConfig,
    out: &Path,
    model_path: &Path,
    count: Option<usize>,
    format: SetFormat,
) -> CmdResult<()> {
    let mut manifest = Manifest::begin(out, "sample", config)?;
    let outcome = (|mf: &mut Manifest| {
        let model = read_model(model_path)?;
        check_model_matches(&model, config)?;
        let count = count.unwrap_or(config.samples_per_class);
        let streams = Streams::new(config.seed);
        for (j, entry) in model.classes.iter().enumerate() {
            let history = generate(&model, &entry.label, count, &streams, SAMPLE_PURPOSE)?;
            let finished = &history[0];
            let name = format!(
                "samples-{}.{}",
                safe_label(&entry.label),
                format.extension()
            );
            let record = SeedRecord::new(config.seed, SAMPLE_PURPOSE, &[j as u64]);
            write_state_set(&mf.path(&name), finished, &record, format)?;
            mf.record(&name)?;
            println!("wrote {name} ({count} states)");
        }
        Ok(())
    })(&mut manifest);
    manifest.finish(outcome)
}
