//! `gen-data`: draw every class's target set and write one state-set file
//! per class plus the run manifest.

use std::path::Path;

use qdiff_core::rng::SeedRecord;
use qdiff_core::Streams;

use crate::commands::{safe_label, target_sets, TARGETS_PURPOSE};
use crate::config::ExperimentConfig;
use crate::fail::CmdResult;
use crate::formats::{write_state_set, Manifest, SetFormat};

pub fn run(config: &ExperimentConfig, out: &Path, format: SetFormat) -> CmdResult<()> {
    let mut manifest = Manifest::begin(out, "gen-data", config)?;
    let streams = Streams::new(config.seed);
    let outcome = (|| {
        let targets = target_sets(config, &streams)?;
        for (j, set) in targets.iter().enumerate() {
            let name = format!(
                "targets-{}.{}",
                safe_label(set.label().unwrap_or("class")),
                format.extension()
            );
            let record = SeedRecord::new(config.seed, TARGETS_PURPOSE, &[j as u64]);
            write_state_set(&manifest.path(&name), set, &record, format)?;
            manifest.record(&name)?;
            println!("wrote {name} ({} states of {} qubits)", set.len(), set.num_qubits());
        }
        Ok(())
    })();
    manifest.finish(outcome)
}
