//! Experiment configuration: a TOML file (optionally layered on a named
//! preset) resolved into a fully explicit [`ExperimentConfig`]. Every value
//! that affects results — including defaults the user never typed — ends up
//! in the resolved struct, which is what the run manifest records.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qdiff_core::ansatz::assign_mu;
use qdiff_core::datasets::{BellKind, PoleDirection, RingPlane, TargetFamily};
use qdiff_core::diffusion::{NoiseSchedule, ScheduleKind};
use qdiff_core::train::{AdamParams, GradEstimator, LossMeasMode};
use qdiff_core::{AnsatzSpec, ClassSpec, Conditioning, Metric, TrainerConfig};

use crate::fail::{CmdResult, Failure};

/// Optimizer and estimator settings as they appear in config files; the
/// master seed and metric live at the top level of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerSettings {
    pub iterations_per_step: usize,
    pub adam: AdamParams,
    pub estimator: GradEstimator,
    pub measurement: LossMeasMode,
}

impl Default for TrainerSettings {
    fn default() -> Self {
        Self {
            iterations_per_step: 5000,
            adam: AdamParams::default(),
            estimator: GradEstimator::default(),
            measurement: LossMeasMode::Sample,
        }
    }
}

/// Grid axis for the ablation command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblateAxis {
    Layers,
    Steps,
    Samples,
    Ancillas,
    /// Ancilla count with depth tied so that `layers · ancillas = 12`.
    AncillasConstrained,
    /// Class count; rebuilds the class list from `family`.
    Classes,
}

impl std::fmt::Display for AblateAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AblateAxis::Layers => "layers",
            AblateAxis::Steps => "steps",
            AblateAxis::Samples => "samples",
            AblateAxis::Ancillas => "ancillas",
            AblateAxis::AncillasConstrained => "ancillas_constrained",
            AblateAxis::Classes => "classes",
        })
    }
}

/// Class family used when the ablation axis rebuilds the class list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingFamily {
    EquatorRing,
    GhzString,
}

fn default_test_samples() -> usize {
    250
}

fn default_partitions() -> usize {
    5
}

/// `[ablate]` section: one grid axis, its values, and the test protocol
/// (held-out samples split into equal partitions, losses reported as
/// mean ± std over partitions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblateSection {
    pub vary: AblateAxis,
    pub values: Vec<usize>,
    pub family: Option<ScalingFamily>,
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
}

fn default_sweep_points() -> usize {
    16
}

/// `[sweep]` section for conditioning-angle sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    #[serde(default = "default_sweep_points")]
    pub points: usize,
    /// Samples generated per grid point; defaults to `samples_per_class`.
    pub samples: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            points: default_sweep_points(),
            samples: None,
        }
    }
}

/// Fully resolved experiment: what every command actually runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub metric: Metric,
    pub samples_per_class: usize,
    pub ancilla_qubits: usize,
    pub layers: usize,
    pub steps: usize,
    pub conditioning: Conditioning,
    pub schedule: ScheduleKind,
    /// Conditioning angle per class, same order as `classes`.
    pub mu: Vec<f64>,
    pub classes: Vec<ClassSpec>,
    pub trainer: TrainerSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablate: Option<AblateSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn system_qubits(&self) -> usize {
        self.classes[0].num_qubits()
    }

    pub fn ansatz_spec(&self) -> CmdResult<AnsatzSpec> {
        Ok(AnsatzSpec::new(
            self.system_qubits(),
            self.ancilla_qubits,
            self.layers,
            self.conditioning,
        )?)
    }

    pub fn noise_schedule(&self) -> CmdResult<NoiseSchedule> {
        Ok(NoiseSchedule::new(self.schedule, self.steps)?)
    }

    pub fn trainer_config(&self) -> TrainerConfig {
        TrainerConfig {
            iterations_per_step: self.trainer.iterations_per_step,
            adam: self.trainer.adam,
            estimator: self.trainer.estimator,
            meas_mode: self.trainer.measurement,
            metric: self.metric,
            master_seed: self.seed,
        }
    }

    pub fn validate(&self) -> CmdResult<()> {
        if self.classes.is_empty() {
            return Err(Failure::config("at least one class is required"));
        }
        let qubits = self.classes[0].num_qubits();
        for class in &self.classes {
            class.validate()?;
            if class.num_qubits() != qubits {
                return Err(Failure::config(format!(
                    "class '{}' is on {} qubits but class '{}' is on {}; \
                     all classes must share the system size",
                    class.label,
                    class.num_qubits(),
                    self.classes[0].label,
                    qubits
                )));
            }
        }
        let mut labels: Vec<&str> = self.classes.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.classes.len() {
            return Err(Failure::config("class labels must be unique"));
        }
        if self.mu.len() != self.classes.len() {
            return Err(Failure::config(format!(
                "{} conditioning angles for {} classes",
                self.mu.len(),
                self.classes.len()
            )));
        }
        self.ansatz_spec()?.validate()?;
        self.noise_schedule()?;
        self.trainer_config().validate()?;
        if self.conditioning == Conditioning::Basis {
            // Surface the capacity limit at config time rather than mid-run.
            qdiff_core::ansatz::class_basis_index(
                0,
                self.classes.len(),
                self.ancilla_qubits,
            )?;
        }
        Ok(())
    }
}

/// One `[[class]]` table; `samples` defaults to the experiment-wide
/// `samples_per_class`.
#[derive(Clone, Debug, Deserialize)]
struct RawClass {
    label: String,
    #[serde(flatten)]
    family: TargetFamily,
    samples: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
struct RawTrainer {
    iterations_per_step: Option<usize>,
    adam: Option<RawAdam>,
    estimator: Option<GradEstimator>,
    measurement: Option<LossMeasMode>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
struct RawAdam {
    learning_rate: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    epsilon: Option<f64>,
}

/// A config file before resolution: everything optional so files can layer
/// sparse overrides on a preset.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    preset: Option<String>,
    name: Option<String>,
    seed: Option<u64>,
    metric: Option<Metric>,
    samples_per_class: Option<usize>,
    ancilla_qubits: Option<usize>,
    layers: Option<usize>,
    steps: Option<usize>,
    conditioning: Option<Conditioning>,
    schedule: Option<ScheduleKind>,
    mu: Option<Vec<f64>>,
    #[serde(default, rename = "class")]
    classes: Vec<RawClass>,
    trainer: Option<RawTrainer>,
    ablate: Option<AblateSection>,
    sweep: Option<SweepSection>,
}

pub const PRESET_NAMES: [&str; 5] = [
    "planar-rings",
    "polar-points",
    "entanglement",
    "many-body",
    "rings-union",
];

struct PresetBase {
    metric: Metric,
    samples_per_class: usize,
    ancilla_qubits: usize,
    layers: usize,
    steps: usize,
    schedule: ScheduleKind,
    classes: Vec<(&'static str, TargetFamily)>,
}

fn preset_base(name: &str) -> CmdResult<PresetBase> {
    let base = match name {
        "planar-rings" => PresetBase {
            metric: Metric::Wass,
            samples_per_class: 1000,
            ancilla_qubits: 2,
            layers: 15,
            steps: 20,
            schedule: ScheduleKind::Power {
                coeff: 0.005,
                exponent: 2.0,
            },
            classes: vec![
                ("ring-x", TargetFamily::PlanarRing { plane: RingPlane::X }),
                ("ring-y", TargetFamily::PlanarRing { plane: RingPlane::Y }),
                ("ring-z", TargetFamily::PlanarRing { plane: RingPlane::Z }),
            ],
        },
        "polar-points" => PresetBase {
            metric: Metric::Mmd,
            samples_per_class: 500,
            ancilla_qubits: 2,
            layers: 12,
            steps: 20,
            schedule: ScheduleKind::Linear { coeff: 0.15 },
            classes: [
                PoleDirection::PlusZ,
                PoleDirection::PlusY,
                PoleDirection::MinusZ,
                PoleDirection::MinusY,
                PoleDirection::PlusX,
                PoleDirection::MinusX,
            ]
            .into_iter()
            .map(|direction| {
                let label: &'static str = match direction {
                    PoleDirection::PlusZ => "pole+z",
                    PoleDirection::PlusY => "pole+y",
                    PoleDirection::MinusZ => "pole-z",
                    PoleDirection::MinusY => "pole-y",
                    PoleDirection::PlusX => "pole+x",
                    PoleDirection::MinusX => "pole-x",
                };
                (
                    label,
                    TargetFamily::PolarPoint {
                        direction,
                        epsilon: 0.08,
                    },
                )
            })
            .collect(),
        },
        "entanglement" => PresetBase {
            metric: Metric::Wass,
            samples_per_class: 125,
            ancilla_qubits: 2,
            layers: 12,
            steps: 20,
            schedule: ScheduleKind::Power {
                coeff: 0.01,
                exponent: 2.0,
            },
            classes: vec![
                ("bell-phi", TargetFamily::Bell { kind: BellKind::Phi }),
                ("bell-psi", TargetFamily::Bell { kind: BellKind::Psi }),
            ],
        },
        "many-body" => PresetBase {
            metric: Metric::Mmd,
            samples_per_class: 100,
            ancilla_qubits: 2,
            layers: 12,
            steps: 30,
            schedule: ScheduleKind::Linspace {
                start: 0.1,
                end: 2.0,
            },
            classes: vec![
                (
                    "field-up",
                    TargetFamily::Tlfim {
                        qubits: 4,
                        h: 0.25,
                        g_mean: 0.5,
                        g_std: 0.1,
                    },
                ),
                (
                    "field-down",
                    TargetFamily::Tlfim {
                        qubits: 4,
                        h: -0.25,
                        g_mean: 0.5,
                        g_std: 0.1,
                    },
                ),
            ],
        },
        "rings-union" => PresetBase {
            metric: Metric::Wass,
            samples_per_class: 125,
            ancilla_qubits: 2,
            layers: 12,
            steps: 20,
            schedule: ScheduleKind::Power {
                coeff: 0.005,
                exponent: 2.0,
            },
            classes: vec![
                ("ring-x", TargetFamily::PlanarRing { plane: RingPlane::X }),
                ("ring-y", TargetFamily::PlanarRing { plane: RingPlane::Y }),
            ],
        },
        other => {
            return Err(Failure::config(format!(
                "unknown preset '{other}'; available: {}",
                PRESET_NAMES.join(", ")
            )));
        }
    };
    Ok(base)
}

/// Learning rate used by the named presets (chosen by calibration runs; the
/// core default stays at the conservative 0.01 for custom configs).
const PRESET_LEARNING_RATE: f64 = 0.02;

fn preset_config(name: &str) -> CmdResult<ExperimentConfig> {
    let base = preset_base(name)?;
    let classes: Vec<ClassSpec> = base
        .classes
        .into_iter()
        .map(|(label, family)| ClassSpec {
            label: label.to_string(),
            family,
            samples: base.samples_per_class,
        })
        .collect();
    let mu = assign_mu(classes.len())?;
    Ok(ExperimentConfig {
        name: name.to_string(),
        seed: 0, // placeholder; resolution fails unless a real seed is given
        metric: base.metric,
        samples_per_class: base.samples_per_class,
        ancilla_qubits: base.ancilla_qubits,
        layers: base.layers,
        steps: base.steps,
        conditioning: Conditioning::Rx,
        schedule: base.schedule,
        mu,
        classes,
        trainer: TrainerSettings {
            adam: AdamParams::with_learning_rate(PRESET_LEARNING_RATE),
            ..TrainerSettings::default()
        },
        ablate: None,
        sweep: None,
    })
}

/// Command-line values that participate in resolution.
#[derive(Clone, Debug, Default)]
pub struct CliOverrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

/// Layers `defaults < preset < file < flags` into a validated config.
///
/// A seed must come from somewhere explicit (file or `--seed`); there is no
/// entropy fallback.
pub fn resolve(raw: RawConfig, cli: &CliOverrides) -> CmdResult<ExperimentConfig> {
    let preset_name = cli.preset.clone().or_else(|| raw.preset.clone());
    let mut config = match &preset_name {
        Some(name) => preset_config(name)?,
        None => ExperimentConfig {
            name: "custom".to_string(),
            seed: 0,
            metric: Metric::Wass,
            samples_per_class: 125,
            ancilla_qubits: 2,
            layers: 12,
            steps: 20,
            conditioning: Conditioning::Rx,
            schedule: ScheduleKind::Power {
                coeff: 0.01,
                exponent: 2.0,
            },
            mu: Vec::new(),
            classes: Vec::new(),
            trainer: TrainerSettings::default(),
            ablate: None,
            sweep: None,
        },
    };

    if let Some(name) = raw.name {
        config.name = name;
    }
    if let Some(metric) = raw.metric {
        config.metric = metric;
    }
    if let Some(n) = raw.samples_per_class {
        config.samples_per_class = n;
        for class in &mut config.classes {
            class.samples = n;
        }
    }
    if let Some(n) = raw.ancilla_qubits {
        config.ancilla_qubits = n;
    }
    if let Some(l) = raw.layers {
        config.layers = l;
    }
    if let Some(t) = raw.steps {
        config.steps = t;
    }
    if let Some(mode) = raw.conditioning {
        config.conditioning = mode;
    }
    if let Some(schedule) = raw.schedule {
        config.schedule = schedule;
    }
    if !raw.classes.is_empty() {
        config.classes = raw
            .classes
            .into_iter()
            .map(|class| ClassSpec {
                label: class.label,
                family: class.family,
                samples: class.samples.unwrap_or(config.samples_per_class),
            })
            .collect();
        config.mu = assign_mu(config.classes.len())?;
    }
    if let Some(mu) = raw.mu {
        config.mu = mu;
    }
    if let Some(trainer) = raw.trainer {
        if let Some(iters) = trainer.iterations_per_step {
            config.trainer.iterations_per_step = iters;
        }
        if let Some(adam) = trainer.adam {
            if let Some(lr) = adam.learning_rate {
                config.trainer.adam.learning_rate = lr;
            }
            if let Some(b1) = adam.beta1 {
                config.trainer.adam.beta1 = b1;
            }
            if let Some(b2) = adam.beta2 {
                config.trainer.adam.beta2 = b2;
            }
            if let Some(eps) = adam.epsilon {
                config.trainer.adam.epsilon = eps;
            }
        }
        if let Some(estimator) = trainer.estimator {
            config.trainer.estimator = estimator;
        }
        if let Some(measurement) = trainer.measurement {
            config.trainer.measurement = measurement;
        }
    }
    config.ablate = raw.ablate;
    config.sweep = raw.sweep;

    match cli.seed.or(raw.seed) {
        Some(seed) => config.seed = seed,
        None => {
            return Err(Failure::config(
                "no seed given; set `seed` in the config file or pass --seed",
            ));
        }
    }

    config.validate()?;
    Ok(config)
}

/// Reads and resolves a config from an optional file plus flags. At least
/// one of `--config` and `--preset` must be present.
pub fn load(path: Option<&Path>, cli: &CliOverrides) -> CmdResult<ExperimentConfig> {
    let raw = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|err| {
                Failure::io(format!("cannot read config {}: {err}", path.display()))
            })?;
            toml::from_str::<RawConfig>(&text)?
        }
        None => {
            if cli.preset.is_none() {
                return Err(Failure::config(
                    "no configuration given; pass --config FILE and/or --preset NAME",
                ));
            }
            RawConfig::default()
        }
    };
    resolve(raw, cli)
}
