//! The conditioned denoising circuit: a hardware-efficient layered ansatz
//! over system plus ancilla qubits, one backward step (condition, entangle,
//! measure, discard), and full backward generation.
//!
//! Circuit layout for a spec with `Q = n + n_a` chain qubits (system first,
//! ancillas trailing) and `L` layers, 1-based layer index `ℓ`:
//!
//! * every qubit gets `RX(θ)` then `RY(θ')`; parameters are indexed
//!   layer-major, then qubit-major, then `[rx, ry]`;
//! * a nearest-neighbour CZ chain follows: pairs `(0,1), (2,3), …` on odd
//!   `ℓ`, pairs `(1,2), (3,4), …` on even `ℓ`.
//!
//! The parameter count is `d = 2·L·Q`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Streams;
use crate::statevec::{AncillaInit, MeasureOutcome, Pauli, StateVector};
use crate::stateset::StateSet;

pub use crate::statevec::MeasureMode as MeasMode;

/// How the ancilla register encodes the class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// `(RX(μ)|0⟩)^{⊗ n_a}` — the default continuous encoding.
    Rx,
    /// `(RY(μ)|0⟩)^{⊗ n_a}`.
    Ry,
    /// `(RZ(μ)|0⟩)^{⊗ n_a}`; a global phase only, so classes are not
    /// actually distinguishable in this mode.
    Rz,
    /// Computational basis labels (see [`class_basis_index`]).
    Basis,
}

impl std::fmt::Display for Conditioning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Conditioning::Rx => "rx",
            Conditioning::Ry => "ry",
            Conditioning::Rz => "rz",
            Conditioning::Basis => "basis",
        })
    }
}

/// Architecture of one denoising circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub system_qubits: usize,
    pub ancilla_qubits: usize,
    pub layers: usize,
    pub conditioning: Conditioning,
}

impl AnsatzSpec {
    pub fn new(
        system_qubits: usize,
        ancilla_qubits: usize,
        layers: usize,
        conditioning: Conditioning,
    ) -> Result<Self> {
        let spec = Self {
            system_qubits,
            ancilla_qubits,
            layers,
            conditioning,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.system_qubits == 0 {
            return Err(Error::InvalidArgument(
                "ansatz needs at least one system qubit".into(),
            ));
        }
        if self.total_qubits() > 24 {
            return Err(Error::InvalidArgument(format!(
                "{} total qubits exceeds the dense simulator limit of 24",
                self.total_qubits()
            )));
        }
        Ok(())
    }

    pub fn total_qubits(&self) -> usize {
        self.system_qubits + self.ancilla_qubits
    }

    /// `d = 2·L·(n + n_a)`.
    pub fn param_count(&self) -> usize {
        2 * self.layers * self.total_qubits()
    }
}

/// One gate of the unrolled circuit plan. `param` indexes into θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateOp {
    Rx { qubit: usize, param: usize },
    Ry { qubit: usize, param: usize },
    Cz { a: usize, b: usize },
}

/// Visits the circuit's gates in application order without materializing
/// the plan.
fn for_each_gate<E>(spec: &AnsatzSpec, mut visit: impl FnMut(GateOp) -> std::result::Result<(), E>) -> std::result::Result<(), E> {
    let chain = spec.total_qubits();
    for layer in 1..=spec.layers {
        let base = (layer - 1) * 2 * chain;
        for qubit in 0..chain {
            visit(GateOp::Rx {
                qubit,
                param: base + 2 * qubit,
            })?;
            visit(GateOp::Ry {
                qubit,
                param: base + 2 * qubit + 1,
            })?;
        }
        let first = if layer % 2 == 1 { 0 } else { 1 };
        let mut a = first;
        while a + 1 < chain {
            visit(GateOp::Cz { a, b: a + 1 })?;
            a += 2;
        }
    }
    Ok(())
}

/// The ordered gate plan of the ansatz (see module docs for the layout).
pub fn circuit_layout(spec: &AnsatzSpec) -> Result<Vec<GateOp>> {
    spec.validate()?;
    let mut plan = Vec::with_capacity(spec.layers * (2 * spec.total_qubits() + spec.total_qubits() / 2));
    for_each_gate::<std::convert::Infallible>(spec, |gate| {
        plan.push(gate);
        Ok(())
    })
    .unwrap();
    Ok(plan)
}

/// Class conditioning angles: `μ_j = 2π·j / num_classes`.
pub fn assign_mu(num_classes: usize) -> Result<Vec<f64>> {
    if num_classes == 0 {
        return Err(Error::InvalidArgument(
            "need at least one class to assign conditioning angles".into(),
        ));
    }
    Ok((0..num_classes)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / num_classes as f64)
        .collect())
}

/// Computational-basis label for class `class_index` out of `num_classes`
/// under basis conditioning: two classes use the all-zeros and all-ones
/// registers; more classes enumerate basis states directly.
pub fn class_basis_index(class_index: usize, num_classes: usize, n_a: usize) -> Result<usize> {
    if class_index >= num_classes {
        return Err(Error::InvalidArgument(format!(
            "class index {class_index} out of range for {num_classes} classes"
        )));
    }
    let capacity = 1usize << n_a;
    if num_classes > capacity {
        return Err(Error::InvalidArgument(format!(
            "cannot uniquely represent more than {capacity} classes with {n_a} ancilla qubits"
        )));
    }
    if num_classes == 2 {
        return Ok(if class_index == 0 { 0 } else { capacity - 1 });
    }
    Ok(class_index)
}

/// Ancilla preparation for class `class_index` of `num_classes` under the
/// given conditioning mode and angle.
pub fn conditioning_init(
    conditioning: Conditioning,
    mu: f64,
    class_index: usize,
    num_classes: usize,
    n_a: usize,
) -> Result<AncillaInit> {
    Ok(match conditioning {
        Conditioning::Rx => AncillaInit::Rx(mu),
        Conditioning::Ry => AncillaInit::Ry(mu),
        Conditioning::Rz => AncillaInit::Rz(mu),
        Conditioning::Basis => {
            AncillaInit::Basis(class_basis_index(class_index, num_classes, n_a)?)
        }
    })
}

/// Weighted collection of post-measurement branches.
#[derive(Clone, Debug)]
pub struct BranchSet {
    pub states: Vec<StateVector>,
    pub weights: Vec<f64>,
}

/// Output of one backward step.
#[derive(Clone, Debug)]
pub enum DenoiseOutput {
    Single(StateVector),
    Branches(BranchSet),
}

impl DenoiseOutput {
    /// Unwraps the single-state case; errors on branches.
    pub fn into_single(self) -> Result<StateVector> {
        match self {
            DenoiseOutput::Single(state) => Ok(state),
            DenoiseOutput::Branches(_) => Err(Error::InvalidArgument(
                "expected a single denoised state, got branches".into(),
            )),
        }
    }
}

/// One backward step: append the conditioned ancilla register, run the
/// parametrized circuit, then measure and discard the ancillas per `mode`.
/// With `n_a = 0` the circuit acts on the system alone and no measurement
/// happens.
pub fn denoise_step(
    state: &StateVector,
    theta: &[f64],
    prep: AncillaInit,
    spec: &AnsatzSpec,
    mode: MeasMode,
    rng: &mut impl rand::Rng,
) -> Result<DenoiseOutput> {
    spec.validate()?;
    if state.num_qubits() != spec.system_qubits {
        return Err(Error::InvalidArgument(format!(
            "state has {} qubits, ansatz expects {}",
            state.num_qubits(),
            spec.system_qubits
        )));
    }
    if theta.len() != spec.param_count() {
        return Err(Error::InvalidArgument(format!(
            "parameter vector length {} does not match d = {}",
            theta.len(),
            spec.param_count()
        )));
    }
    let mut joint = state.append_conditioned_ancilla(spec.ancilla_qubits, prep)?;
    for_each_gate(spec, |gate| -> Result<()> {
        match gate {
            GateOp::Rx { qubit, param } => joint.rotate(Pauli::X, theta[param], qubit),
            GateOp::Ry { qubit, param } => joint.rotate(Pauli::Y, theta[param], qubit),
            GateOp::Cz { a, b } => joint.cz(a, b),
        }
    })?;
    if spec.ancilla_qubits == 0 {
        return Ok(DenoiseOutput::Single(joint));
    }
    match joint.measure_discard_ancilla(spec.ancilla_qubits, mode, rng)? {
        MeasureOutcome::Single(state, _) => Ok(DenoiseOutput::Single(state)),
        MeasureOutcome::Branches(branches) => {
            let mut states = Vec::with_capacity(branches.len());
            let mut weights = Vec::with_capacity(branches.len());
            let mut total = 0.0;
            for (state, record) in branches {
                total += record.probability;
                states.push(state);
                weights.push(record.probability);
            }
            // Renormalize away the mass of omitted zero-probability branches.
            for w in &mut weights {
                *w /= total;
            }
            Ok(DenoiseOutput::Branches(BranchSet { states, weights }))
        }
    }
}

/// One class of a trained model: its label and conditioning angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub label: String,
    pub mu: f64,
}

/// Bookkeeping carried with a model checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub master_seed: u64,
    /// Path (relative to the run directory) of the loss-record file the
    /// model was trained with, if any.
    pub loss_records: Option<String>,
    /// Training-time normalization constant, if known.
    pub normalization_constant: Option<f64>,
}

/// A (possibly trained) backward model: per-step parameters θ_1..θ_T plus
/// the class table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseModel {
    pub spec: AnsatzSpec,
    pub steps: usize,
    /// `thetas[k-1]` is θ_k, the parameters of backward step `k`; steps are
    /// applied in the order k = T, T-1, …, 1.
    pub thetas: Vec<Vec<f64>>,
    pub classes: Vec<ClassEntry>,
    pub metadata: ModelMetadata,
}

impl DenoiseModel {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.thetas.len() != self.steps {
            return Err(Error::InvalidArgument(format!(
                "model has {} parameter vectors for {} steps",
                self.thetas.len(),
                self.steps
            )));
        }
        let d = self.spec.param_count();
        for (k, theta) in self.thetas.iter().enumerate() {
            if theta.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "θ_{} has length {}, expected d = {}",
                    k + 1,
                    theta.len(),
                    d
                )));
            }
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidArgument("model has no classes".into()));
        }
        for (i, a) in self.classes.iter().enumerate() {
            for b in self.classes.iter().skip(i + 1) {
                if a.label == b.label {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate class label '{}'",
                        a.label
                    )));
                }
                if (a.mu - b.mu).abs() < 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "classes '{}' and '{}' share conditioning angle {}",
                        a.label, b.label, a.mu
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|entry| entry.label == label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class label '{label}'")))
    }

    /// Ancilla preparation for a class under this model's conditioning mode.
    pub fn ancilla_init(&self, class_index: usize) -> Result<AncillaInit> {
        let entry = self.classes.get(class_index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "class index {class_index} out of range for {} classes",
                self.classes.len()
            ))
        })?;
        conditioning_init(
            self.spec.conditioning,
            entry.mu,
            class_index,
            self.classes.len(),
            self.spec.ancilla_qubits,
        )
    }

    /// Ancilla preparation for an arbitrary conditioning angle (μ sweeps).
    /// Only meaningful for the continuous rx/ry modes.
    pub fn ancilla_init_for_angle(&self, mu: f64) -> Result<AncillaInit> {
        match self.spec.conditioning {
            Conditioning::Rx => Ok(AncillaInit::Rx(mu)),
            Conditioning::Ry => Ok(AncillaInit::Ry(mu)),
            Conditioning::Rz | Conditioning::Basis => Err(Error::InvalidArgument(format!(
                "conditioning mode {} has no continuous angle to sweep",
                self.spec.conditioning
            ))),
        }
    }
}

/// Runs the full backward process for one class.
///
/// Returns the sets indexed by remaining steps: `out[t]` is `S̃(t)`, so
/// `out[model.steps]` is the Haar starting ensemble and `out[0]` the final
/// generated set. Streams are keyed off `purpose`: the Haar draw for sample
/// `i` uses `("<purpose>-haar", [class, i])` and backward step `k` uses
/// `("<purpose>-step", [class, k, i])`, making generation reproducible
/// per-sample under any parallel schedule.
pub fn generate(
    model: &DenoiseModel,
    class_label: &str,
    n_samples: usize,
    streams: &Streams,
    purpose: &str,
) -> Result<Vec<StateSet>> {
    model.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("cannot generate zero samples".into()));
    }
    let class = model.class_index(class_label)?;
    let prep = model.ancilla_init(class)?;
    let haar_purpose = format!("{purpose}-haar");
    let step_purpose = format!("{purpose}-step");
    let histories: Vec<Vec<StateVector>> = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<StateVector>> {
            let mut history = Vec::with_capacity(model.steps + 1);
            let mut rng = streams.stream(&haar_purpose, &[class as u64, i as u64]);
            let mut state = StateVector::haar_random(model.spec.system_qubits, &mut rng)?;
            history.push(state.clone());
            for k in (1..=model.steps).rev() {
                let mut rng = streams.stream(&step_purpose, &[class as u64, k as u64, i as u64]);
                state = denoise_step(
                    &state,
                    &model.thetas[k - 1],
                    prep,
                    &model.spec,
                    MeasMode::Born,
                    &mut rng,
                )?
                .into_single()?;
                history.push(state.clone());
            }
            // history[0] is S̃(T); reverse so index = remaining steps.
            history.reverse();
            Ok(history)
        })
        .collect::<Result<_>>()?;

    (0..=model.steps)
        .map(|t| {
            StateSet::new(histories.iter().map(|h| h[t].clone()).collect())
                .map(|set| set.labeled(class_label))
        })
        .collect()
}
