//! Forward scrambling: noise schedules and the randomized circuits that
//! drive each target set toward the Haar ensemble.
//!
//! One scrambling step applies, in order, `RZ(ω)` then `RY(ω')` to every
//! qubit, followed by `RZZ(ω'')` on every unique qubit pair in lexicographic
//! order. Every angle is an independent uniform draw from
//! `[-δ_t·π/8, +δ_t·π/8]`, so a step on `n` qubits consumes exactly
//! `2n + n(n-1)/2` draws from its stream.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeedRecord, Streams};
use crate::statevec::{Pauli, StateVector};
use crate::stateset::StateSet;

/// Stream purpose tag used by [`forward_diffuse`].
pub const DIFFUSE_PURPOSE: &str = "diffuse";

/// Functional form of the noise-amplitude schedule δ_1..δ_T.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `δ_t = coeff · t^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `δ_t = coeff · t`
    Linear { coeff: f64 },
    /// `δ_t = value`
    Constant { value: f64 },
    /// `T` equally spaced values from `start` to `end` inclusive
    /// (a single-step schedule degenerates to `[start]`).
    Linspace { start: f64, end: f64 },
}

/// A validated schedule: `T ≥ 1` strictly positive amplitudes, nondecreasing
/// for the power and linear families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    deltas: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(kind: ScheduleKind, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs at least one step".into(),
            ));
        }
        let deltas: Vec<f64> = match kind {
            ScheduleKind::Power { coeff, exponent } => (1..=steps)
                .map(|t| coeff * (t as f64).powf(exponent))
                .collect(),
            ScheduleKind::Linear { coeff } => (1..=steps).map(|t| coeff * t as f64).collect(),
            ScheduleKind::Constant { value } => vec![value; steps],
            ScheduleKind::Linspace { start, end } => {
                if steps == 1 {
                    vec![start]
                } else {
                    let span = (end - start) / (steps - 1) as f64;
                    (0..steps).map(|k| start + span * k as f64).collect()
                }
            }
        };
        for (index, &delta) in deltas.iter().enumerate() {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "schedule amplitude δ_{} = {delta} must be positive",
                    index + 1
                )));
            }
        }
        if matches!(
            kind,
            ScheduleKind::Power { .. } | ScheduleKind::Linear { .. }
        ) && deltas.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::InvalidArgument(
                "power and linear schedules must be nondecreasing".into(),
            ));
        }
        Ok(Self { kind, deltas })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.deltas.len()
    }

    /// Amplitude for step `t`, 1-based.
    pub fn delta(&self, t: usize) -> f64 {
        self.deltas[t - 1]
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

/// One uniform draw from `[-bound, +bound]`, consuming exactly one variate.
fn uniform_symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    (2.0 * rng.gen::<f64>() - 1.0) * bound
}

/// Applies one scrambling circuit with amplitude `delta` (see module docs
/// for gate and draw order).
pub fn scrambling_step(
    state: &StateVector,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<StateVector> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scrambling amplitude {delta} must be positive"
        )));
    }
    let bound = delta * std::f64::consts::PI / 8.0;
    let mut out = state.clone();
    let n = out.num_qubits();
    for qubit in 0..n {
        let omega_z = uniform_symmetric(rng, bound);
        out.rotate(Pauli::Z, omega_z, qubit)?;
        let omega_y = uniform_symmetric(rng, bound);
        out.rotate(Pauli::Y, omega_y, qubit)?;
    }
    for p in 0..n {
        for q in p + 1..n {
            let omega = uniform_symmetric(rng, bound);
            out.rzz(omega, p, q)?;
        }
    }
    Ok(out)
}

/// The forward history of one class: `sets[t]` is the ensemble after `t`
/// scrambling steps, `sets[0]` the original targets.
#[derive(Clone, Debug)]
pub struct DiffusionTrajectory {
    pub class_label: String,
    pub sets: Vec<StateSet>,
    pub seed_record: SeedRecord,
}

impl DiffusionTrajectory {
    pub fn steps(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn initial(&self) -> &StateSet {
        &self.sets[0]
    }

    pub fn terminal(&self) -> &StateSet {
        &self.sets[self.sets.len() - 1]
    }
}

/// Runs the full forward process on one class set.
///
/// Sample `i` at step `t` draws from the stream
/// `("diffuse", [class_index, t, i])`, so trajectories are reproducible
/// per-state and independent of evaluation order.
pub fn forward_diffuse(
    initial: &StateSet,
    schedule: &NoiseSchedule,
    streams: &Streams,
    class_index: u64,
) -> Result<DiffusionTrajectory> {
    let class_label = initial
        .label()
        .map(str::to_string)
        .unwrap_or_else(|| format!("class-{class_index}"));
    let mut sets = Vec::with_capacity(schedule.steps() + 1);
    sets.push(initial.clone().labeled(class_label.clone()));
    for t in 1..=schedule.steps() {
        let delta = schedule.delta(t);
        let previous = &sets[t - 1];
        let states: Vec<StateVector> = (0..previous.len())
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.stream(DIFFUSE_PURPOSE, &[class_index, t as u64, i as u64]);
                scrambling_step(previous.get(i), delta, &mut rng)
            })
            .collect::<Result<_>>()?;
        let set = match previous.weights() {
            Some(w) => StateSet::with_weights(states, w.to_vec())?,
            None => StateSet::new(states)?,
        };
        sets.push(set.labeled(class_label.clone()));
    }
    Ok(DiffusionTrajectory {
        class_label,
        sets,
        seed_record: SeedRecord::new(streams.master(), DIFFUSE_PURPOSE, &[class_index]),
    })
}
