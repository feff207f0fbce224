//! Divide-and-conquer trainer: the backward steps are optimized one at a
//! time, from the last step down to the first. Step `k` freezes everything
//! learnt for steps `T..k+1`, pushes frozen inputs through the new circuit,
//! and minimizes the normalized set distance to the forward ensemble with
//! `k − 1` scrambling steps remaining. Gradients come from derivative-free
//! estimators (simultaneous-perturbation by default), parameters follow
//! Adam, and the best parameters seen during a step are checkpointed.
//!
//! Every random draw is keyed off a master seed and a purpose string, so a
//! re-run with the same configuration is bit-identical regardless of thread
//! count or evaluation order. Within one iteration the raw evaluation and
//! the paired gradient evaluations share measurement streams (common random
//! numbers), which keeps the finite-difference signal out of the
//! measurement noise.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::ansatz::{
    conditioning_init, denoise_step, generate, AnsatzSpec, ClassEntry, DenoiseModel,
    DenoiseOutput, MeasMode, ModelMetadata,
};
use crate::diffusion::{forward_diffuse, NoiseSchedule};
use crate::distances::{class_loss, normalization_constant, Metric};
use crate::error::{Error, Result};
use crate::rng::Streams;
use crate::statevec::StateVector;
use crate::stateset::StateSet;

/// Stream purposes; all derived RNGs are keyed by these plus indices.
pub const TRAIN_PURPOSE: &str = "train";
pub const TEST_PURPOSE: &str = "test";
pub const INIT_PURPOSE: &str = "train-init";
pub const GRAD_PURPOSE: &str = "train-grad";
pub const MEAS_PURPOSE: &str = "train-meas";
pub const NORM_HAAR_PURPOSE: &str = "norm-haar";

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, value) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(value.is_finite() && (0.0..1.0).contains(&value)) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {value}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// First and second moment accumulators plus the update counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn updates_applied(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update in place; deterministic.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    opts: &AdamParams,
) -> Result<()> {
    opts.validate()?;
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::InvalidArgument(format!(
            "adam length mismatch: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - opts.beta1.powi(t);
    let bias2 = 1.0 - opts.beta2.powi(t);
    for i in 0..params.len() {
        state.m[i] = opts.beta1 * state.m[i] + (1.0 - opts.beta1) * grads[i];
        state.v[i] = opts.beta2 * state.v[i] + (1.0 - opts.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        params[i] -= opts.learning_rate * m_hat / (v_hat.sqrt() + opts.epsilon);
    }
    Ok(())
}

/// Derivative-free gradient estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradEstimator {
    /// Simultaneous perturbation: one Rademacher direction, two loss
    /// evaluations; perturbation size decays as `c_k = c0 / k^gamma`.
    Spsa { c0: f64, gamma: f64 },
    /// Coordinate-wise central differences with a fixed step; `2d` loss
    /// evaluations per estimate.
    CentralFd { step: f64 },
}

impl Default for GradEstimator {
    fn default() -> Self {
        GradEstimator::Spsa {
            c0: 0.1,
            gamma: 0.101,
        }
    }
}

impl GradEstimator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GradEstimator::Spsa { c0, gamma } => {
                if !(c0.is_finite() && c0 > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "perturbation scale must be positive, got {c0}"
                    )));
                }
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "perturbation decay must be non-negative, got {gamma}"
                    )));
                }
            }
            GradEstimator::CentralFd { step } => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "finite-difference step must be positive, got {step}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn finite_loss(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("loss evaluated to {value}")))
    }
}

/// Estimates `∇f` at `params`. `iteration` is the 1-based optimizer
/// iteration, used for the perturbation-size schedule. The caller's
/// `loss_fn` must hold its internal random streams fixed across the paired
/// evaluations of one estimate.
pub fn estimate_gradient(
    mut loss_fn: impl FnMut(&[f64]) -> Result<f64>,
    params: &[f64],
    estimator: GradEstimator,
    iteration: u64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    estimator.validate()?;
    if iteration == 0 {
        return Err(Error::InvalidArgument(
            "gradient estimates are indexed from iteration 1".into(),
        ));
    }
    match estimator {
        GradEstimator::Spsa { c0, gamma } => {
            let c = c0 / (iteration as f64).powf(gamma);
            let signs: Vec<f64> = (0..params.len())
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let plus: Vec<f64> = params.iter().zip(&signs).map(|(p, s)| p + c * s).collect();
            let minus: Vec<f64> = params.iter().zip(&signs).map(|(p, s)| p - c * s).collect();
            let f_plus = finite_loss(loss_fn(&plus)?)?;
            let f_minus = finite_loss(loss_fn(&minus)?)?;
            let scale = (f_plus - f_minus) / (2.0 * c);
            Ok(signs.iter().map(|s| scale / s).collect())
        }
        GradEstimator::CentralFd { step } => {
            let mut grad = Vec::with_capacity(params.len());
            let mut probe = params.to_vec();
            for i in 0..params.len() {
                probe[i] = params[i] + step;
                let f_plus = finite_loss(loss_fn(&probe)?)?;
                probe[i] = params[i] - step;
                let f_minus = finite_loss(loss_fn(&probe)?)?;
                probe[i] = params[i];
                grad.push((f_plus - f_minus) / (2.0 * step));
            }
            Ok(grad)
        }
    }
}

/// How the loss evaluation treats ancilla measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMeasMode {
    /// One seeded Born draw per state (default).
    Sample,
    /// Keep all measurement branches as a weighted ensemble.
    ExactBranches,
}

impl LossMeasMode {
    fn meas_mode(self) -> MeasMode {
        match self {
            LossMeasMode::Sample => MeasMode::Born,
            LossMeasMode::ExactBranches => MeasMode::ExactBranches,
        }
    }
}

/// Everything that parametrizes an optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub iterations_per_step: usize,
    pub adam: AdamParams,
    pub estimator: GradEstimator,
    pub meas_mode: LossMeasMode,
    pub metric: Metric,
    pub master_seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            iterations_per_step: 5000,
            adam: AdamParams::default(),
            estimator: GradEstimator::default(),
            meas_mode: LossMeasMode::Sample,
            metric: Metric::Mmd,
            master_seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations_per_step == 0 {
            return Err(Error::InvalidArgument(
                "need at least one optimizer iteration per step".into(),
            ));
        }
        self.adam.validate()?;
        self.estimator.validate()
    }
}

/// One recorded point of an optimization curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossCurvePoint {
    pub step: usize,
    pub iteration: usize,
    pub loss: f64,
    pub best_so_far: f64,
}

/// Everything learnt while optimizing one backward step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub best_loss: f64,
    pub best_iteration: usize,
    pub theta: Vec<f64>,
    pub curve: Vec<LossCurvePoint>,
    pub wall_seconds: f64,
}

/// The full history of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub master_seed: u64,
    pub metric: Metric,
    pub norm_constant: f64,
    /// In training order, i.e. steps `T, T−1, …, 1`.
    pub steps: Vec<StepRecord>,
    /// Normalized loss of the fully chained training inputs against the
    /// original targets.
    pub final_train_loss: f64,
    /// Normalized loss of freshly seeded held-out generations against the
    /// original targets.
    pub final_test_loss: f64,
    pub total_wall_seconds: f64,
}

/// Draws `count` Haar-random states from streams
/// `(purpose, [class_index, i])`.
pub fn haar_class_set(
    qubits: usize,
    count: usize,
    streams: &Streams,
    purpose: &str,
    class_index: u64,
) -> Result<StateSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("cannot draw an empty Haar set".into()));
    }
    let states: Vec<StateVector> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(purpose, &[class_index, i as u64]);
            StateVector::haar_random(qubits, &mut rng)
        })
        .collect::<Result<_>>()?;
    StateSet::new(states)
}

/// Evaluates the step-`k` objective: run the circuit with `theta` on every
/// input, measure ancillas per `mode`, and compare against the references.
/// Measurement streams are keyed by `(k, iteration, class, sample)` so that
/// repeated calls within one iteration see identical noise.
#[allow(clippy::too_many_arguments)]
fn step_objective(
    theta: &[f64],
    k: usize,
    iteration: u64,
    inputs: &[StateSet],
    references: &[StateSet],
    spec: &AnsatzSpec,
    classes: &[ClassEntry],
    config: &TrainerConfig,
    norm_constant: f64,
    streams: &Streams,
) -> Result<f64> {
    let mode = config.meas_mode.meas_mode();
    let mut generated = Vec::with_capacity(inputs.len());
    for (j, input) in inputs.iter().enumerate() {
        let prep = conditioning_init(
            spec.conditioning,
            classes[j].mu,
            j,
            classes.len(),
            spec.ancilla_qubits,
        )?;
        let outputs: Vec<DenoiseOutput> = (0..input.len())
            .into_par_iter()
            .map(|idx| {
                let mut rng = streams.stream(
                    MEAS_PURPOSE,
                    &[k as u64, iteration, j as u64, idx as u64],
                );
                denoise_step(input.get(idx), theta, prep, spec, mode, &mut rng)
            })
            .collect::<Result<_>>()?;
        let set = match config.meas_mode {
            LossMeasMode::Sample => {
                let states = outputs
                    .into_iter()
                    .map(DenoiseOutput::into_single)
                    .collect::<Result<Vec<_>>>()?;
                match input.weights() {
                    Some(w) => StateSet::with_weights(states, w.to_vec())?,
                    None => StateSet::new(states)?,
                }
            }
            LossMeasMode::ExactBranches => {
                let mut states = Vec::new();
                let mut weights = Vec::new();
                for (idx, output) in outputs.into_iter().enumerate() {
                    let input_weight = input.weight(idx);
                    match output {
                        DenoiseOutput::Single(state) => {
                            states.push(state);
                            weights.push(input_weight);
                        }
                        DenoiseOutput::Branches(branches) => {
                            for (state, w) in
                                branches.states.into_iter().zip(branches.weights)
                            {
                                states.push(state);
                                weights.push(input_weight * w);
                            }
                        }
                    }
                }
                StateSet::with_weights(states, weights)?
            }
        };
        generated.push(set);
    }
    class_loss(&generated, references, config.metric, norm_constant)
}

/// Optimizes the parameters of backward step `k` against the given frozen
/// inputs and forward references. Starts from a standard-Gaussian
/// initialization, runs `iterations_per_step` Adam iterations, and returns
/// the parameters with the lowest recorded raw loss (the initialization
/// itself competes).
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    k: usize,
    inputs: &[StateSet],
    references: &[StateSet],
    spec: &AnsatzSpec,
    classes: &[ClassEntry],
    config: &TrainerConfig,
    norm_constant: f64,
    streams: &Streams,
) -> Result<StepRecord> {
    config.validate()?;
    spec.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument("backward steps are numbered from 1".into()));
    }
    if inputs.len() != classes.len() || references.len() != classes.len() {
        return Err(Error::InvalidArgument(format!(
            "step {k}: {} input classes, {} reference classes, {} class entries",
            inputs.len(),
            references.len(),
            classes.len()
        )));
    }
    if !(norm_constant.is_finite() && norm_constant > 0.0) {
        return Err(Error::DegenerateNormalization(format!(
            "normalization constant {norm_constant} is unusable"
        )));
    }
    let started = Instant::now();
    let d = spec.param_count();
    let mut init_rng = streams.stream(INIT_PURPOSE, &[k as u64]);
    let mut theta: Vec<f64> = (0..d).map(|_| init_rng.sample(StandardNormal)).collect();
    let mut adam_state = AdamState::new(d);
    let mut best_loss = f64::INFINITY;
    let mut best_theta = theta.clone();
    let mut best_iteration = 0;
    let mut curve = Vec::with_capacity(config.iterations_per_step);

    for iteration in 1..=config.iterations_per_step {
        let objective = |probe: &[f64]| {
            step_objective(
                probe,
                k,
                iteration as u64,
                inputs,
                references,
                spec,
                classes,
                config,
                norm_constant,
                streams,
            )
        };
        let raw = finite_loss(objective(&theta)?)?;
        if raw < best_loss {
            best_loss = raw;
            best_theta.copy_from_slice(&theta);
            best_iteration = iteration;
        }
        curve.push(LossCurvePoint {
            step: k,
            iteration,
            loss: raw,
            best_so_far: best_loss,
        });
        if iteration == config.iterations_per_step {
            break;
        }
        let mut grad_rng = streams.stream(GRAD_PURPOSE, &[k as u64, iteration as u64]);
        let grad = estimate_gradient(
            objective,
            &theta,
            config.estimator,
            iteration as u64,
            &mut grad_rng,
        )?;
        adam_update(&mut theta, &grad, &mut adam_state, &config.adam)?;
    }

    Ok(StepRecord {
        step: k,
        best_loss,
        best_iteration,
        theta: best_theta,
        curve,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Pushes each class's frozen inputs through the newly fixed step `k` with
/// one seeded Born draw per state, producing the inputs of step `k − 1`.
/// Streams match those used by backward generation with purpose
/// [`TRAIN_PURPOSE`], so a finished model regenerates this chain exactly.
fn chain_inputs(
    inputs: &[StateSet],
    theta: &[f64],
    k: usize,
    spec: &AnsatzSpec,
    classes: &[ClassEntry],
    streams: &Streams,
) -> Result<Vec<StateSet>> {
    let step_purpose = format!("{TRAIN_PURPOSE}-step");
    inputs
        .iter()
        .enumerate()
        .map(|(j, input)| {
            let prep = conditioning_init(
                spec.conditioning,
                classes[j].mu,
                j,
                classes.len(),
                spec.ancilla_qubits,
            )?;
            let states: Vec<StateVector> = (0..input.len())
                .into_par_iter()
                .map(|i| {
                    let mut rng =
                        streams.stream(&step_purpose, &[j as u64, k as u64, i as u64]);
                    denoise_step(input.get(i), theta, prep, spec, MeasMode::Born, &mut rng)?
                        .into_single()
                })
                .collect::<Result<_>>()?;
            Ok(StateSet::new(states)?.labeled(&classes[j].label))
        })
        .collect()
}

/// Trains the whole backward model.
///
/// For each class the targets are scrambled forward under the shared
/// schedule; steps `k = T..1` are then optimized in sequence, each against
/// the forward ensemble with `k − 1` steps remaining, with inputs chained
/// from the frozen later steps. Returns the trained model plus the full
/// record, including normalized final losses of the training chain and of
/// freshly seeded held-out generations, both measured against the original
/// targets.
pub fn train_all(
    targets: &[StateSet],
    schedule: &NoiseSchedule,
    spec: &AnsatzSpec,
    mu_table: &[f64],
    config: &TrainerConfig,
) -> Result<(DenoiseModel, TrainingRecord)> {
    config.validate()?;
    spec.validate()?;
    if targets.is_empty() || targets.len() != mu_table.len() {
        return Err(Error::InvalidArgument(format!(
            "{} target classes vs {} conditioning angles",
            targets.len(),
            mu_table.len()
        )));
    }
    let n_per_class = targets[0].len();
    for (j, target) in targets.iter().enumerate() {
        if target.len() != n_per_class {
            return Err(Error::InvalidArgument(format!(
                "class {j} has {} states but class 0 has {n_per_class}; \
                 classes must be equally sized",
                target.len()
            )));
        }
        if target.num_qubits() != spec.system_qubits {
            return Err(Error::InvalidArgument(format!(
                "class {j} is on {} qubits, ansatz expects {}",
                target.num_qubits(),
                spec.system_qubits
            )));
        }
    }
    let started = Instant::now();
    let streams = Streams::new(config.master_seed);
    let classes: Vec<ClassEntry> = targets
        .iter()
        .zip(mu_table)
        .enumerate()
        .map(|(j, (target, &mu))| ClassEntry {
            label: target
                .label()
                .map(str::to_string)
                .unwrap_or_else(|| format!("class-{j}")),
            mu,
        })
        .collect();

    // Forward histories; trajectory j index t holds the ensemble after t
    // scrambling steps.
    let forward: Vec<Vec<StateSet>> = targets
        .iter()
        .enumerate()
        .map(|(j, target)| {
            Ok(forward_diffuse(target, schedule, &streams, j as u64)?.sets)
        })
        .collect::<Result<_>>()?;

    let haar_norm = haar_class_set(
        spec.system_qubits,
        n_per_class,
        &streams,
        NORM_HAAR_PURPOSE,
        0,
    )?;
    let norm_constant = normalization_constant(targets, &haar_norm, config.metric)?;

    let steps = schedule.steps();
    let haar_purpose = format!("{TRAIN_PURPOSE}-haar");
    let mut inputs: Vec<StateSet> = (0..targets.len())
        .map(|j| {
            Ok(
                haar_class_set(spec.system_qubits, n_per_class, &streams, &haar_purpose, j as u64)?
                    .labeled(&classes[j].label),
            )
        })
        .collect::<Result<_>>()?;

    let mut thetas: Vec<Vec<f64>> = vec![Vec::new(); steps];
    let mut step_records = Vec::with_capacity(steps);
    for k in (1..=steps).rev() {
        let references: Vec<StateSet> = (0..targets.len())
            .map(|j| forward[j][k - 1].clone())
            .collect();
        let record = train_step(
            k,
            &inputs,
            &references,
            spec,
            &classes,
            config,
            norm_constant,
            &streams,
        )?;
        inputs = chain_inputs(&inputs, &record.theta, k, spec, &classes, &streams)?;
        thetas[k - 1] = record.theta.clone();
        step_records.push(record);
    }

    let final_train_loss = class_loss(&inputs, targets, config.metric, norm_constant)?;

    let model = DenoiseModel {
        spec: *spec,
        steps,
        thetas,
        classes: classes.clone(),
        metadata: ModelMetadata {
            master_seed: config.master_seed,
            loss_records: None,
            normalization_constant: Some(norm_constant),
        },
    };
    model.validate()?;

    let test_sets: Vec<StateSet> = classes
        .iter()
        .map(|entry| {
            let history = generate(&model, &entry.label, n_per_class, &streams, TEST_PURPOSE)?;
            Ok(history[0].clone())
        })
        .collect::<Result<_>>()?;
    let final_test_loss = class_loss(&test_sets, targets, config.metric, norm_constant)?;

    let record = TrainingRecord {
        master_seed: config.master_seed,
        metric: config.metric,
        norm_constant,
        steps: step_records,
        final_train_loss,
        final_test_loss,
        total_wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((model, record))
}
