//! Statevector laboratory for conditioned denoising diffusion over sets of
//! pure quantum states.
//!
//! The crate provides the building blocks for a full experiment pipeline:
//!
//! * [`statevec`] — a dense statevector simulator with the rotation,
//!   entangling, conditioning and measure-and-discard primitives used by the
//!   rest of the crate.
//! * [`diffusion`] — forward scrambling of state sets under randomized
//!   circuits with a configurable noise-amplitude schedule.
//! * [`ansatz`] — the hardware-efficient denoising circuit, ancilla
//!   conditioning, and sample generation from a trained model.
//! * [`distances`] — set-to-set divergences (mean pairwise fidelity, an
//!   MMD-style fidelity kernel divergence, and an exact optimal-transport
//!   distance), plus the normalized multi-class loss.
//! * [`datasets`] — generators for the benchmark state families (Bloch-sphere
//!   rings and clusters, Bell/GHZ/W states, product-phase states, and
//!   transverse-plus-longitudinal-field Ising ground states).
//! * [`metrics`] — evaluation quantities: entanglement measures, subspace
//!   overlaps, magnetization statistics and per-class spread tables.
//! * [`train`] — the step-wise trainer: Adam updates driven by stochastic
//!   gradient estimates of the measured loss.
//!
//! Every random draw in the crate flows through [`rng::Streams`], which
//! derives an independent, reproducible stream per (purpose, index) key from
//! a single master seed. Results are therefore bitwise reproducible for a
//! given seed, independent of thread count or scheduling.

pub mod ansatz;
pub mod datasets;
pub mod diffusion;
pub mod distances;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod statevec;
pub mod stateset;
pub mod train;

pub use ansatz::{AnsatzSpec, ClassEntry, Conditioning, DenoiseModel, MeasMode};
pub use datasets::{ClassSpec, TargetFamily};
pub use diffusion::{NoiseSchedule, ScheduleKind};
pub use distances::Metric;
pub use error::{Error, Result};
pub use metrics::MagnetizationDistribution;
pub use rng::{SeedRecord, Streams};
pub use statevec::{Pauli, StateVector};
pub use stateset::StateSet;
pub use train::{GradEstimator, LossMeasMode, TrainerConfig, TrainingRecord};
