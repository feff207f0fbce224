//! Shared fixtures for the criterion benchmarks: deterministic inputs so
//! benchmark numbers are comparable across runs.

use qdiff_core::ansatz::{AnsatzSpec, Conditioning};
use qdiff_core::statevec::StateVector;
use qdiff_core::stateset::StateSet;
use qdiff_core::Streams;

/// Haar states drawn from a fixed master seed.
pub fn haar_set(qubits: usize, count: usize, seed: u64) -> StateSet {
    let streams = Streams::new(seed);
    StateSet::new(
        (0..count)
            .map(|i| {
                let mut rng = streams.stream("bench-haar", &[i as u64]);
                StateVector::haar_random(qubits, &mut rng).expect("valid qubit count")
            })
            .collect(),
    )
    .expect("non-empty set")
}

/// A mid-sized circuit description used by the gate benchmarks.
pub fn bench_spec() -> AnsatzSpec {
    AnsatzSpec::new(3, 2, 8, Conditioning::Rx).expect("valid spec")
}

/// Deterministic parameter vector of the right length for [`bench_spec`].
pub fn bench_theta(spec: &AnsatzSpec) -> Vec<f64> {
    (0..spec.param_count())
        .map(|i| ((i * 2654435761) % 1000) as f64 / 500.0 - 1.0)
        .collect()
}
