//! Evaluation metrics: Meyer-Wallach entanglement, computational-subspace
//! overlap, z-magnetization distributions, and per-class normalized
//! distance tables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distances::Metric;
use crate::error::{Error, Result};
use crate::statevec::{Pauli, StateVector};
use crate::stateset::StateSet;

/// Meyer-Wallach entanglement `Q = (2/n) Σ_i (1 − Tr ρ_i²)` with `ρ_i` the
/// reduced state of qubit `i`. Lies in `[0, 1]`: 0 for product states, 1
/// when every qubit is maximally mixed.
pub fn meyer_wallach(state: &StateVector) -> Result<f64> {
    let n = state.num_qubits();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "entanglement of a zero-qubit state is undefined".into(),
        ));
    }
    let amps = state.amplitudes();
    let dim = amps.len();
    let mut total = 0.0;
    for i in 0..n {
        let mask = 1usize << (n - 1 - i);
        let mut p00 = 0.0;
        let mut p11 = 0.0;
        let mut coherence = Complex64::new(0.0, 0.0);
        for x in 0..dim {
            if x & mask == 0 {
                p00 += amps[x].norm_sqr();
                coherence += amps[x] * amps[x | mask].conj();
            } else {
                p11 += amps[x].norm_sqr();
            }
        }
        let purity = p00 * p00 + p11 * p11 + 2.0 * coherence.norm_sqr();
        total += 1.0 - purity;
    }
    Ok((2.0 / n as f64 * total).clamp(0.0, 1.0))
}

/// Total weight `Σ |c_i|²` carried by the given distinct basis indices.
pub fn subspace_overlap(state: &StateVector, basis_indices: &[usize]) -> Result<f64> {
    if basis_indices.is_empty() {
        return Err(Error::InvalidArgument(
            "subspace overlap needs at least one basis index".into(),
        ));
    }
    let dim = state.dimension();
    let mut seen = vec![false; dim];
    let mut overlap = 0.0;
    for &index in basis_indices {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        if seen[index] {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} listed twice"
            )));
        }
        seen[index] = true;
        overlap += state.amplitudes()[index].norm_sqr();
    }
    Ok(overlap.clamp(0.0, 1.0))
}

/// Distribution of the total z-magnetization `M = Σ_i Z_i` over its
/// eigenvalues `n, n−2, …, −n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationDistribution {
    pub support: Vec<i32>,
    pub probabilities: Vec<f64>,
}

impl MagnetizationDistribution {
    /// `Σ m · p(m)`.
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .map(|(&m, &p)| m as f64 * p)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.len() != self.probabilities.len() {
            return Err(Error::InvalidArgument(
                "magnetization support and probabilities differ in length".into(),
            ));
        }
        if self.probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Numeric("negative magnetization probability".into()));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numeric(format!(
                "magnetization probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// The z-magnetization distribution and its mean. The mean is computed as
/// `Σ_i ⟨Z_i⟩`, which agrees with the eigenvalue-weighted average of the
/// distribution.
pub fn magnetization(state: &StateVector) -> Result<(MagnetizationDistribution, f64)> {
    let n = state.num_qubits();
    let amps = state.amplitudes();
    let mut probabilities = vec![0.0; n + 1];
    for (x, amp) in amps.iter().enumerate() {
        probabilities[x.count_ones() as usize] += amp.norm_sqr();
    }
    let support: Vec<i32> = (0..=n).map(|ones| n as i32 - 2 * ones as i32).collect();
    let mut mean = 0.0;
    for i in 0..n {
        mean += state.pauli_expectation(&[(i, Pauli::Z)])?;
    }
    let dist = MagnetizationDistribution {
        support,
        probabilities,
    };
    dist.validate()?;
    Ok((dist, mean))
}

/// One row of a per-class normalized distance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub label: String,
    /// `D(generated_j, target_j)`.
    pub distance: f64,
    /// `D(reference ensemble, target_j)`.
    pub normalizer: f64,
    /// `100 · distance / normalizer`.
    pub percent: f64,
}

/// Per-class normalized distances as percentages:
/// `100 · D(generated_j, target_j) / D(haar, target_j)`, one row per class,
/// never averaged across classes.
pub fn per_class_spread(
    generated: &[StateSet],
    targets: &[StateSet],
    haar: &StateSet,
    metric: Metric,
) -> Result<Vec<SpreadRow>> {
    if generated.len() != targets.len() || generated.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty class lists, got {} generated vs {} target",
            generated.len(),
            targets.len()
        )));
    }
    let mut rows = Vec::with_capacity(generated.len());
    for (j, (gen, target)) in generated.iter().zip(targets).enumerate() {
        if let (Some(a), Some(b)) = (gen.label(), target.label()) {
            if a != b {
                return Err(Error::InvalidArgument(format!(
                    "class {j} label mismatch: generated '{a}' vs target '{b}'"
                )));
            }
        }
        if gen.len() != target.len() {
            return Err(Error::InvalidArgument(format!(
                "class {j}: generated set has {} states, target has {}",
                gen.len(),
                target.len()
            )));
        }
        let distance = metric.evaluate(gen, target)?;
        let normalizer = metric.evaluate(haar, target)?;
        if normalizer < 1e-12 {
            return Err(Error::DegenerateNormalization(format!(
                "class {j}: reference distance {normalizer:.3e} is numerically zero"
            )));
        }
        let label = target
            .label()
            .or(gen.label())
            .map(str::to_owned)
            .unwrap_or_else(|| format!("class-{j}"));
        rows.push(SpreadRow {
            label,
            distance,
            normalizer,
            percent: 100.0 * distance / normalizer,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{
        bell_state, ghz_string_state, ghz_w_state, product_phase_state, BellKind, GhzWKind,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entanglement_landmarks() {
        let product = product_phase_state(3, 0.9).unwrap();
        assert_abs_diff_eq!(meyer_wallach(&product).unwrap(), 0.0, epsilon = 1e-12);
        let bell = bell_state(BellKind::Phi, 1.3);
        assert_abs_diff_eq!(meyer_wallach(&bell).unwrap(), 1.0, epsilon = 1e-12);
        let w = ghz_w_state(GhzWKind::W3, 0.4);
        assert_abs_diff_eq!(meyer_wallach(&w).unwrap(), 8.0 / 9.0, epsilon = 1e-10);
        let string = ghz_string_state("0101", 2.2).unwrap();
        assert_abs_diff_eq!(meyer_wallach(&string).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn entanglement_phase_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let state = StateVector::haar_random(3, &mut rng).unwrap();
            let q = meyer_wallach(&state).unwrap();
            let mut rotated = state.clone();
            for qubit in 0..3 {
                rotated
                    .rotate(Pauli::Z, rng.gen_range(-3.0..3.0), qubit)
                    .unwrap();
            }
            assert_abs_diff_eq!(meyer_wallach(&rotated).unwrap(), q, epsilon = 1e-10);
        }
    }

    #[test]
    fn overlap_basics() {
        let bell = bell_state(BellKind::Phi, 0.7);
        assert_abs_diff_eq!(subspace_overlap(&bell, &[0, 3]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(subspace_overlap(&bell, &[1, 2]).unwrap(), 0.0, epsilon = 1e-12);
        assert!(subspace_overlap(&bell, &[]).is_err());
        assert!(subspace_overlap(&bell, &[0, 0]).is_err());
        assert!(subspace_overlap(&bell, &[4]).is_err());
    }

    #[test]
    fn overlap_partition_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let state = StateVector::haar_random(3, &mut rng).unwrap();
        let low = subspace_overlap(&state, &[0, 1, 2, 3]).unwrap();
        let high = subspace_overlap(&state, &[4, 5, 6, 7]).unwrap();
        assert_abs_diff_eq!(low + high, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn magnetization_landmarks() {
        let zero = StateVector::computational_basis(4, 0).unwrap();
        let (dist, mean) = magnetization(&zero).unwrap();
        assert_eq!(dist.support, vec![4, 2, 0, -2, -4]);
        assert_abs_diff_eq!(dist.probabilities[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mean, 4.0, epsilon = 1e-12);

        let plus = product_phase_state(4, 0.0).unwrap();
        let (dist, mean) = magnetization(&plus).unwrap();
        let binomial = [1.0, 4.0, 6.0, 4.0, 1.0].map(|w| w / 16.0);
        for (p, expected) in dist.probabilities.iter().zip(binomial) {
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);

        let cat = ghz_string_state("0000", 0.3).unwrap();
        let (dist, mean) = magnetization(&cat).unwrap();
        assert_abs_diff_eq!(dist.probabilities[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.probabilities[4], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn magnetization_means_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let state = StateVector::haar_random(4, &mut rng).unwrap();
            let (dist, mean) = magnetization(&state).unwrap();
            assert_abs_diff_eq!(dist.mean(), mean, epsilon = 1e-10);
        }
    }

    #[test]
    fn spread_table() {
        // A tight polar cluster is far from Haar under the fidelity kernel,
        // so the per-class normalizer is well conditioned.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let target =
            crate::datasets::polar_cluster(crate::datasets::PoleDirection::PlusZ, 0.08, 40, &mut rng)
                .unwrap()
                .labeled("pole");
        let haar = StateSet::new(
            (0..60)
                .map(|_| StateVector::haar_random(1, &mut rng).unwrap())
                .collect(),
        )
        .unwrap();
        let perfect =
            per_class_spread(&[target.clone()], &[target.clone()], &haar, Metric::Mmd).unwrap();
        assert_eq!(perfect.len(), 1);
        assert_eq!(perfect[0].label, "pole");
        assert!(perfect[0].percent.abs() < 1e-9, "{}", perfect[0].percent);

        let haar_gen = StateSet::new(
            (0..40)
                .map(|_| StateVector::haar_random(1, &mut rng).unwrap())
                .collect(),
        )
        .unwrap()
        .labeled("pole");
        let noisy = per_class_spread(&[haar_gen], &[target.clone()], &haar, Metric::Mmd).unwrap();
        assert!(
            noisy[0].percent > 60.0 && noisy[0].percent < 140.0,
            "independent reference draw should sit near 100%, got {}",
            noisy[0].percent
        );

        let mislabeled = target.clone().labeled("other");
        assert!(per_class_spread(&[mislabeled], &[target.clone()], &haar, Metric::Mmd).is_err());
        let short = StateSet::new(target.states()[..10].to_vec())
            .unwrap()
            .labeled("pole");
        assert!(per_class_spread(&[short], &[target], &haar, Metric::Mmd).is_err());
    }
}
