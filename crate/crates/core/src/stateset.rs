//! Collections of pure states treated as an empirical distribution.

use crate::error::{Error, Result};
use crate::statevec::StateVector;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// A non-empty set of equal-width states, optionally weighted.
///
/// Unweighted sets stand for the uniform distribution over their members;
/// weighted sets carry explicit non-negative probabilities summing to one
/// (within `1e-9`). The optional label names the class the set represents.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSet {
    label: Option<String>,
    num_qubits: usize,
    states: Vec<StateVector>,
    weights: Option<Vec<f64>>,
}

impl StateSet {
    pub fn new(states: Vec<StateVector>) -> Result<Self> {
        let num_qubits = Self::common_width(&states)?;
        Ok(Self {
            label: None,
            num_qubits,
            states,
            weights: None,
        })
    }

    pub fn with_weights(states: Vec<StateVector>, weights: Vec<f64>) -> Result<Self> {
        let num_qubits = Self::common_width(&states)?;
        if weights.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        let mut total = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!("invalid weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            label: None,
            num_qubits,
            states,
            weights: Some(weights),
        })
    }

    fn common_width(states: &[StateVector]) -> Result<usize> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("state set must be non-empty".into()))?;
        let num_qubits = first.num_qubits();
        for state in states {
            if state.num_qubits() != num_qubits {
                return Err(Error::InvalidArgument(format!(
                    "mixed qubit counts in state set: {} and {}",
                    num_qubits,
                    state.num_qubits()
                )));
            }
        }
        Ok(num_qubits)
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = Some(label.into());
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn get(&self, index: usize) -> &StateVector {
        &self.states[index]
    }

    /// Explicit weights, if any; `None` means uniform.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Weight of one member (uniform `1/len` when no explicit weights).
    pub fn weight(&self, index: usize) -> f64 {
        match &self.weights {
            Some(w) => w[index],
            None => 1.0 / self.states.len() as f64,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StateVector> {
        self.states.iter()
    }

    /// Consumes the set, returning its states (dropping weights and label).
    pub fn into_states(self) -> Vec<StateVector> {
        self.states
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn haar_states(n: usize, q: usize, seed: u64) -> Vec<StateVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| StateVector::haar_random(q, &mut rng).unwrap())
            .collect()
    }

    #[test]
    fn rejects_empty_and_mixed_sets() {
        assert!(StateSet::new(Vec::new()).is_err());
        let mut states = haar_states(2, 1, 0);
        states.push(StateVector::zero(2).unwrap());
        assert!(StateSet::new(states).is_err());
    }

    #[test]
    fn uniform_weights_are_implicit() {
        let set = StateSet::new(haar_states(4, 1, 1)).unwrap().labeled("ring");
        assert!(set.is_uniform());
        assert_eq!(set.label(), Some("ring"));
        assert!((set.weight(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn weight_validation() {
        let states = haar_states(3, 1, 2);
        assert!(StateSet::with_weights(states.clone(), vec![0.5, 0.5]).is_err());
        assert!(StateSet::with_weights(states.clone(), vec![0.5, 0.6, 0.1]).is_err());
        assert!(StateSet::with_weights(states.clone(), vec![0.5, -0.1, 0.6]).is_err());
        let ok = StateSet::with_weights(states, vec![0.2, 0.3, 0.5]).unwrap();
        assert!(!ok.is_uniform());
        assert_eq!(ok.weights().unwrap().len(), 3);
    }
}
