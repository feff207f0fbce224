//! Set-to-set divergences and the normalized multi-class loss.
//!
//! Two divergences are provided over [`StateSet`]s:
//!
//! * [`mmd`] — a maximum-mean-discrepancy style divergence built on the
//!   fidelity kernel: `F̄(A,A) + F̄(B,B) − 2 F̄(A,B)` with `F̄` the
//!   (weighted) mean pairwise fidelity.
//! * [`wasserstein`] — the exact optimal-transport cost with infidelity
//!   ground cost `C_ij = 1 − F(ψ_i, φ_j)`. Equal-size uniform sets route
//!   through a minimum-cost assignment; weighted or ragged sets through a
//!   general balanced transport solver. Both are exact linear-program
//!   optima, not entropic approximations.
//!
//! Class-averaged losses are normalized by the worst-class distance between
//! a fixed Haar sample and the class targets, making losses comparable
//! across tasks and interpretable as a relative error.

mod assignment;
mod transport;

pub use assignment::min_cost_assignment;
pub use transport::min_cost_transport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stateset::StateSet;

/// Which set divergence to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mmd,
    Wass,
}

impl Metric {
    pub fn evaluate(self, a: &StateSet, b: &StateSet) -> Result<f64> {
        match self {
            Metric::Mmd => mmd(a, b),
            Metric::Wass => wasserstein(a, b),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Mmd => "mmd",
            Metric::Wass => "wass",
        })
    }
}

/// Loss normalization constants below this are considered degenerate.
const NORMALIZATION_EPSILON: f64 = 1e-6;
/// MMD values in `(-1e-12, 0)` are rounding noise and snap to zero.
const MMD_CLAMP: f64 = 1e-12;

/// Pairwise infidelities `C_ij = 1 − |⟨ψ_i|φ_j⟩|²`, row-major, clamped into
/// `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn infidelity(a: &StateSet, b: &StateSet) -> Result<Self> {
        check_comparable(a, b)?;
        let rows = a.len();
        let cols = b.len();
        let mut entries = Vec::with_capacity(rows * cols);
        for psi in a.iter() {
            for phi in b.iter() {
                entries.push((1.0 - psi.fidelity(phi)?).clamp(0.0, 1.0));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// An optimal transport plan together with the marginals it satisfies.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }

    /// Largest violation of the marginal constraints (for diagnostics).
    pub fn marginal_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            let sum: f64 = (0..self.cols).map(|j| self.entry(i, j)).sum();
            worst = worst.max((sum - self.row_marginals[i]).abs());
        }
        for j in 0..self.cols {
            let sum: f64 = (0..self.rows).map(|i| self.entry(i, j)).sum();
            worst = worst.max((sum - self.col_marginals[j]).abs());
        }
        worst
    }
}

fn check_comparable(a: &StateSet, b: &StateSet) -> Result<()> {
    if a.num_qubits() != b.num_qubits() {
        return Err(Error::InvalidArgument(format!(
            "comparing sets on {} and {} qubits",
            a.num_qubits(),
            b.num_qubits()
        )));
    }
    Ok(())
}

/// (Weighted) mean fidelity over all cross pairs of the two sets; in `[0, 1]`.
pub fn pairwise_fidelity(a: &StateSet, b: &StateSet) -> Result<f64> {
    check_comparable(a, b)?;
    let mut total = 0.0;
    for (i, psi) in a.iter().enumerate() {
        let wi = a.weight(i);
        if wi == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (j, phi) in b.iter().enumerate() {
            row += b.weight(j) * psi.fidelity(phi)?;
        }
        total += wi * row;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Fidelity-kernel divergence `F̄(A,A) + F̄(B,B) − 2 F̄(A,B)`.
///
/// Exactly zero when `A` and `B` are the same set elementwise; tiny negative
/// rounding residues (above `−1e-12`) are clamped to zero.
pub fn mmd(a: &StateSet, b: &StateSet) -> Result<f64> {
    let value =
        pairwise_fidelity(a, a)? + pairwise_fidelity(b, b)? - 2.0 * pairwise_fidelity(a, b)?;
    if value < 0.0 && value > -MMD_CLAMP {
        return Ok(0.0);
    }
    Ok(value)
}

/// Exact optimal-transport divergence with infidelity ground cost.
pub fn wasserstein(a: &StateSet, b: &StateSet) -> Result<f64> {
    if a.is_uniform() && b.is_uniform() && a.len() == b.len() {
        let cost = CostMatrix::infidelity(a, b)?;
        let (_, total) = min_cost_assignment(cost.entries(), a.len())?;
        Ok(total / a.len() as f64)
    } else {
        wasserstein_with_plan(a, b).map(|(value, _)| value)
    }
}

/// As [`wasserstein`], but always runs the general transport solver and
/// returns the optimal plan.
pub fn wasserstein_with_plan(a: &StateSet, b: &StateSet) -> Result<(f64, TransportPlan)> {
    let cost = CostMatrix::infidelity(a, b)?;
    let supply: Vec<f64> = (0..a.len()).map(|i| a.weight(i)).collect();
    let demand: Vec<f64> = (0..b.len()).map(|j| b.weight(j)).collect();
    let (entries, objective) =
        min_cost_transport(cost.entries(), a.len(), b.len(), &supply, &demand)?;
    Ok((
        objective,
        TransportPlan {
            rows: a.len(),
            cols: b.len(),
            entries,
            row_marginals: supply,
            col_marginals: demand,
        },
    ))
}

/// Worst-class distance between a fixed Haar sample and each class target
/// set: `max_j D(haar, targets_j)`. This is the denominator that turns raw
/// distances into relative errors.
///
/// Errors with a degenerate-normalization condition when the constant falls
/// below `1e-6` (targets indistinguishable from Haar).
pub fn normalization_constant(targets: &[StateSet], haar: &StateSet, metric: Metric) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument(
            "normalization needs at least one target class".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    for target in targets {
        if target.len() != haar.len() {
            return Err(Error::InvalidArgument(format!(
                "Haar sample size {} does not match class size {}",
                haar.len(),
                target.len()
            )));
        }
        worst = worst.max(metric.evaluate(haar, target)?);
    }
    if worst < NORMALIZATION_EPSILON {
        return Err(Error::DegenerateNormalization(format!(
            "normalization constant {worst:.3e} is below {NORMALIZATION_EPSILON:.0e}; \
             targets are indistinguishable from Haar"
        )));
    }
    Ok(worst)
}

/// Mean over classes of the normalized divergence between generated and
/// reference sets: `(1/|C|) Σ_j D(generated_j, references_j) / norm`.
///
/// Classes are matched by position; when both sides carry labels they must
/// agree. Per-class cardinalities must match for uniform sets; explicitly
/// weighted sets (measurement branch ensembles) may differ in size since
/// only their total mass has to balance.
pub fn class_loss(
    generated: &[StateSet],
    references: &[StateSet],
    metric: Metric,
    norm_constant: f64,
) -> Result<f64> {
    if generated.is_empty() || generated.len() != references.len() {
        return Err(Error::InvalidArgument(format!(
            "{} generated classes vs {} reference classes",
            generated.len(),
            references.len()
        )));
    }
    if !(norm_constant.is_finite() && norm_constant > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "normalization constant must be positive, got {norm_constant}"
        )));
    }
    let mut total = 0.0;
    for (gen, reference) in generated.iter().zip(references) {
        if let (Some(gl), Some(rl)) = (gen.label(), reference.label()) {
            if gl != rl {
                return Err(Error::InvalidArgument(format!(
                    "class label mismatch: generated '{gl}' vs reference '{rl}'"
                )));
            }
        }
        if gen.is_uniform() && reference.is_uniform() && gen.len() != reference.len() {
            return Err(Error::InvalidArgument(format!(
                "class cardinality mismatch: {} generated vs {} reference states",
                gen.len(),
                reference.len()
            )));
        }
        total += metric.evaluate(gen, reference)?;
    }
    Ok(total / (generated.len() as f64 * norm_constant))
}
