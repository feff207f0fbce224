//! Target ensembles: Bloch-sphere rings and point clusters, phased Bell /
//! GHZ / W / product-state families, bitstring superpositions, and
//! transverse-longitudinal-field Ising ground states via dense exact
//! diagonalization.
//!
//! Each family comes as a deterministic single-state constructor (fixed
//! phase or parameters) plus a sampling generator that draws the random
//! parameters from a caller-supplied RNG. Generators return unlabeled
//! [`StateSet`]s; [`ClassSpec::generate`] attaches the class label.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::error::{Error, Result};
use crate::statevec::StateVector;
use crate::stateset::StateSet;

/// Bloch-sphere plane a ring is confined to; named by the axis the ring's
/// Bloch vectors are orthogonal to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingPlane {
    X,
    Y,
    Z,
}

/// One of the six Bloch-sphere poles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleDirection {
    #[serde(rename = "+z")]
    PlusZ,
    #[serde(rename = "-z")]
    MinusZ,
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl std::fmt::Display for PoleDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PoleDirection::PlusZ => "+z",
            PoleDirection::MinusZ => "-z",
            PoleDirection::PlusX => "+x",
            PoleDirection::MinusX => "-x",
            PoleDirection::PlusY => "+y",
            PoleDirection::MinusY => "-y",
        })
    }
}

/// Two-qubit maximally entangled family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    /// `(|00⟩ + e^{iφ}|11⟩)/√2`.
    Phi,
    /// `(|01⟩ + e^{iφ}|10⟩)/√2`.
    Psi,
}

/// Three-qubit entangled family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GhzWKind {
    Ghz3,
    W3,
}

/// The canonical eight 4-bit strings, one per complement pair, used for the
/// bitstring-superposition task.
pub const CANONICAL_GHZ_STRINGS: [&str; 8] = [
    "0000", "0001", "0010", "0100", "1000", "0011", "1001", "0101",
];

fn default_epsilon() -> f64 {
    0.08
}

fn default_g_mean() -> f64 {
    0.5
}

fn default_g_std() -> f64 {
    0.1
}

/// A target family with its per-family parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetFamily {
    PlanarRing {
        plane: RingPlane,
    },
    EquatorRing {
        alpha: f64,
    },
    PolarPoint {
        direction: PoleDirection,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Bell {
        kind: BellKind,
    },
    GhzPhase,
    WPhase,
    ProductPhase {
        qubits: usize,
    },
    GhzString {
        bits: String,
    },
    Tlfim {
        qubits: usize,
        h: f64,
        #[serde(default = "default_g_mean")]
        g_mean: f64,
        #[serde(default = "default_g_std")]
        g_std: f64,
    },
}

impl TargetFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetFamily::PlanarRing { .. }
            | TargetFamily::Bell { .. }
            | TargetFamily::GhzPhase
            | TargetFamily::WPhase => Ok(()),
            TargetFamily::EquatorRing { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0 && *alpha < std::f64::consts::PI) {
                    return Err(Error::InvalidArgument(format!(
                        "equator ring polar angle must lie strictly between 0 and π, got {alpha}"
                    )));
                }
                Ok(())
            }
            TargetFamily::PolarPoint { epsilon, .. } => {
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "polar cluster spread must be a finite non-negative real, got {epsilon}"
                    )));
                }
                Ok(())
            }
            TargetFamily::ProductPhase { qubits } => {
                if *qubits == 0 || *qubits > 24 {
                    return Err(Error::InvalidArgument(format!(
                        "product-phase family needs 1..=24 qubits, got {qubits}"
                    )));
                }
                Ok(())
            }
            TargetFamily::GhzString { bits } => {
                if bits.is_empty() || bits.len() > 24 || !bits.bytes().all(|b| b == b'0' || b == b'1')
                {
                    return Err(Error::InvalidArgument(format!(
                        "bitstring '{bits}' must be a non-empty binary string of at most 24 bits"
                    )));
                }
                Ok(())
            }
            TargetFamily::Tlfim {
                qubits,
                h,
                g_mean,
                g_std,
            } => {
                if *qubits < 2 || *qubits > 10 {
                    return Err(Error::InvalidArgument(format!(
                        "dense Ising diagonalization supports 2..=10 qubits, got {qubits}"
                    )));
                }
                if !h.is_finite() || !g_mean.is_finite() || !(g_std.is_finite() && *g_std >= 0.0) {
                    return Err(Error::InvalidArgument(
                        "Ising field parameters must be finite (g spread non-negative)".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            TargetFamily::PlanarRing { .. }
            | TargetFamily::EquatorRing { .. }
            | TargetFamily::PolarPoint { .. } => 1,
            TargetFamily::Bell { .. } => 2,
            TargetFamily::GhzPhase | TargetFamily::WPhase => 3,
            TargetFamily::ProductPhase { qubits } => *qubits,
            TargetFamily::GhzString { bits } => bits.len(),
            TargetFamily::Tlfim { qubits, .. } => *qubits,
        }
    }
}

/// One class of a generation task: a family plus sample count and label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    #[serde(flatten)]
    pub family: TargetFamily,
    pub samples: usize,
}

impl ClassSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument(format!(
                "class '{}' needs at least one sample",
                self.label
            )));
        }
        if self.label.is_empty() {
            return Err(Error::InvalidArgument("class label must be non-empty".into()));
        }
        self.family.validate()
    }

    pub fn num_qubits(&self) -> usize {
        self.family.num_qubits()
    }

    /// Draws this class's target set with its label attached.
    pub fn generate(&self, rng: &mut impl Rng) -> Result<StateSet> {
        self.validate()?;
        let set = match &self.family {
            TargetFamily::PlanarRing { plane } => planar_ring(*plane, self.samples, rng)?,
            TargetFamily::EquatorRing { alpha } => equator_ring(*alpha, self.samples, rng)?,
            TargetFamily::PolarPoint { direction, epsilon } => {
                polar_cluster(*direction, *epsilon, self.samples, rng)?
            }
            TargetFamily::Bell { kind } => bell_class(*kind, self.samples, rng)?,
            TargetFamily::GhzPhase => ghz_w_class(GhzWKind::Ghz3, self.samples, rng)?,
            TargetFamily::WPhase => ghz_w_class(GhzWKind::W3, self.samples, rng)?,
            TargetFamily::ProductPhase { qubits } => {
                product_phase_class(*qubits, self.samples, rng)?
            }
            TargetFamily::GhzString { bits } => ghz_string_class(bits, self.samples, rng)?,
            TargetFamily::Tlfim {
                qubits,
                h,
                g_mean,
                g_std,
            } => tlfim_class(*qubits, *h, *g_mean, *g_std, self.samples, rng)?,
        };
        Ok(set.labeled(&self.label))
    }
}

fn phase(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0.0..TAU)
}

fn collect_set(n: usize, state_at: impl Fn(f64) -> StateVector, rng: &mut impl Rng) -> Result<StateSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot generate an empty state set".into()));
    }
    StateSet::new((0..n).map(|_| state_at(phase(rng))).collect())
}

/// The ring state at azimuthal parameter `phi` in the given plane:
/// `x`: `cos φ|0⟩ − i sin φ|1⟩`; `y`: `cos φ|0⟩ + sin φ|1⟩`;
/// `z`: `(|0⟩ + e^{−iφ}|1⟩)/√2`.
pub fn planar_ring_state(plane: RingPlane, phi: f64) -> StateVector {
    let amps = match plane {
        RingPlane::X => vec![
            Complex64::new(phi.cos(), 0.0),
            Complex64::new(0.0, -phi.sin()),
        ],
        RingPlane::Y => vec![
            Complex64::new(phi.cos(), 0.0),
            Complex64::new(phi.sin(), 0.0),
        ],
        RingPlane::Z => vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::from_polar(FRAC_1_SQRT_2, -phi),
        ],
    };
    StateVector::from_amplitudes(amps).expect("ring states are unit norm by construction")
}

/// Samples a great-circle ring of single-qubit states, `φ ~ U(0, 2π)`.
pub fn planar_ring(plane: RingPlane, n: usize, rng: &mut impl Rng) -> Result<StateSet> {
    collect_set(n, |phi| planar_ring_state(plane, phi), rng)
}

/// `cos(α/2)|0⟩ + e^{iφ} sin(α/2)|1⟩`: a ring at constant latitude.
pub fn equator_ring_state(alpha: f64, phi: f64) -> StateVector {
    let half = 0.5 * alpha;
    StateVector::from_amplitudes(vec![
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), phi),
    ])
    .expect("latitude ring states are unit norm by construction")
}

/// Samples a constant-latitude ring at polar angle `alpha ∈ (0, π)`.
pub fn equator_ring(alpha: f64, n: usize, rng: &mut impl Rng) -> Result<StateSet> {
    TargetFamily::EquatorRing { alpha }.validate()?;
    collect_set(n, |phi| equator_ring_state(alpha, phi), rng)
}

/// Latitude angles for `num_classes` stacked rings: `α_j = jπ/(C+1)`,
/// `j = 1..=C`.
pub fn equator_class_angles(num_classes: usize) -> Result<Vec<f64>> {
    if num_classes == 0 {
        return Err(Error::InvalidArgument("need at least one ring class".into()));
    }
    Ok((1..=num_classes)
        .map(|j| j as f64 * std::f64::consts::PI / (num_classes + 1) as f64)
        .collect())
}

/// The pole state and its antipodal partner, as amplitude pairs.
fn pole_pair(direction: PoleDirection) -> ([Complex64; 2], [Complex64; 2]) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i_r = Complex64::new(0.0, FRAC_1_SQRT_2);
    let plus_z = [one, zero];
    let minus_z = [zero, one];
    let plus_x = [r, r];
    let minus_x = [r, -r];
    let plus_y = [r, i_r];
    let minus_y = [r, -i_r];
    match direction {
        PoleDirection::PlusZ => (plus_z, minus_z),
        PoleDirection::MinusZ => (minus_z, plus_z),
        PoleDirection::PlusX => (plus_x, minus_x),
        PoleDirection::MinusX => (minus_x, plus_x),
        PoleDirection::PlusY => (plus_y, minus_y),
        PoleDirection::MinusY => (minus_y, plus_y),
    }
}

/// The exact single-qubit pole state.
pub fn pole_state(direction: PoleDirection) -> StateVector {
    let (pole, _) = pole_pair(direction);
    StateVector::from_amplitudes(pole.to_vec()).expect("pole states are unit norm")
}

/// The class ordering that assigns conditioning angle `μ_j = jπ/3` to the
/// six poles.
pub const POLAR_DIRECTION_ORDER: [PoleDirection; 6] = [
    PoleDirection::PlusZ,
    PoleDirection::PlusY,
    PoleDirection::MinusZ,
    PoleDirection::MinusY,
    PoleDirection::PlusX,
    PoleDirection::MinusX,
];

/// Samples a cluster around a pole: `(|pole⟩ + ε·c|antipode⟩)` renormalized,
/// with `Re c, Im c` i.i.d. standard normal. `epsilon = 0` reproduces the
/// pole exactly.
pub fn polar_cluster(
    direction: PoleDirection,
    epsilon: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Result<StateSet> {
    TargetFamily::PolarPoint { direction, epsilon }.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("cannot generate an empty state set".into()));
    }
    let (pole, partner) = pole_pair(direction);
    StateSet::new(
        (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let c = Complex64::new(re, im) * epsilon;
                let norm = (1.0 + c.norm_sqr()).sqrt();
                let amps = vec![(pole[0] + c * partner[0]) / norm, (pole[1] + c * partner[1]) / norm];
                StateVector::from_amplitudes(amps).expect("renormalized cluster state is unit norm")
            })
            .collect(),
    )
}

/// The phased two-qubit entangled state of the given kind.
pub fn bell_state(kind: BellKind, phi: f64) -> StateVector {
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let p = Complex64::from_polar(FRAC_1_SQRT_2, phi);
    let zero = Complex64::new(0.0, 0.0);
    let amps = match kind {
        BellKind::Phi => vec![r, zero, zero, p],
        BellKind::Psi => vec![zero, r, p, zero],
    };
    StateVector::from_amplitudes(amps).expect("phased Bell states are unit norm")
}

/// Samples a phased Bell family, `φ ~ U(0, 2π)`.
pub fn bell_class(kind: BellKind, n: usize, rng: &mut impl Rng) -> Result<StateSet> {
    collect_set(n, |phi| bell_state(kind, phi), rng)
}

/// `(|000⟩ + e^{iφ}|111⟩)/√2` or `(|001⟩ + |010⟩ + e^{iφ}|100⟩)/√3`.
pub fn ghz_w_state(kind: GhzWKind, phi: f64) -> StateVector {
    let zero = Complex64::new(0.0, 0.0);
    let amps = match kind {
        GhzWKind::Ghz3 => {
            let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let p = Complex64::from_polar(FRAC_1_SQRT_2, phi);
            vec![r, zero, zero, zero, zero, zero, zero, p]
        }
        GhzWKind::W3 => {
            let r = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
            let p = Complex64::from_polar(1.0 / 3f64.sqrt(), phi);
            vec![zero, r, r, zero, p, zero, zero, zero]
        }
    };
    StateVector::from_amplitudes(amps).expect("phased three-qubit states are unit norm")
}

/// Samples a phased GHZ or W family, `φ ~ U(0, 2π)`.
pub fn ghz_w_class(kind: GhzWKind, n: usize, rng: &mut impl Rng) -> Result<StateSet> {
    collect_set(n, |phi| ghz_w_state(kind, phi), rng)
}

/// `((|0⟩ + e^{iφ}|1⟩)/√2)^{⊗ n}`: basis state `x` carries phase
/// `φ · popcount(x)`.
pub fn product_phase_state(qubits: usize, phi: f64) -> Result<StateVector> {
    TargetFamily::ProductPhase { qubits }.validate()?;
    let dim = 1usize << qubits;
    let scale = 1.0 / (dim as f64).sqrt();
    let amps = (0..dim)
        .map(|x| Complex64::from_polar(scale, phi * x.count_ones() as f64))
        .collect();
    StateVector::from_amplitudes(amps)
}

/// Samples the phased product family.
pub fn product_phase_class(qubits: usize, n: usize, rng: &mut impl Rng) -> Result<StateSet> {
    TargetFamily::ProductPhase { qubits }.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("cannot generate an empty state set".into()));
    }
    StateSet::new(
        (0..n)
            .map(|_| product_phase_state(qubits, phase(rng)).expect("validated above"))
            .collect(),
    )
}

/// `(|x⟩ + e^{iφ}|x̄⟩)/√2` for a binary string `x`; `x̄` is the bitwise
/// complement, which always differs from `x`.
pub fn ghz_string_state(bits: &str, phi: f64) -> Result<StateVector> {
    TargetFamily::GhzString { bits: bits.into() }.validate()?;
    let n = bits.len();
    let dim = 1usize << n;
    let index = usize::from_str_radix(bits, 2).expect("validated binary string");
    let complement = !index & (dim - 1);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[index] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[complement] = Complex64::from_polar(FRAC_1_SQRT_2, phi);
    StateVector::from_amplitudes(amps)
}

/// Samples the bitstring-superposition family.
pub fn ghz_string_class(bits: &str, n: usize, rng: &mut impl Rng) -> Result<StateSet> {
    TargetFamily::GhzString { bits: bits.into() }.validate()?;
    collect_set(n, |phi| ghz_string_state(bits, phi).expect("validated above"), rng)
}

/// Periodic-chain Ising Hamiltonian with transverse field `g` and
/// longitudinal field `h`, coupling 1:
/// `H = −Σ_i Z_i Z_{i+1} − g Σ_i X_i − h Σ_i Z_i` (indices mod `n`).
///
/// In the computational basis this operator is real symmetric, so it is
/// stored as a dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingChain {
    n: usize,
    g: f64,
    h: f64,
    matrix: DMatrix<f64>,
}

impl IsingChain {
    pub fn new(n: usize, g: f64, h: f64) -> Result<Self> {
        TargetFamily::Tlfim {
            qubits: n,
            h,
            g_mean: g,
            g_std: 0.0,
        }
        .validate()?;
        let dim = 1usize << n;
        let mut matrix = DMatrix::<f64>::zeros(dim, dim);
        for x in 0..dim {
            // Spin sign of qubit i (MSB first): +1 for bit 0, -1 for bit 1.
            let spin = |i: usize| -> f64 {
                if x >> (n - 1 - i) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            let mut diag = 0.0;
            for i in 0..n {
                diag -= spin(i) * spin((i + 1) % n);
                diag -= h * spin(i);
                let flipped = x ^ (1 << (n - 1 - i));
                matrix[(x, flipped)] -= g;
            }
            matrix[(x, x)] = diag;
        }
        Ok(Self { n, g, h, matrix })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn transverse_field(&self) -> f64 {
        self.g
    }

    pub fn longitudinal_field(&self) -> f64 {
        self.h
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `⟨ψ|H|ψ⟩`; the imaginary part vanishes for a Hermitian operator and
    /// is checked against 1e-10.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let dim = 1usize << self.n;
        if state.dimension() != dim {
            return Err(Error::InvalidArgument(format!(
                "state dimension {} does not match operator dimension {dim}",
                state.dimension()
            )));
        }
        let amps = state.amplitudes();
        let mut value = Complex64::new(0.0, 0.0);
        for x in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for y in 0..dim {
                let entry = self.matrix[(x, y)];
                if entry != 0.0 {
                    row += entry * amps[y];
                }
            }
            value += amps[x].conj() * row;
        }
        if value.im.abs() > 1e-10 {
            return Err(Error::Numeric(format!(
                "energy expectation has non-real part {}",
                value.im
            )));
        }
        Ok(value.re)
    }

    /// Ground energy and unit-norm ground state. Fails when the two lowest
    /// eigenvalues are closer than 1e-10 (no well-defined ground state) or
    /// the eigenpair residual exceeds 1e-9.
    pub fn ground(&self) -> Result<(f64, StateVector)> {
        let eigen = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[a]
                .partial_cmp(&eigen.eigenvalues[b])
                .expect("eigenvalues of a real symmetric matrix are finite")
        });
        let lowest = order[0];
        let second = order[1];
        let e0 = eigen.eigenvalues[lowest];
        let e1 = eigen.eigenvalues[second];
        if e1 - e0 < 1e-10 {
            return Err(Error::DegenerateGroundSpace(format!(
                "two lowest eigenvalues {e0} and {e1} are degenerate within 1e-10 \
                 (gap {:.3e})",
                e1 - e0
            )));
        }
        let column = eigen.eigenvectors.column(lowest);
        let norm = column.norm();
        let residual = (&self.matrix * column - e0 * column).norm();
        if residual > 1e-9 {
            return Err(Error::Numeric(format!(
                "ground eigenpair residual {residual:.3e} exceeds 1e-9"
            )));
        }
        let amps = column.iter().map(|&v| Complex64::new(v / norm, 0.0)).collect();
        Ok((e0, StateVector::from_amplitudes(amps)?))
    }
}

/// Ground state of the periodic Ising chain at `(g, h)`.
pub fn tlfim_ground(n: usize, g: f64, h: f64) -> Result<StateVector> {
    Ok(IsingChain::new(n, g, h)?.ground()?.1)
}

/// Samples ground states with the transverse field drawn from
/// `Normal(g_mean, g_std)`, redrawing non-positive values so the chain
/// stays in the intended field regime.
pub fn tlfim_class(
    n: usize,
    h: f64,
    g_mean: f64,
    g_std: f64,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<StateSet> {
    TargetFamily::Tlfim {
        qubits: n,
        h,
        g_mean,
        g_std,
    }
    .validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("cannot generate an empty state set".into()));
    }
    let gs: Vec<f64> = (0..n_samples)
        .map(|_| loop {
            let g = g_mean + g_std * rng.sample::<f64, _>(StandardNormal);
            if g > 0.0 {
                break g;
            }
        })
        .collect();
    let states = gs
        .into_par_iter()
        .map(|g| tlfim_ground(n, g, h))
        .collect::<Result<Vec<_>>>()?;
    StateSet::new(states)
}
