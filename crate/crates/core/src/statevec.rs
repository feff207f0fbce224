//! Dense statevector simulator.
//!
//! States live in the computational basis with **qubit 0 as the most
//! significant bit** of the amplitude index: for `q` qubits, basis index
//! `i` assigns qubit `k` the bit `(i >> (q - 1 - k)) & 1`. Ancilla qubits
//! are always appended after the system qubits, i.e. at the least
//! significant bit positions.
//!
//! Gate conventions:
//!
//! * `RX(θ) = [[cos θ/2, -i sin θ/2], [-i sin θ/2, cos θ/2]]`
//! * `RY(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`
//! * `RZ(θ) = diag(e^{-iθ/2}, e^{+iθ/2})`
//! * `RZZ(θ)` multiplies even-parity basis states by `e^{-iθ/2}` and
//!   odd-parity ones by `e^{+iθ/2}`
//! * `CZ` flips the sign of `|11⟩`
//!
//! Global phases are physical here: nothing strips them, and equality-style
//! comparisons in callers must decide for themselves whether phase matters.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Pauli axis, used both for rotations and for expectation values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// How an appended ancilla register is prepared, one single-qubit state
/// tensored across all ancillas (or one computational basis state).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AncillaInit {
    /// `(RX(μ)|0⟩)^{⊗ n_a}`
    Rx(f64),
    /// `(RY(μ)|0⟩)^{⊗ n_a}`
    Ry(f64),
    /// `(RZ(μ)|0⟩)^{⊗ n_a}` is `|0…0⟩` up to the global phase
    /// `e^{-i n_a μ/2}`; the phase is state-independent and dropped, so this
    /// preparation is bitwise identical for every `μ`.
    Rz(f64),
    /// The computational basis state with this index (bits in ancilla order,
    /// first ancilla most significant).
    Basis(usize),
}

/// Result of measuring (and discarding) an ancilla register.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    /// Measured basis index over the ancilla register (first ancilla is the
    /// most significant bit).
    pub outcome: usize,
    /// Number of ancilla qubits measured.
    pub num_bits: usize,
    /// Born probability of this outcome at measurement time.
    pub probability: f64,
}

impl MeasurementRecord {
    /// Outcome rendered as a bitstring, first ancilla first.
    pub fn bitstring(&self) -> String {
        (0..self.num_bits)
            .map(|k| {
                if self.outcome >> (self.num_bits - 1 - k) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

/// How to resolve an ancilla measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureMode {
    /// Sample one outcome from the Born distribution.
    Born,
    /// Project on the all-zeros outcome (errors if its probability is
    /// numerically zero).
    PostselectZero,
    /// Keep every outcome with its probability as a weighted branch set.
    ExactBranches,
}

/// Outcome of [`StateVector::measure_discard_ancilla`].
#[derive(Clone, Debug)]
pub enum MeasureOutcome {
    Single(StateVector, MeasurementRecord),
    Branches(Vec<(StateVector, MeasurementRecord)>),
}

/// Bloch-sphere projection of a state onto a chosen two-dimensional
/// computational subspace (see [`StateVector::bloch_projection`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochProjection {
    /// Probability weight carried by the two basis states.
    pub weight: f64,
    /// `(x, y, z)` of the renormalized in-subspace component; `None` when the
    /// weight is numerically zero and the direction is undefined.
    pub coords: Option<[f64; 3]>,
}

/// Branch probabilities below this are dropped by exact-branch measurement.
const BRANCH_EPSILON: f64 = 1e-14;
/// Postselection aborts when the kept outcome has less probability than this.
const POSTSELECT_EPSILON: f64 = 1e-12;
/// Subspace weights below this make a Bloch projection direction undefined.
const PROJECTION_EPSILON: f64 = 1e-12;
/// Allowed deviation of the squared norm from 1 for externally supplied
/// amplitude vectors.
const NORM_TOLERANCE: f64 = 1e-9;

/// A pure state of `num_qubits` qubits as a dense amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::computational_basis(num_qubits, 0)
    }

    /// The computational basis state with the given amplitude index.
    pub fn computational_basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = Self::dimension_of(num_qubits)?;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the vector must already be normalized (within `1e-9` on the
    /// squared norm); amplitudes are taken verbatim, so serialization
    /// round-trips are bit-exact.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || dim & (dim - 1) != 0 {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "state must have at least one qubit".into(),
            ));
        }
        let state = Self { num_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector has squared norm {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// A Haar-random pure state: i.i.d. complex standard normal amplitudes,
    /// normalized. Draws `2 * 2^q` normals from `rng` in index order.
    pub fn haar_random(num_qubits: usize, rng: &mut impl Rng) -> Result<Self> {
        let dim = Self::dimension_of(num_qubits)?;
        let mut amps = Vec::with_capacity(dim);
        let mut norm = 0.0;
        for _ in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            norm += re * re + im * im;
            amps.push(Complex64::new(re, im));
        }
        if norm < 1e-300 {
            return Err(Error::Numeric(
                "degenerate Haar draw with zero norm".into(),
            ));
        }
        let scale = 1.0 / norm.sqrt();
        for amp in &mut amps {
            *amp *= scale;
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dimension(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn dimension_of(num_qubits: usize) -> Result<usize> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "state must have at least one qubit".into(),
            ));
        }
        if num_qubits > 24 {
            return Err(Error::InvalidArgument(format!(
                "{num_qubits} qubits exceeds the dense simulator limit of 24"
            )));
        }
        Ok(1usize << num_qubits)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Bit mask selecting `qubit` inside an amplitude index.
    fn bit(&self, qubit: usize) -> usize {
        1usize << (self.num_qubits - 1 - qubit)
    }

    fn apply_single_qubit(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let step = self.bit(qubit);
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for offset in 0..step {
                let i = base + offset;
                let j = i + step;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
            base += 2 * step;
        }
    }

    /// Rotation `exp(-i θ P / 2)` about the given Pauli axis on one qubit.
    pub fn rotate(&mut self, axis: Pauli, angle: f64, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let half = angle / 2.0;
        let (sin, cos) = half.sin_cos();
        match axis {
            Pauli::X => {
                let c = Complex64::new(cos, 0.0);
                let s = Complex64::new(0.0, -sin);
                self.apply_single_qubit(qubit, [[c, s], [s, c]]);
            }
            Pauli::Y => {
                let c = Complex64::new(cos, 0.0);
                let s = Complex64::new(sin, 0.0);
                self.apply_single_qubit(qubit, [[c, -s], [s, c]]);
            }
            Pauli::Z => {
                let phase0 = Complex64::new(cos, -sin);
                let phase1 = Complex64::new(cos, sin);
                let mask = self.bit(qubit);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if i & mask == 0 { phase0 } else { phase1 };
                }
            }
        }
        Ok(())
    }

    /// Two-qubit `exp(-i θ Z⊗Z / 2)`: even-parity components gain
    /// `e^{-iθ/2}`, odd-parity ones `e^{+iθ/2}`.
    pub fn rzz(&mut self, angle: f64, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "rzz needs two distinct qubits, got {a} twice"
            )));
        }
        let half = angle / 2.0;
        let (sin, cos) = half.sin_cos();
        let even = Complex64::new(cos, -sin);
        let odd = Complex64::new(cos, sin);
        let mask_a = self.bit(a);
        let mask_b = self.bit(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let parity = ((i & mask_a != 0) as u8) ^ ((i & mask_b != 0) as u8);
            *amp *= if parity == 0 { even } else { odd };
        }
        Ok(())
    }

    /// Controlled-Z between two qubits.
    pub fn cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "cz needs two distinct qubits, got {a} twice"
            )));
        }
        let mask = self.bit(a) | self.bit(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "fidelity between {} and {} qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        let mut overlap = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(&other.amps) {
            overlap += a.conj() * b;
        }
        Ok(overlap.norm_sqr())
    }

    /// Expectation value of a product of Pauli operators on distinct qubits.
    /// The empty product is the identity and yields exactly 1.
    pub fn pauli_expectation(&self, ops: &[(usize, Pauli)]) -> Result<f64> {
        if ops.is_empty() {
            return Ok(1.0);
        }
        let mut seen = 0usize;
        let mut flip = 0usize;
        let mut z_mask = 0usize;
        let mut y_mask = 0usize;
        for &(qubit, pauli) in ops {
            self.check_qubit(qubit)?;
            let bit = self.bit(qubit);
            if seen & bit != 0 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate qubit {qubit} in Pauli product"
                )));
            }
            seen |= bit;
            match pauli {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    y_mask |= bit;
                }
                Pauli::Z => z_mask |= bit,
            }
        }
        // P|x⟩ = phase(x) |x ^ flip⟩ with phase(x) = i^{#Y} · (-1)^{Y∩x} ·
        // (-1)^{Z∩x}; accumulate ⟨ψ|P|ψ⟩ = Σ_x conj(ψ[x^flip]) phase(x) ψ[x].
        let y_count = y_mask.count_ones() as usize;
        let i_power = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][y_count % 4];
        let mut sum = Complex64::new(0.0, 0.0);
        for (x, amp) in self.amps.iter().enumerate() {
            let signs = ((x & y_mask).count_ones() + (x & z_mask).count_ones()) as usize;
            let mut term = self.amps[x ^ flip].conj() * amp * i_power;
            if signs % 2 == 1 {
                term = -term;
            }
            sum += term;
        }
        Ok(sum.re)
    }

    /// Appends `n_a` ancilla qubits, prepared per `init`, after the system
    /// qubits (least significant index bits).
    pub fn append_conditioned_ancilla(&self, n_a: usize, init: AncillaInit) -> Result<StateVector> {
        if n_a == 0 {
            return match init {
                AncillaInit::Basis(index) if index > 0 => Err(Error::InvalidArgument(format!(
                    "ancilla basis index {index} out of range for 0 ancilla qubits"
                ))),
                _ => Ok(self.clone()),
            };
        }
        let total = self.num_qubits + n_a;
        Self::dimension_of(total)?;
        let anc_dim = 1usize << n_a;
        let mut anc = vec![Complex64::new(0.0, 0.0); anc_dim];
        match init {
            AncillaInit::Basis(index) => {
                if index >= anc_dim {
                    return Err(Error::InvalidArgument(format!(
                        "ancilla basis index {index} out of range for {n_a} ancilla qubits"
                    )));
                }
                anc[index] = Complex64::new(1.0, 0.0);
            }
            AncillaInit::Rz(_) => {
                anc[0] = Complex64::new(1.0, 0.0);
            }
            AncillaInit::Rx(mu) | AncillaInit::Ry(mu) => {
                let half = mu / 2.0;
                let (sin, cos) = half.sin_cos();
                let single = match init {
                    AncillaInit::Rx(_) => [Complex64::new(cos, 0.0), Complex64::new(0.0, -sin)],
                    _ => [Complex64::new(cos, 0.0), Complex64::new(sin, 0.0)],
                };
                for (b, slot) in anc.iter_mut().enumerate() {
                    let mut value = Complex64::new(1.0, 0.0);
                    for k in 0..n_a {
                        value *= single[b >> (n_a - 1 - k) & 1];
                    }
                    *slot = value;
                }
            }
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() << n_a];
        for (sys, &sys_amp) in self.amps.iter().enumerate() {
            let base = sys << n_a;
            for (b, &anc_amp) in anc.iter().enumerate() {
                amps[base | b] = sys_amp * anc_amp;
            }
        }
        Ok(StateVector {
            num_qubits: total,
            amps,
        })
    }

    /// Born probabilities of the `2^{n_a}` outcomes on the trailing ancilla
    /// register.
    pub fn ancilla_probabilities(&self, n_a: usize) -> Result<Vec<f64>> {
        if n_a == 0 || n_a >= self.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "cannot measure {n_a} trailing ancillas of a {} qubit state",
                self.num_qubits
            )));
        }
        let anc_dim = 1usize << n_a;
        let mut probs = vec![0.0; anc_dim];
        for (i, amp) in self.amps.iter().enumerate() {
            probs[i & (anc_dim - 1)] += amp.norm_sqr();
        }
        Ok(probs)
    }

    fn collapse_ancilla(&self, n_a: usize, outcome: usize, probability: f64) -> StateVector {
        let anc_dim = 1usize << n_a;
        let scale = 1.0 / probability.sqrt();
        let amps: Vec<Complex64> = self
            .amps
            .chunks_exact(anc_dim)
            .map(|chunk| chunk[outcome] * scale)
            .collect();
        StateVector {
            num_qubits: self.num_qubits - n_a,
            amps,
        }
    }

    /// Projectively measures the trailing `n_a` ancilla qubits in the
    /// computational basis and discards them.
    ///
    /// * [`MeasureMode::Born`] draws one outcome (consuming one uniform
    ///   variate from `rng`) and returns the collapsed system state.
    /// * [`MeasureMode::PostselectZero`] keeps the all-zeros outcome, erring
    ///   with a degenerate-branch condition when its probability is below
    ///   `1e-12`.
    /// * [`MeasureMode::ExactBranches`] returns every outcome with
    ///   probability above `1e-14`, each collapsed and renormalized.
    pub fn measure_discard_ancilla(
        &self,
        n_a: usize,
        mode: MeasureMode,
        rng: &mut impl Rng,
    ) -> Result<MeasureOutcome> {
        let probs = self.ancilla_probabilities(n_a)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numeric(format!(
                "measurement on non-normalized state: outcome probabilities sum to {total}"
            )));
        }
        match mode {
            MeasureMode::Born => {
                let draw: f64 = rng.gen();
                let mut cumulative = 0.0;
                let mut outcome = probs.len() - 1;
                for (b, &p) in probs.iter().enumerate() {
                    cumulative += p;
                    if draw < cumulative {
                        outcome = b;
                        break;
                    }
                }
                // Guard against landing on a zero-probability tail bin when
                // the cumulative sum falls just short of 1.
                while probs[outcome] <= 0.0 && outcome > 0 {
                    outcome -= 1;
                }
                let probability = probs[outcome];
                if probability <= 0.0 {
                    return Err(Error::DegenerateBranch(
                        "all ancilla outcomes have zero probability".into(),
                    ));
                }
                let state = self.collapse_ancilla(n_a, outcome, probability);
                Ok(MeasureOutcome::Single(
                    state,
                    MeasurementRecord {
                        outcome,
                        num_bits: n_a,
                        probability,
                    },
                ))
            }
            MeasureMode::PostselectZero => {
                let probability = probs[0];
                if probability < POSTSELECT_EPSILON {
                    return Err(Error::DegenerateBranch(format!(
                        "all-zeros ancilla outcome has probability {probability:.3e}"
                    )));
                }
                let state = self.collapse_ancilla(n_a, 0, probability);
                Ok(MeasureOutcome::Single(
                    state,
                    MeasurementRecord {
                        outcome: 0,
                        num_bits: n_a,
                        probability,
                    },
                ))
            }
            MeasureMode::ExactBranches => {
                let mut branches = Vec::new();
                for (outcome, &probability) in probs.iter().enumerate() {
                    if probability < BRANCH_EPSILON {
                        continue;
                    }
                    branches.push((
                        self.collapse_ancilla(n_a, outcome, probability),
                        MeasurementRecord {
                            outcome,
                            num_bits: n_a,
                            probability,
                        },
                    ));
                }
                if branches.is_empty() {
                    return Err(Error::DegenerateBranch(
                        "no ancilla outcome has nonzero probability".into(),
                    ));
                }
                Ok(MeasureOutcome::Branches(branches))
            }
        }
    }

    /// Projects onto the span of two computational basis states and reads the
    /// Bloch coordinates of the renormalized component, treating `basis_a` as
    /// the north pole. Returns the subspace weight; coordinates are `None`
    /// when the weight is numerically zero.
    pub fn bloch_projection(&self, basis_a: usize, basis_b: usize) -> Result<BlochProjection> {
        let dim = self.amps.len();
        if basis_a >= dim || basis_b >= dim {
            return Err(Error::InvalidArgument(format!(
                "projection basis indices ({basis_a}, {basis_b}) out of range for dimension {dim}"
            )));
        }
        if basis_a == basis_b {
            return Err(Error::InvalidArgument(
                "projection basis states must be distinct".into(),
            ));
        }
        let alpha = self.amps[basis_a];
        let beta = self.amps[basis_b];
        let weight = alpha.norm_sqr() + beta.norm_sqr();
        if weight <= PROJECTION_EPSILON {
            return Ok(BlochProjection {
                weight,
                coords: None,
            });
        }
        let cross = alpha.conj() * beta;
        let x = 2.0 * cross.re / weight;
        let y = 2.0 * cross.im / weight;
        let z = (alpha.norm_sqr() - beta.norm_sqr()) / weight;
        Ok(BlochProjection {
            weight,
            coords: Some([x, y, z]),
        })
    }

    /// Bloch coordinates of a single-qubit state.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.num_qubits != 1 {
            return Err(Error::InvalidArgument(format!(
                "bloch_vector needs a single-qubit state, got {} qubits",
                self.num_qubits
            )));
        }
        Ok(self
            .bloch_projection(0, 1)?
            .coords
            .expect("unit norm single-qubit state has weight 1"))
    }
}
