//! Dense statevector simulation.
//!
//! A [`StateVector`] holds 2^n complex amplitudes in little-endian order:
//! qubit 0 is the least significant bit of the basis-state index. Bitstring
//! keys produced by sampling render qubit 0 as the rightmost character.
//!
//! All operations are pure functions of their inputs plus an explicit seed.
//! [`StateVector::sample_counts`] derives one sub-seed per shot (see
//! [`crate::seed`]) so that the noise engine's per-shot trajectory sampler is
//! bit-identical to it in the zero-noise limit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_for};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A single gate application. Rotation variants carry an angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H { qubit: usize },
    S { qubit: usize },
    X { qubit: usize },
    Y { qubit: usize },
    Z { qubit: usize },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    /// Qubits touched by this gate, in (control, target) order for CNOT.
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            GateOp::Rx { qubit, .. }
            | GateOp::Ry { qubit, .. }
            | GateOp::Rz { qubit, .. }
            | GateOp::H { qubit }
            | GateOp::S { qubit }
            | GateOp::X { qubit }
            | GateOp::Y { qubit }
            | GateOp::Z { qubit } => (qubit, None),
            GateOp::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, GateOp::Cnot { .. })
    }

    /// Highest qubit index referenced.
    pub fn max_qubit(&self) -> usize {
        let (a, b) = self.qubits();
        b.map_or(a, |b| a.max(b))
    }

    /// The same gate with its rotation angle shifted; non-rotations are
    /// returned unchanged.
    pub fn with_angle_offset(&self, offset: f64) -> GateOp {
        match *self {
            GateOp::Rx { qubit, angle } => GateOp::Rx { qubit, angle: angle + offset },
            GateOp::Ry { qubit, angle } => GateOp::Ry { qubit, angle: angle + offset },
            GateOp::Rz { qubit, angle } => GateOp::Rz { qubit, angle: angle + offset },
            other => other,
        }
    }
}

/// Render an outcome index over `n_bits` measured qubits as a bitstring.
/// Bit 0 (the first measured qubit) is the rightmost character.
pub fn bitstring(outcome: u64, n_bits: usize) -> String {
    (0..n_bits)
        .rev()
        .map(|b| if outcome >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Inverse of [`bitstring`].
pub fn outcome_index(bits: &str) -> Result<u64> {
    if bits.is_empty() || bits.len() > 64 {
        return Err(Error::Validation(format!(
            "bitstring length {} out of range",
            bits.len()
        )));
    }
    let mut idx = 0u64;
    for (pos, ch) in bits.chars().rev().enumerate() {
        match ch {
            '0' => {}
            '1' => idx |= 1 << pos,
            other => {
                return Err(Error::Validation(format!(
                    "invalid bitstring character {other:?}"
                )))
            }
        }
    }
    Ok(idx)
}

/// Outcome weights over a set of measured qubits.
///
/// One structure serves three stages of the pipeline: integer shot counts
/// (`total_shots > 0`), analytic probabilities (`total_shots == 0`
/// sentinel), and — after mitigation — signed quasi-probability weights held
/// by [`crate::mitigate::QuasiDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct CountsDistribution {
    n_measured: usize,
    entries: BTreeMap<String, f64>,
    total_shots: u64,
}

impl CountsDistribution {
    /// Build from a dense per-outcome count vector (length 2^n_measured).
    pub fn from_outcome_counts(n_measured: usize, counts: &[u64], total_shots: u64) -> Self {
        let entries = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring(i as u64, n_measured), c as f64))
            .collect();
        CountsDistribution {
            n_measured,
            entries,
            total_shots,
        }
    }

    /// Build from a dense probability vector; zero entries are dropped.
    pub fn from_outcome_probs(n_measured: usize, probs: &[f64]) -> Self {
        let entries = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (bitstring(i as u64, n_measured), p))
            .collect();
        CountsDistribution {
            n_measured,
            entries,
            total_shots: 0,
        }
    }

    /// Build directly from bitstring/weight pairs.
    pub fn from_entries(
        n_measured: usize,
        entries: BTreeMap<String, f64>,
        total_shots: u64,
    ) -> Result<Self> {
        for key in entries.keys() {
            if key.len() != n_measured {
                return Err(Error::Validation(format!(
                    "bitstring {key:?} has length {}, expected {n_measured}",
                    key.len()
                )));
            }
            outcome_index(key)?;
        }
        Ok(CountsDistribution {
            n_measured,
            entries,
            total_shots,
        })
    }

    pub fn n_measured(&self) -> usize {
        self.n_measured
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    /// True when this distribution holds probabilities rather than counts.
    pub fn is_probabilities(&self) -> bool {
        self.total_shots == 0
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn weight(&self, key: &str) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Normalize counts into a probability distribution. Probability inputs
    /// pass through unchanged.
    pub fn into_probabilities(self) -> CountsDistribution {
        if self.total_shots == 0 {
            return self;
        }
        let total = self.total_shots as f64;
        CountsDistribution {
            n_measured: self.n_measured,
            entries: self
                .entries
                .into_iter()
                .map(|(k, v)| (k, v / total))
                .collect(),
            total_shots: 0,
        }
    }

    /// Dense weight vector indexed by outcome.
    pub fn to_weight_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.n_measured];
        for (key, &w) in &self.entries {
            let idx = outcome_index(key).expect("validated on construction") as usize;
            v[idx] = w;
        }
        v
    }
}

/// Dense n-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All-zeros computational basis state |0…0⟩.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Build from raw amplitudes; the length must be a power of two and the
    /// norm must be 1 within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = (amps.len() as f64).log2().round() as usize;
        if amps.len() != 1 << n_qubits || n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "amplitude vector length {} is not 2^n for n in 1..={MAX_QUBITS}",
                amps.len()
            )));
        }
        let state = StateVector { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "amplitude vector norm {norm} deviates from 1"
            )));
        }
        Ok(state)
    }

    /// Wrap an arbitrary (not necessarily normalized) coefficient vector so
    /// gates can act on it. Adjoint differentiation evolves the costate
    /// O|ψ⟩ this way; sampling such a vector is meaningless.
    pub fn from_amplitudes_unnormalized(amps: Vec<Complex64>) -> Self {
        let n_qubits = amps.len().trailing_zeros() as usize;
        assert_eq!(amps.len(), 1 << n_qubits, "length must be a power of two");
        StateVector { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Apply one gate in place. Norm is preserved within 1e-10.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        match *gate {
            GateOp::Rx { qubit, angle } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                self.apply_1q(
                    qubit,
                    [
                        Complex64::new(c, 0.0),
                        Complex64::new(0.0, -s),
                        Complex64::new(0.0, -s),
                        Complex64::new(c, 0.0),
                    ],
                )
            }
            GateOp::Ry { qubit, angle } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                self.apply_1q(
                    qubit,
                    [
                        Complex64::new(c, 0.0),
                        Complex64::new(-s, 0.0),
                        Complex64::new(s, 0.0),
                        Complex64::new(c, 0.0),
                    ],
                )
            }
            GateOp::Rz { qubit, angle } => {
                let phase = Complex64::from_polar(1.0, angle / 2.0);
                self.apply_diag(qubit, phase.conj(), phase)
            }
            GateOp::H { qubit } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(qubit, [h, h, h, -h])
            }
            GateOp::S { qubit } => self.apply_diag(
                qubit,
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
            ),
            GateOp::X { qubit } => {
                self.check_qubit(qubit)?;
                let mask = 1usize << qubit;
                for base in (0..self.amps.len()).step_by(mask << 1) {
                    for lo in base..base + mask {
                        self.amps.swap(lo, lo | mask);
                    }
                }
                Ok(())
            }
            GateOp::Y { qubit } => {
                let i = Complex64::new(0.0, 1.0);
                self.apply_1q(
                    qubit,
                    [Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)],
                )
            }
            GateOp::Z { qubit } => self.apply_diag(
                qubit,
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ),
            GateOp::Cnot { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(Error::Validation(
                        "CNOT control and target must be distinct".into(),
                    ));
                }
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amps.swap(i, i | tmask);
                    }
                }
                Ok(())
            }
        }
    }

    /// Apply a gate sequence in order.
    pub fn run(&mut self, gates: &[GateOp]) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// Convenience: |0…0⟩ evolved through `gates`.
    pub fn evolve(n_qubits: usize, gates: &[GateOp]) -> Result<StateVector> {
        let mut state = StateVector::new(n_qubits)?;
        state.run(gates)?;
        Ok(state)
    }

    fn apply_1q(&mut self, qubit: usize, m: [Complex64; 4]) -> Result<()> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        for base in (0..self.amps.len()).step_by(mask << 1) {
            for lo in base..base + mask {
                let hi = lo | mask;
                let a = self.amps[lo];
                let b = self.amps[hi];
                self.amps[lo] = m[0] * a + m[1] * b;
                self.amps[hi] = m[2] * a + m[3] * b;
            }
        }
        Ok(())
    }

    fn apply_diag(&mut self, qubit: usize, d0: Complex64, d1: Complex64) -> Result<()> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if i & mask == 0 { d0 } else { d1 };
        }
        Ok(())
    }

    /// Apply the inverse of a gate (rotations negate their angle, S† is the
    /// conjugate phase, everything else is self-inverse).
    pub fn apply_inverse(&mut self, gate: &GateOp) -> Result<()> {
        match *gate {
            GateOp::Rx { qubit, angle } => self.apply(&GateOp::Rx { qubit, angle: -angle }),
            GateOp::Ry { qubit, angle } => self.apply(&GateOp::Ry { qubit, angle: -angle }),
            GateOp::Rz { qubit, angle } => self.apply(&GateOp::Rz { qubit, angle: -angle }),
            GateOp::S { qubit } => self.apply_diag(
                qubit,
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
            ),
            ref other => self.apply(other),
        }
    }

    /// Apply a bare Pauli by enum tag; used by the noise trajectory sampler.
    pub fn apply_pauli(&mut self, pauli: Pauli, qubit: usize) -> Result<()> {
        match pauli {
            Pauli::X => self.apply(&GateOp::X { qubit }),
            Pauli::Y => self.apply(&GateOp::Y { qubit }),
            Pauli::Z => self.apply(&GateOp::Z { qubit }),
        }
    }

    /// ⟨Z⟩ of one qubit: P(qubit = 0) − P(qubit = 1), computed analytically.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        let mut z = 0.0;
        for (i, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            z += if i & mask == 0 { p } else { -p };
        }
        Ok(z)
    }

    /// Full-register probability vector |a_i|².
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_measured(&self, measured: &[usize]) -> Result<()> {
        if measured.is_empty() {
            return Err(Error::Validation("measured qubit list is empty".into()));
        }
        let mut seen = 0usize;
        for &q in measured {
            self.check_qubit(q)?;
            if seen & (1 << q) != 0 {
                return Err(Error::Validation(format!(
                    "duplicate measured qubit {q}"
                )));
            }
            seen |= 1 << q;
        }
        Ok(())
    }

    /// Marginal probability vector over `measured`, indexed by outcome.
    /// Bit i of the outcome is the value of `measured[i]`.
    pub fn marginal_probabilities(&self, measured: &[usize]) -> Result<Vec<f64>> {
        self.check_measured(measured)?;
        let mut probs = vec![0.0; 1 << measured.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut outcome = 0usize;
            for (pos, &q) in measured.iter().enumerate() {
                outcome |= (i >> q & 1) << pos;
            }
            probs[outcome] += p;
        }
        Ok(probs)
    }

    /// Analytic outcome distribution over the measured qubits
    /// (`total_shots == 0` sentinel marks it as probabilities).
    pub fn exact_probabilities(&self, measured: &[usize]) -> Result<CountsDistribution> {
        let probs = self.marginal_probabilities(measured)?;
        Ok(CountsDistribution::from_outcome_probs(measured.len(), &probs))
    }

    /// Multinomial draw from [`Self::exact_probabilities`], one derived
    /// sub-seed per shot. Deterministic for a fixed seed.
    pub fn sample_counts(
        &self,
        measured: &[usize],
        shots: u64,
        seed: u64,
    ) -> Result<CountsDistribution> {
        if shots == 0 {
            return Err(Error::Validation("shots must be >= 1".into()));
        }
        let probs = self.marginal_probabilities(measured)?;
        let cdf = cumulative(&probs);
        let mut counts = vec![0u64; probs.len()];
        for shot in 0..shots {
            let mut rng = rng_for(seed, shot);
            let u: f64 = rng.gen();
            counts[draw_outcome(&cdf, u)] += 1;
        }
        Ok(CountsDistribution::from_outcome_counts(
            measured.len(),
            &counts,
            shots,
        ))
    }

    /// ⟨ψ|φ⟩ for two states of equal size.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Validation(format!(
                "inner product between {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// State fidelity |⟨ψ|φ⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }
}

/// Non-trivial Pauli tag used by the trajectory sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Prefix sums of a probability vector, for inverse-CDF sampling.
pub fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    cdf
}

/// Inverse-CDF draw: smallest index whose cumulative weight exceeds
/// `u · total`. Zero-probability outcomes (duplicate CDF entries) are never
/// selected.
pub fn draw_outcome(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf.last().copied().unwrap_or(1.0);
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Per-shot sampling seed; shared with the noise trajectory sampler so the
/// two samplers agree bit-for-bit in the zero-noise limit.
pub fn shot_seed(seed: u64, shot: u64) -> u64 {
    derive_seed(seed, shot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn init_state_is_ground_state() {
        let s = StateVector::new(1).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));
        let s2 = StateVector::new(2).unwrap();
        assert_eq!(s2.amplitudes().len(), 4);
        assert_eq!(s2.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s2.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn init_state_range_checked() {
        assert!(StateVector::new(0).is_err());
        assert!(StateVector::new(13).is_err());
        assert!(StateVector::new(12).is_ok());
    }

    #[test]
    fn hadamard_on_ground_state() {
        let mut s = StateVector::new(1).unwrap();
        s.apply(&GateOp::H { qubit: 0 }).unwrap();
        assert_close(s.amplitudes()[0].re, FRAC_1_SQRT_2, 1e-15);
        assert_close(s.amplitudes()[1].re, FRAC_1_SQRT_2, 1e-15);
    }

    #[test]
    fn ry_pi_is_bit_flip_up_to_phase() {
        let mut s = StateVector::new(1).unwrap();
        s.apply(&GateOp::Ry { qubit: 0, angle: std::f64::consts::PI })
            .unwrap();
        assert_close(s.amplitudes()[0].norm_sqr(), 0.0, 1e-30);
        assert_close(s.amplitudes()[1].norm_sqr(), 1.0, 1e-12);
    }

    #[test]
    fn cnot_builds_bell_state() {
        let mut s = StateVector::new(2).unwrap();
        s.apply(&GateOp::H { qubit: 0 }).unwrap();
        s.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        let probs = s.probabilities();
        assert_close(probs[0b00], 0.5, 1e-12);
        assert_close(probs[0b11], 0.5, 1e-12);
        assert_close(probs[0b01], 0.0, 1e-30);
        assert_close(probs[0b10], 0.0, 1e-30);
    }

    #[test]
    fn expectation_z_eigenstate_and_superposition() {
        let s = StateVector::new(1).unwrap();
        assert_close(s.expectation_z(0).unwrap(), 1.0, 1e-15);
        let mut h = StateVector::new(1).unwrap();
        h.apply(&GateOp::H { qubit: 0 }).unwrap();
        assert_close(h.expectation_z(0).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn expectation_z_matches_cos_theta() {
        // Oracle: 2x2 matrix product RY(θ)|0⟩ = (cos θ/2, sin θ/2),
        // ⟨Z⟩ = cos²(θ/2) − sin²(θ/2) = cos θ.
        let theta = 0.7;
        let mut s = StateVector::new(1).unwrap();
        s.apply(&GateOp::Ry { qubit: 0, angle: theta }).unwrap();
        let oracle = {
            let c = (theta / 2.0).cos();
            let sn = (theta / 2.0).sin();
            c * c - sn * sn
        };
        assert_close(s.expectation_z(0).unwrap(), oracle, 1e-14);
        assert_close(s.expectation_z(0).unwrap(), theta.cos(), 1e-14);
        assert_close(s.expectation_z(0).unwrap(), 0.7648421872844885, 1e-12);
    }

    #[test]
    fn expectation_z_index_checked() {
        let s = StateVector::new(2).unwrap();
        assert!(matches!(
            s.expectation_z(2),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn exact_probabilities_bell_and_marginal() {
        let mut s = StateVector::new(2).unwrap();
        s.apply(&GateOp::H { qubit: 0 }).unwrap();
        s.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        let d = s.exact_probabilities(&[0, 1]).unwrap();
        assert_close(d.weight("00"), 0.5, 1e-12);
        assert_close(d.weight("11"), 0.5, 1e-12);
        assert_eq!(d.entries().len(), 2);

        // H⊗H|00⟩ marginal over one qubit is uniform.
        let mut hh = StateVector::new(2).unwrap();
        hh.apply(&GateOp::H { qubit: 0 }).unwrap();
        hh.apply(&GateOp::H { qubit: 1 }).unwrap();
        let m = hh.exact_probabilities(&[0]).unwrap();
        assert_close(m.weight("0"), 0.5, 1e-12);
        assert_close(m.weight("1"), 0.5, 1e-12);

        // Ground state single-qubit marginal.
        let g = StateVector::new(3).unwrap();
        let gm = g.exact_probabilities(&[0]).unwrap();
        assert_close(gm.weight("0"), 1.0, 1e-15);
    }

    #[test]
    fn exact_probabilities_rejects_duplicates() {
        let s = StateVector::new(2).unwrap();
        assert!(s.exact_probabilities(&[0, 0]).is_err());
    }

    #[test]
    fn sample_counts_deterministic_and_concentrated() {
        let s = StateVector::new(1).unwrap();
        let d = s.sample_counts(&[0], 100, 7).unwrap();
        assert_eq!(d.weight("0"), 100.0);
        assert_eq!(d.total_shots(), 100);

        let mut bell = StateVector::new(2).unwrap();
        bell.apply(&GateOp::H { qubit: 0 }).unwrap();
        bell.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        let a = bell.sample_counts(&[0, 1], 32_000, 31).unwrap();
        let b = bell.sample_counts(&[0, 1], 32_000, 31).unwrap();
        assert_eq!(a, b);
        assert!((a.weight("00") / 32_000.0 - 0.5).abs() < 0.01);
        assert_eq!(a.weight("01"), 0.0);
    }

    #[test]
    fn sample_counts_rejects_zero_shots() {
        let s = StateVector::new(1).unwrap();
        assert!(s.sample_counts(&[0], 0, 1).is_err());
    }

    #[test]
    fn bitstring_renders_qubit0_rightmost() {
        assert_eq!(bitstring(0b01, 2), "01"); // qubit 0 = 1 → rightmost char
        assert_eq!(bitstring(0b10, 2), "10");
        assert_eq!(outcome_index("01").unwrap(), 0b01);
        assert_eq!(outcome_index("10").unwrap(), 0b10);
        // |q1=1, q0=0⟩ has index 2; its key shows '0' on the right.
        let mut s = StateVector::new(2).unwrap();
        s.apply(&GateOp::X { qubit: 1 }).unwrap();
        let d = s.exact_probabilities(&[0, 1]).unwrap();
        assert_close(d.weight("10"), 1.0, 1e-15);
    }

    #[test]
    fn gate_inverses_cancel() {
        let angles = [0.3, 1.1, 2.9];
        for &theta in &angles {
            for make in [
                |q, a| GateOp::Rx { qubit: q, angle: a },
                |q, a| GateOp::Ry { qubit: q, angle: a },
                |q, a| GateOp::Rz { qubit: q, angle: a },
            ] {
                let mut s = StateVector::new(2).unwrap();
                s.apply(&GateOp::H { qubit: 0 }).unwrap();
                s.apply(&GateOp::H { qubit: 1 }).unwrap();
                let before = s.clone();
                s.apply(&make(1, theta)).unwrap();
                s.apply(&make(1, -theta)).unwrap();
                for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn draw_outcome_hits_boundaries() {
        let cdf = cumulative(&[0.25, 0.25, 0.5]);
        assert_eq!(draw_outcome(&cdf, 0.0), 0);
        assert_eq!(draw_outcome(&cdf, 0.24), 0);
        assert_eq!(draw_outcome(&cdf, 0.26), 1);
        assert_eq!(draw_outcome(&cdf, 0.51), 2);
        assert_eq!(draw_outcome(&cdf, 0.999999), 2);
    }
}
