//! Monte-Carlo trajectory simulation of noisy circuit sampling.
//!
//! The channel model:
//! * every rotation gate is applied with its angle offset by the coherent
//!   over-rotation `epsilon_coherent`;
//! * after each gate, each involved qubit is hit with probability
//!   `p_dep_1q` (`p_dep_2q` for CNOT) by a Pauli drawn uniformly from
//!   {I, X, Y, Z} — the standard depolarizing channel, fully mixing at
//!   probability 1;
//! * after each layer (maximal qubit-disjoint gate groups packed greedily in
//!   stream order), every idle qubit dephases (Z) with probability `p_idle`;
//! * the measured bits are finally flipped per the per-qubit readout
//!   confusion matrices.
//!
//! Error suppression is modeled as a transform of the noise parameters
//! ([`NoiseModel::effective`]): dynamical decoupling scales the idle rate by
//! `kappa_dd`, and gate twirling converts the coherent over-rotation into an
//! equivalent stochastic rate (`p_dep_1q += sin²(ε/2)`, ε → 0).
//!
//! Trajectories are independent given per-shot seeds derived from the master
//! seed (`seed_i = derive_seed(master, shot)`); shots run in parallel and
//! counts merge by addition. With all rates at zero a trajectory consumes no
//! noise draws, so sampling is bit-identical to
//! [`StateVector::sample_counts`] under the same seed.

use rand::Rng;
use rayon::prelude::*;

use crate::device::{
    confusion_from_flip_rates, validate_confusion, ConfusionMatrix, DeviceDescription,
    IDENTITY_CONFUSION,
};
use crate::error::{Error, Result};
use crate::mitigate::ReadoutCalibration;
use crate::seed::{derive_seed, rng_for, streams};
use crate::sim::{cumulative, draw_outcome, CountsDistribution, GateOp, Pauli, StateVector};

/// Stochastic noise parameters plus suppression flags.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Depolarizing probability after a single-qubit gate.
    pub p_dep_1q: f64,
    /// Depolarizing probability per involved qubit after a CNOT.
    pub p_dep_2q: f64,
    /// Idle dephasing probability per qubit per layer.
    pub p_idle: f64,
    /// Coherent over-rotation added to every rotation angle, radians.
    pub epsilon_coherent: f64,
    /// Per-qubit readout confusion, indexed `[observed][true]`.
    pub readout_confusion: Vec<ConfusionMatrix>,
    pub dd_enabled: bool,
    pub twirling_enabled: bool,
    /// Idle-noise suppression factor applied by DD (model knob).
    pub kappa_dd: f64,
}

/// Default DD idle suppression factor.
pub const DEFAULT_KAPPA_DD: f64 = 0.25;

impl NoiseModel {
    /// All rates zero, identity readout.
    pub fn noiseless(n_qubits: usize) -> Self {
        NoiseModel {
            p_dep_1q: 0.0,
            p_dep_2q: 0.0,
            p_idle: 0.0,
            epsilon_coherent: 0.0,
            readout_confusion: vec![IDENTITY_CONFUSION; n_qubits],
            dd_enabled: false,
            twirling_enabled: false,
            kappa_dd: DEFAULT_KAPPA_DD,
        }
    }

    /// Noise parameters from a device description; suppression flags off.
    pub fn from_device(device: &DeviceDescription) -> Self {
        NoiseModel {
            p_dep_1q: device.p_dep_1q,
            p_dep_2q: device.p_dep_2q,
            p_idle: device.p_idle,
            epsilon_coherent: device.epsilon_coherent,
            readout_confusion: device.readout_confusion.clone(),
            dd_enabled: false,
            twirling_enabled: false,
            kappa_dd: DEFAULT_KAPPA_DD,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.readout_confusion.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_dep_1q", self.p_dep_1q),
            ("p_dep_2q", self.p_dep_2q),
            ("p_idle", self.p_idle),
            ("kappa_dd", self.kappa_dd),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !self.epsilon_coherent.is_finite() {
            return Err(Error::Validation("epsilon_coherent must be finite".into()));
        }
        for m in &self.readout_confusion {
            validate_confusion(m)?;
        }
        Ok(())
    }

    /// Apply the DD / twirling transforms, returning the model the sampler
    /// consumes directly. Flags are cleared in the result, so the transform
    /// is idempotent.
    pub fn effective(&self) -> NoiseModel {
        let mut eff = self.clone();
        if self.dd_enabled {
            eff.p_idle = self.kappa_dd * self.p_idle;
        }
        if self.twirling_enabled {
            let half = self.epsilon_coherent / 2.0;
            eff.p_dep_1q = (self.p_dep_1q + half.sin().powi(2)).min(1.0);
            eff.epsilon_coherent = 0.0;
        }
        eff.dd_enabled = false;
        eff.twirling_enabled = false;
        eff
    }

    /// True when gate-level noise exists; readout confusion alone keeps the
    /// circuit evolution deterministic.
    pub fn has_gate_noise(&self) -> bool {
        self.p_dep_1q > 0.0
            || self.p_dep_2q > 0.0
            || self.p_idle > 0.0
            || self.epsilon_coherent != 0.0
    }
}

/// Greedily pack a gate stream into maximal layers of qubit-disjoint gates,
/// preserving stream order. Returns gate indices per layer.
pub fn pack_layers(gates: &[GateOp]) -> Vec<Vec<usize>> {
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut used: u64 = 0;
    let mut current: Vec<usize> = Vec::new();
    for (i, gate) in gates.iter().enumerate() {
        let (a, b) = gate.qubits();
        let mut mask = 1u64 << a;
        if let Some(b) = b {
            mask |= 1 << b;
        }
        if used & mask != 0 {
            layers.push(std::mem::take(&mut current));
            used = 0;
        }
        used |= mask;
        current.push(i);
    }
    if !current.is_empty() {
        layers.push(current);
    }
    layers
}

fn random_pauli(rng: &mut impl Rng) -> Option<Pauli> {
    match rng.gen_range(0..4u32) {
        0 => None,
        1 => Some(Pauli::X),
        2 => Some(Pauli::Y),
        3 => Some(Pauli::Z),
        _ => unreachable!(),
    }
}

struct TrajectoryPlan<'a> {
    gates: &'a [GateOp],
    layers: Vec<Vec<usize>>,
    n_qubits: usize,
}

impl<'a> TrajectoryPlan<'a> {
    fn new(gates: &'a [GateOp], n_qubits: usize) -> Self {
        TrajectoryPlan {
            gates,
            layers: pack_layers(gates),
            n_qubits,
        }
    }

    /// One noisy evolution; draws come from `rng` in a fixed order. Every
    /// draw is guarded by a `p > 0` check so the zero-noise model consumes
    /// no randomness here.
    fn evolve(&self, noise: &NoiseModel, rng: &mut impl Rng) -> Result<StateVector> {
        let mut state = StateVector::new(self.n_qubits)?;
        for layer in &self.layers {
            let mut layer_mask = 0u64;
            for &gi in layer {
                let gate = self.gates[gi].with_angle_offset(noise.epsilon_coherent);
                state.apply(&gate)?;
                let p_dep = if gate.is_two_qubit() {
                    noise.p_dep_2q
                } else {
                    noise.p_dep_1q
                };
                let (a, b) = gate.qubits();
                layer_mask |= 1 << a;
                if let Some(b) = b {
                    layer_mask |= 1 << b;
                }
                if p_dep > 0.0 {
                    for q in std::iter::once(a).chain(b) {
                        if rng.gen::<f64>() < p_dep {
                            if let Some(pauli) = random_pauli(rng) {
                                state.apply_pauli(pauli, q)?;
                            }
                        }
                    }
                }
            }
            if noise.p_idle > 0.0 {
                for q in 0..self.n_qubits {
                    if layer_mask & (1 << q) == 0 && rng.gen::<f64>() < noise.p_idle {
                        state.apply(&GateOp::Z { qubit: q })?;
                    }
                }
            }
        }
        Ok(state)
    }
}

/// Flip the measured bits of `outcome` per the confusion matrices. Draws are
/// guarded by `flip > 0` checks, preserving zero-noise bit-compatibility.
fn apply_readout(
    outcome: usize,
    measured: &[usize],
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> usize {
    let mut observed = outcome;
    for (pos, &q) in measured.iter().enumerate() {
        let true_bit = outcome >> pos & 1;
        let flip = noise.readout_confusion[q][1 - true_bit][true_bit];
        if flip > 0.0 && rng.gen::<f64>() < flip {
            observed ^= 1 << pos;
        }
    }
    observed
}

/// Sample a gate stream under the noise model: per-shot trajectories,
/// deterministic for a fixed seed. The register size is taken from the
/// noise model's readout list.
pub fn noisy_sample(
    gates: &[GateOp],
    measured: &[usize],
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountsDistribution> {
    if shots == 0 {
        return Err(Error::Validation("shots must be >= 1".into()));
    }
    noise.validate()?;
    let n_qubits = noise.n_qubits();
    for g in gates {
        if g.max_qubit() >= n_qubits {
            return Err(Error::QubitOutOfRange {
                index: g.max_qubit(),
                n_qubits,
            });
        }
    }
    for &q in measured {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }

    let n_outcomes = 1usize << measured.len();
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };

    let counts = if !noise.has_gate_noise() {
        // Deterministic evolution: simulate once, then draw outcomes and
        // readout flips per shot. Identical draw order to the trajectory
        // path, which would consume no noise randomness either.
        let state = StateVector::evolve(n_qubits, gates)?;
        let probs = state.marginal_probabilities(measured)?;
        let cdf = cumulative(&probs);
        (0..shots)
            .into_par_iter()
            .fold(
                || vec![0u64; n_outcomes],
                |mut acc, shot| {
                    let mut rng = rng_for(seed, shot);
                    let u: f64 = rng.gen();
                    let outcome = draw_outcome(&cdf, u);
                    acc[apply_readout(outcome, measured, noise, &mut rng)] += 1;
                    acc
                },
            )
            .reduce(|| vec![0u64; n_outcomes], merge)
    } else {
        let plan = TrajectoryPlan::new(gates, n_qubits);
        (0..shots)
            .into_par_iter()
            .fold(
                || vec![0u64; n_outcomes],
                |mut acc, shot| {
                    let mut rng = rng_for(seed, shot);
                    let state = plan.evolve(noise, &mut rng).expect("validated above");
                    let probs = state.marginal_probabilities(measured).expect("validated");
                    let u: f64 = rng.gen();
                    let outcome = draw_outcome(&cumulative(&probs), u);
                    acc[apply_readout(outcome, measured, noise, &mut rng)] += 1;
                    acc
                },
            )
            .reduce(|| vec![0u64; n_outcomes], merge)
    };

    Ok(CountsDistribution::from_outcome_counts(
        measured.len(),
        &counts,
        shots,
    ))
}

/// Empirical readout calibration: run |0…0⟩ and |1…1⟩ preparation circuits
/// through [`noisy_sample`] and return the per-qubit flip rates as
/// column-stochastic confusion matrices.
pub fn calibrate_readout(
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<ReadoutCalibration> {
    if shots < 1000 {
        return Err(Error::Validation(format!(
            "calibration needs at least 1000 shots, got {shots}"
        )));
    }
    let n = noise.n_qubits();
    let measured: Vec<usize> = (0..n).collect();
    let zeros = noisy_sample(&[], &measured, shots, noise, derive_seed(seed, streams::CALIBRATION))?;
    let ones_prep: Vec<GateOp> = (0..n).map(|q| GateOp::X { qubit: q }).collect();
    let ones = noisy_sample(
        &ones_prep,
        &measured,
        shots,
        noise,
        derive_seed(seed, streams::CALIBRATION + 1),
    )?;

    let total = shots as f64;
    let mut matrices = Vec::with_capacity(n);
    for q in 0..n {
        let ones_observed_when_zero: f64 = zeros
            .entries()
            .iter()
            .filter(|(key, _)| key.as_bytes()[n - 1 - q] == b'1')
            .map(|(_, &c)| c)
            .sum();
        let zeros_observed_when_one: f64 = ones
            .entries()
            .iter()
            .filter(|(key, _)| key.as_bytes()[n - 1 - q] == b'0')
            .map(|(_, &c)| c)
            .sum();
        matrices.push(confusion_from_flip_rates(
            ones_observed_when_zero / total,
            zeros_observed_when_one / total,
        ));
    }
    ReadoutCalibration::new(matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::tvd;

    #[test]
    fn zero_noise_matches_sim_core_bit_for_bit() {
        let gates = vec![
            GateOp::H { qubit: 0 },
            GateOp::Ry { qubit: 1, angle: 0.7 },
            GateOp::Cnot { control: 0, target: 2 },
            GateOp::Rz { qubit: 2, angle: 1.9 },
        ];
        let noise = NoiseModel::noiseless(3);
        let noisy = noisy_sample(&gates, &[0, 1, 2], 5000, &noise, 77).unwrap();
        let state = StateVector::evolve(3, &gates).unwrap();
        let exact = state.sample_counts(&[0, 1, 2], 5000, 77).unwrap();
        assert_eq!(noisy, exact);
    }

    #[test]
    fn readout_confusion_biases_counts() {
        // X then readout with P(obs 1 | true 1) = 0.8 → expect 0.8.
        let mut noise = NoiseModel::noiseless(1);
        noise.readout_confusion = vec![[[0.9, 0.2], [0.1, 0.8]]];
        let d = noisy_sample(&[GateOp::X { qubit: 0 }], &[0], 100_000, &noise, 5).unwrap();
        let frac = d.weight("1") / 100_000.0;
        assert!((frac - 0.8).abs() < 0.01, "got {frac}");
    }

    #[test]
    fn full_depolarization_is_uniform() {
        let mut noise = NoiseModel::noiseless(1);
        noise.p_dep_1q = 1.0;
        let d = noisy_sample(&[GateOp::X { qubit: 0 }], &[0], 100_000, &noise, 11).unwrap();
        let frac = d.weight("0") / 100_000.0;
        assert!((frac - 0.5).abs() < 0.01, "got {frac}");
    }

    #[test]
    fn effective_noise_transforms() {
        let mut noise = NoiseModel::noiseless(2);
        noise.p_idle = 0.04;
        noise.epsilon_coherent = 0.3;
        noise.p_dep_1q = 0.001;

        // Flags off: identity transform.
        let same = noise.effective();
        assert_eq!(same.p_idle, 0.04);
        assert_eq!(same.epsilon_coherent, 0.3);
        assert_eq!(same.p_dep_1q, 0.001);

        noise.dd_enabled = true;
        noise.twirling_enabled = true;
        let eff = noise.effective();
        assert!((eff.p_idle - 0.01).abs() < 1e-15);
        assert_eq!(eff.epsilon_coherent, 0.0);
        assert!((eff.p_dep_1q - (0.001 + (0.15f64).sin().powi(2))).abs() < 1e-15);
        assert!(!eff.dd_enabled && !eff.twirling_enabled);

        // Twirling with ε = 0 leaves p_dep_1q unchanged.
        let mut e0 = NoiseModel::noiseless(1);
        e0.twirling_enabled = true;
        e0.p_dep_1q = 0.002;
        assert_eq!(e0.effective().p_dep_1q, 0.002);
    }

    #[test]
    fn determinism_under_fixed_seed() {
        let mut noise = NoiseModel::noiseless(2);
        noise.p_dep_1q = 0.05;
        noise.p_idle = 0.02;
        noise.epsilon_coherent = 0.01;
        let gates = vec![
            GateOp::H { qubit: 0 },
            GateOp::Rx { qubit: 1, angle: 0.4 },
            GateOp::Cnot { control: 0, target: 1 },
        ];
        let a = noisy_sample(&gates, &[0, 1], 2000, &noise, 123).unwrap();
        let b = noisy_sample(&gates, &[0, 1], 2000, &noise, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tvd_monotone_in_depolarizing_rate() {
        let gates: Vec<GateOp> = crate::fixtures::random_rotation_stream(4, 40, 99);
        let state = StateVector::evolve(4, &gates).unwrap();
        let measured = [0, 1, 2, 3];
        let exact = state.exact_probabilities(&measured).unwrap();
        let mut means = Vec::new();
        for &p in &[0.0, 0.002, 0.01, 0.05] {
            let mut noise = NoiseModel::noiseless(4);
            noise.p_dep_1q = p;
            let mut acc = 0.0;
            for seed in 0..20u64 {
                let d = noisy_sample(&gates, &measured, 100_000, &noise, seed)
                    .unwrap()
                    .into_probabilities();
                acc += tvd(&exact, &d).unwrap();
            }
            means.push(acc / 20.0);
        }
        for w in means.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9,
                "mean TVD decreased along the grid: {means:?}"
            );
        }
    }

    #[test]
    fn dd_reduces_idle_damage() {
        // Superpose all qubits, let two idle for many layers, unwind. Z
        // flips on idle qubits become bit flips after the final H.
        let mut gates = vec![
            GateOp::H { qubit: 0 },
            GateOp::H { qubit: 1 },
            GateOp::H { qubit: 2 },
        ];
        for _ in 0..12 {
            gates.push(GateOp::Rx { qubit: 0, angle: 0.1 });
        }
        gates.push(GateOp::H { qubit: 1 });
        gates.push(GateOp::H { qubit: 2 });
        let measured = [1, 2];
        let ideal = StateVector::evolve(3, &gates)
            .unwrap()
            .exact_probabilities(&measured)
            .unwrap();

        let mut base = NoiseModel::noiseless(3);
        base.p_idle = 0.04;
        let mut with_dd = base.clone();
        with_dd.dd_enabled = true;

        let mean_tvd = |noise: &NoiseModel| {
            let eff = noise.effective();
            let mut acc = 0.0;
            for seed in 0..20u64 {
                let d = noisy_sample(&gates, &measured, 20_000, &eff, seed)
                    .unwrap()
                    .into_probabilities();
                acc += tvd(&ideal, &d).unwrap();
            }
            acc / 20.0
        };
        let plain = mean_tvd(&base);
        let suppressed = mean_tvd(&with_dd);
        assert!(
            suppressed <= plain,
            "DD did not help: {suppressed} vs {plain}"
        );
    }

    #[test]
    fn twirling_does_not_bias_dominant_outcome() {
        let epsilon = 0.05;
        for &theta in &[
            std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_2,
            3.0 * std::f64::consts::FRAC_PI_4,
        ] {
            let gates = vec![GateOp::Ry { qubit: 0, angle: theta }];
            let ideal_p0 = (theta / 2.0).cos().powi(2);

            let mut noise = NoiseModel::noiseless(1);
            noise.epsilon_coherent = epsilon;
            noise.twirling_enabled = true;
            let eff = noise.effective();
            let d = noisy_sample(&gates, &[0], 100_000, &eff, 3).unwrap();
            let p0 = d.weight("0") / 100_000.0;

            if (ideal_p0 - 0.5).abs() < 1e-12 {
                // θ = π/2 is an exact tie; twirling must keep it unbiased.
                assert!((p0 - 0.5).abs() < 0.01, "θ={theta}: p0={p0}");
            } else {
                let ideal_argmax = ideal_p0 > 0.5;
                assert_eq!(p0 > 0.5, ideal_argmax, "θ={theta}: p0={p0}");
            }
        }
    }

    #[test]
    fn calibration_recovers_flip_rates() {
        let mut noise = NoiseModel::noiseless(2);
        noise.readout_confusion = vec![
            confusion_from_flip_rates(0.02, 0.02),
            confusion_from_flip_rates(0.05, 0.05),
        ];
        let cal = calibrate_readout(&noise, 32_000, 9).unwrap();
        let cal2 = calibrate_readout(&noise, 32_000, 9).unwrap();
        assert_eq!(cal.matrices(), cal2.matrices());
        assert!((cal.matrices()[0][1][0] - 0.02).abs() < 0.01);
        assert!((cal.matrices()[1][1][0] - 0.05).abs() < 0.01);

        let ident = NoiseModel::noiseless(2);
        let cal_id = calibrate_readout(&ident, 32_000, 9).unwrap();
        for m in cal_id.matrices() {
            assert!((m[0][0] - 1.0).abs() < 0.01);
            assert!((m[1][1] - 1.0).abs() < 0.01);
        }

        assert!(calibrate_readout(&noise, 999, 9).is_err());
    }

    #[test]
    fn pack_layers_groups_disjoint_gates() {
        let gates = vec![
            GateOp::H { qubit: 0 },
            GateOp::H { qubit: 1 },
            GateOp::Cnot { control: 0, target: 1 },
            GateOp::H { qubit: 2 },
            GateOp::H { qubit: 0 },
        ];
        let layers = pack_layers(&gates);
        assert_eq!(layers, vec![vec![0, 1], vec![2, 3], vec![4]]);
    }
}
