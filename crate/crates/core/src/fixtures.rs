//! Deterministic fixtures shared by unit, property, and acceptance tests.

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{CircuitTemplate, RotationAxis, RotationSlot};
use crate::seed::rng_for;
use crate::sim::{GateOp, StateVector};

/// Random gate stream over the full 9-gate set.
pub fn random_gate_stream(n_qubits: usize, n_gates: usize, seed: u64) -> Vec<GateOp> {
    let mut rng = rng_for(seed, 0);
    let mut gates = Vec::with_capacity(n_gates);
    for _ in 0..n_gates {
        let q = rng.gen_range(0..n_qubits);
        let gate = match rng.gen_range(0..9u32) {
            0 => GateOp::Rx { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) },
            1 => GateOp::Ry { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) },
            2 => GateOp::Rz { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) },
            3 => GateOp::H { qubit: q },
            4 => GateOp::S { qubit: q },
            5 => GateOp::X { qubit: q },
            6 => GateOp::Y { qubit: q },
            7 => GateOp::Z { qubit: q },
            _ => {
                if n_qubits < 2 {
                    GateOp::X { qubit: q }
                } else {
                    let mut t = rng.gen_range(0..n_qubits);
                    while t == q {
                        t = rng.gen_range(0..n_qubits);
                    }
                    GateOp::Cnot { control: q, target: t }
                }
            }
        };
        gates.push(gate);
    }
    gates
}

/// Random stream restricted to rotations and CNOTs (the ansatz gate set).
pub fn random_rotation_stream(n_qubits: usize, n_gates: usize, seed: u64) -> Vec<GateOp> {
    let mut rng = rng_for(seed, 1);
    let mut gates = Vec::with_capacity(n_gates);
    for _ in 0..n_gates {
        let q = rng.gen_range(0..n_qubits);
        let gate = match rng.gen_range(0..4u32) {
            0 => GateOp::Rx { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) },
            1 => GateOp::Ry { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) },
            2 => GateOp::Rz { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) },
            _ => {
                if n_qubits < 2 {
                    GateOp::Ry { qubit: q, angle: rng.gen_range(0.0..std::f64::consts::TAU) }
                } else {
                    let mut t = rng.gen_range(0..n_qubits);
                    while t == q {
                        t = rng.gen_range(0..n_qubits);
                    }
                    GateOp::Cnot { control: q, target: t }
                }
            }
        };
        gates.push(gate);
    }
    gates
}

/// Haar-ish random normalized state (Gaussian amplitudes, normalized).
pub fn random_state(n_qubits: usize, seed: u64) -> StateVector {
    let mut rng = rng_for(seed, 2);
    let dim = 1usize << n_qubits;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| {
            // Box-Muller pairs.
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            Complex64::new(
                r * (std::f64::consts::TAU * u2).cos(),
                r * (std::f64::consts::TAU * u2).sin(),
            )
        })
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in amps.iter_mut() {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps).expect("normalized by construction")
}

/// Random template on an all-to-all register: round-robin embedding qubits,
/// uniform variational slots, `n_qubits` entanglers on random pairs. Enough
/// structure for gradient and trainer tests without a device file.
pub fn random_template(
    n_qubits: usize,
    n_embed: usize,
    n_params: usize,
    seed: u64,
) -> CircuitTemplate {
    let mut rng = rng_for(seed, 3);
    let axis = |rng: &mut rand_chacha::ChaCha8Rng| match rng.gen_range(0..3u32) {
        0 => RotationAxis::X,
        1 => RotationAxis::Y,
        _ => RotationAxis::Z,
    };
    let embedding_slots = (0..n_embed)
        .map(|i| RotationSlot { qubit: i % n_qubits, axis: axis(&mut rng) })
        .collect();
    let variational_slots = (0..n_params)
        .map(|_| RotationSlot { qubit: rng.gen_range(0..n_qubits), axis: axis(&mut rng) })
        .collect();
    let n_ent = if n_qubits < 2 { 0 } else { n_qubits };
    let stream_len = n_params + n_ent;
    let mut positions: Vec<usize> = (0..stream_len).collect();
    // Partial Fisher-Yates to pick distinct stream positions.
    for i in 0..n_ent {
        let j = rng.gen_range(i..stream_len);
        positions.swap(i, j);
    }
    let mut entanglers: Vec<crate::circuit::Entangler> = (0..n_ent)
        .map(|i| {
            let control = rng.gen_range(0..n_qubits);
            let mut target = rng.gen_range(0..n_qubits);
            while target == control {
                target = rng.gen_range(0..n_qubits);
            }
            crate::circuit::Entangler { position: positions[i], control, target }
        })
        .collect();
    entanglers.sort_by_key(|e| e.position);
    CircuitTemplate {
        n_qubits,
        embedding_slots,
        variational_slots,
        entanglers,
        measured_qubits: (0..n_qubits).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(random_gate_stream(4, 50, 7), random_gate_stream(4, 50, 7));
        assert_eq!(random_template(4, 8, 12, 7), random_template(4, 8, 12, 7));
        let a = random_state(3, 5);
        let b = random_state(3, 5);
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_template_is_structurally_valid() {
        for seed in 0..20 {
            random_template(4, 10, 16, seed).validate().unwrap();
        }
    }
}
