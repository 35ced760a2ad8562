//! Three-part circuit templates: data-encoding rotations, a variational
//! ansatz with entangling CNOTs, and a measured-qubit list.
//!
//! A template fixes structure only. [`CircuitTemplate::bind`] turns it into a
//! concrete gate stream: all embedding rotations first (angles taken from the
//! feature vector in slot order), then the variational section where
//! entanglers sit at their recorded stream positions between the parameter
//! rotations. [`CircuitTemplate::clifford_replica`] reuses the same structure
//! with every rotation angle snapped to a multiple of π/2, which makes the
//! bound circuit a stabilizer circuit.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::device::{DeviceDescription, LineParser};
use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::sim::GateOp;

/// Rotation axis of an encoding or ansatz slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

impl RotationAxis {
    pub fn gate(self, qubit: usize, angle: f64) -> GateOp {
        match self {
            RotationAxis::X => GateOp::Rx { qubit, angle },
            RotationAxis::Y => GateOp::Ry { qubit, angle },
            RotationAxis::Z => GateOp::Rz { qubit, angle },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RotationAxis::X => "RX",
            RotationAxis::Y => "RY",
            RotationAxis::Z => "RZ",
        }
    }

    pub fn from_label(s: &str) -> Option<RotationAxis> {
        match s {
            "RX" => Some(RotationAxis::X),
            "RY" => Some(RotationAxis::Y),
            "RZ" => Some(RotationAxis::Z),
            _ => None,
        }
    }
}

/// One rotation slot: which qubit, which axis. The angle comes later, from
/// features (embedding slots) or trainable parameters (variational slots).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationSlot {
    pub qubit: usize,
    pub axis: RotationAxis,
}

/// A CNOT at a recorded position within the variational gate stream.
/// Positions index the interleaved sequence of variational rotations and
/// entanglers, so binding reconstructs the exact original ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entangler {
    pub position: usize,
    pub control: usize,
    pub target: usize,
}

/// Trainable parameter values, radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
}

impl ParameterVector {
    pub fn zeros(n: usize) -> Self {
        ParameterVector { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Classical feature values, each in [0, π].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=std::f64::consts::PI).contains(&v) {
                return Err(Error::Validation(format!(
                    "feature {i} = {v} outside [0, π]"
                )));
            }
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Structure of one candidate circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTemplate {
    pub n_qubits: usize,
    pub embedding_slots: Vec<RotationSlot>,
    pub variational_slots: Vec<RotationSlot>,
    pub entanglers: Vec<Entangler>,
    pub measured_qubits: Vec<usize>,
}

impl CircuitTemplate {
    pub fn n_embed(&self) -> usize {
        self.embedding_slots.len()
    }

    pub fn n_params(&self) -> usize {
        self.variational_slots.len()
    }

    /// Total bound gate count: embeddings + variational rotations + CNOTs.
    pub fn gate_count(&self) -> usize {
        self.embedding_slots.len() + self.variational_slots.len() + self.entanglers.len()
    }

    /// Structural sanity independent of any device.
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Validation("template needs at least one qubit".into()));
        }
        for slot in self.embedding_slots.iter().chain(&self.variational_slots) {
            if slot.qubit >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: slot.qubit,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let var_len = self.variational_slots.len() + self.entanglers.len();
        let mut seen_positions = std::collections::BTreeSet::new();
        for e in &self.entanglers {
            if e.control >= self.n_qubits || e.target >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: e.control.max(e.target),
                    n_qubits: self.n_qubits,
                });
            }
            if e.control == e.target {
                return Err(Error::Validation(
                    "entangler control and target must be distinct".into(),
                ));
            }
            if e.position >= var_len {
                return Err(Error::Validation(format!(
                    "entangler position {} outside variational stream of length {var_len}",
                    e.position
                )));
            }
            if !seen_positions.insert(e.position) {
                return Err(Error::Validation(format!(
                    "duplicate entangler position {}",
                    e.position
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for &q in &self.measured_qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
            if !seen.insert(q) {
                return Err(Error::Validation(format!("duplicate measured qubit {q}")));
            }
        }
        Ok(())
    }

    /// The variational section as a position-ordered stream skeleton.
    /// Entanglers occupy their recorded positions; the remaining positions
    /// take the variational rotations in slot order.
    fn variational_stream(&self) -> Vec<VarStreamItem> {
        let len = self.variational_slots.len() + self.entanglers.len();
        let mut stream = vec![VarStreamItem::Pending; len];
        for (i, e) in self.entanglers.iter().enumerate() {
            stream[e.position] = VarStreamItem::Entangler(i);
        }
        let mut next_rotation = 0usize;
        for item in stream.iter_mut() {
            if matches!(item, VarStreamItem::Pending) {
                *item = VarStreamItem::Rotation(next_rotation);
                next_rotation += 1;
            }
        }
        stream
    }

    /// Bind features and parameters to a concrete gate stream.
    pub fn bind(
        &self,
        features: &FeatureVector,
        params: &ParameterVector,
    ) -> Result<Vec<GateOp>> {
        Ok(self.bind_with_origins(features, params)?.0)
    }

    /// Like [`Self::bind`], also returning each gate's parameter index
    /// (`Some(k)` for the k-th variational rotation, `None` for embedding
    /// rotations and entanglers). Gradient engines consume the mapping.
    pub fn bind_with_origins(
        &self,
        features: &FeatureVector,
        params: &ParameterVector,
    ) -> Result<(Vec<GateOp>, Vec<Option<usize>>)> {
        if features.len() != self.embedding_slots.len() {
            return Err(Error::Validation(format!(
                "feature vector length {} does not match {} embedding slots",
                features.len(),
                self.embedding_slots.len()
            )));
        }
        if params.len() != self.variational_slots.len() {
            return Err(Error::Validation(format!(
                "parameter vector length {} does not match {} variational slots",
                params.len(),
                self.variational_slots.len()
            )));
        }
        let mut gates = Vec::with_capacity(self.gate_count());
        let mut origins = Vec::with_capacity(self.gate_count());
        for (slot, &angle) in self.embedding_slots.iter().zip(features.values()) {
            gates.push(slot.axis.gate(slot.qubit, angle));
            origins.push(None);
        }
        for item in self.variational_stream() {
            match item {
                VarStreamItem::Rotation(i) => {
                    let slot = self.variational_slots[i];
                    gates.push(slot.axis.gate(slot.qubit, params.values[i]));
                    origins.push(Some(i));
                }
                VarStreamItem::Entangler(i) => {
                    let e = self.entanglers[i];
                    gates.push(GateOp::Cnot {
                        control: e.control,
                        target: e.target,
                    });
                    origins.push(None);
                }
                VarStreamItem::Pending => unreachable!(),
            }
        }
        Ok((gates, origins))
    }

    /// Stabilizer replica: every rotation slot (embedding and variational)
    /// gets an angle drawn uniformly from {0, π/2, π, 3π/2}; entanglers are
    /// unchanged. Deterministic in `seed`.
    pub fn clifford_replica(&self, seed: u64) -> Vec<GateOp> {
        let mut rng = rng_for(seed, 0);
        let mut snap = || {
            let k: u32 = rng.gen_range(0..4);
            f64::from(k) * std::f64::consts::FRAC_PI_2
        };
        let mut gates = Vec::with_capacity(self.gate_count());
        for slot in &self.embedding_slots {
            gates.push(slot.axis.gate(slot.qubit, snap()));
        }
        let mut var_angles = Vec::with_capacity(self.variational_slots.len());
        for _ in &self.variational_slots {
            var_angles.push(snap());
        }
        for item in self.variational_stream() {
            match item {
                VarStreamItem::Rotation(i) => {
                    let slot = self.variational_slots[i];
                    gates.push(slot.axis.gate(slot.qubit, var_angles[i]));
                }
                VarStreamItem::Entangler(i) => {
                    let e = self.entanglers[i];
                    gates.push(GateOp::Cnot {
                        control: e.control,
                        target: e.target,
                    });
                }
                VarStreamItem::Pending => unreachable!(),
            }
        }
        gates
    }

    /// Check every entangler against the device coupling map and all qubit
    /// indices against its size.
    pub fn validate_against_device(
        &self,
        device: &DeviceDescription,
    ) -> std::result::Result<(), ViolationReport> {
        let mut violations = Vec::new();
        if self.n_qubits > device.n_qubits {
            violations.push(Violation {
                entangler_index: None,
                detail: format!(
                    "template uses {} qubits but device has {}",
                    self.n_qubits, device.n_qubits
                ),
            });
        }
        for (i, e) in self.entanglers.iter().enumerate() {
            if e.control >= device.n_qubits || e.target >= device.n_qubits {
                violations.push(Violation {
                    entangler_index: Some(i),
                    detail: format!(
                        "entangler ({}, {}) references a qubit outside the device",
                        e.control, e.target
                    ),
                });
            } else if !device.has_edge(e.control, e.target) {
                violations.push(Violation {
                    entangler_index: Some(i),
                    detail: format!(
                        "entangler ({}, {}) is not a coupling edge",
                        e.control, e.target
                    ),
                });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ViolationReport { violations })
        }
    }

    /// Circuit depth of the bound stream: number of greedily packed layers
    /// of qubit-disjoint gates (embedding angles do not affect structure).
    pub fn depth(&self) -> usize {
        let features = FeatureVector::new(vec![0.0; self.n_embed()]).expect("zeros are valid");
        let params = ParameterVector::zeros(self.n_params());
        let gates = self.bind(&features, &params).expect("lengths match");
        crate::noise::pack_layers(&gates).len()
    }
}

#[derive(Debug, Clone, Copy)]
enum VarStreamItem {
    Pending,
    Rotation(usize),
    Entangler(usize),
}

/// One connectivity violation found by [`CircuitTemplate::validate_against_device`].
#[derive(Debug, Clone)]
pub struct Violation {
    /// Index into the template's entangler list; `None` for register-size
    /// violations.
    pub entangler_index: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl std::fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} device violation(s):", self.violations.len())?;
        for v in &self.violations {
            match v.entangler_index {
                Some(i) => writeln!(f, "  entangler #{i}: {}", v.detail)?,
                None => writeln!(f, "  {}", v.detail)?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// QCIRCUIT v1 persistence
// ---------------------------------------------------------------------------

/// Serialize a template (and optionally bound parameters) to the QCIRCUIT v1
/// text document. Floats print in shortest round-trip form, so
/// `deserialize(serialize(x)) == x` exactly.
pub fn serialize(template: &CircuitTemplate, params: Option<&ParameterVector>) -> String {
    let mut out = String::new();
    out.push_str("QCIRCUIT v1\n");
    out.push_str("DEVICE\n");
    let _ = writeln!(out, "n_qubits {}", template.n_qubits);
    let _ = writeln!(out, "EMBED {}", template.embedding_slots.len());
    for slot in &template.embedding_slots {
        let _ = writeln!(out, "{} {}", slot.qubit, slot.axis.label());
    }
    let _ = writeln!(out, "VAR {}", template.variational_slots.len());
    for slot in &template.variational_slots {
        let _ = writeln!(out, "{} {}", slot.qubit, slot.axis.label());
    }
    let _ = writeln!(out, "ENTANGLE {}", template.entanglers.len());
    for e in &template.entanglers {
        let _ = writeln!(out, "{} {} {}", e.position, e.control, e.target);
    }
    let _ = writeln!(out, "MEASURE {}", template.measured_qubits.len());
    for &q in &template.measured_qubits {
        let _ = writeln!(out, "{q}");
    }
    if let Some(p) = params {
        let _ = writeln!(out, "PARAMS {}", p.len());
        for &v in &p.values {
            let _ = writeln!(out, "{v:?}");
        }
    }
    out.push_str("END\n");
    out
}

/// Parse a QCIRCUIT v1 document.
pub fn deserialize(
    text: &str,
    origin: &str,
) -> Result<(CircuitTemplate, Option<ParameterVector>)> {
    let mut p = LineParser::new(text, origin);
    p.expect_exact("QCIRCUIT v1")?;
    p.expect_exact("DEVICE")?;
    let (line_no, fields) = p.fields("DEVICE n_qubits")?;
    if fields.len() != 2 || fields[0] != "n_qubits" {
        return Err(p.err(line_no, "expected \"n_qubits <count>\""));
    }
    let n_qubits: usize = p.parse_field(line_no, fields[1])?;

    let mut read_slots = |p: &mut LineParser, tag: &str| -> Result<Vec<RotationSlot>> {
        let count = p.expect_tagged_usize(tag)?;
        let mut slots = Vec::with_capacity(count);
        for _ in 0..count {
            let (line_no, fields) = p.fields(&format!("{tag} slot"))?;
            if fields.len() != 2 {
                return Err(p.err(line_no, "slot rows are: qubit axis"));
            }
            let qubit: usize = p.parse_field(line_no, fields[0])?;
            let axis = RotationAxis::from_label(fields[1])
                .ok_or_else(|| p.err(line_no, format!("unknown axis {:?}", fields[1])))?;
            slots.push(RotationSlot { qubit, axis });
        }
        Ok(slots)
    };

    let embedding_slots = read_slots(&mut p, "EMBED")?;
    let variational_slots = read_slots(&mut p, "VAR")?;

    let n_ent = p.expect_tagged_usize("ENTANGLE")?;
    let mut entanglers = Vec::with_capacity(n_ent);
    for _ in 0..n_ent {
        let (line_no, fields) = p.fields("ENTANGLE entry")?;
        if fields.len() != 3 {
            return Err(p.err(line_no, "entangler rows are: position control target"));
        }
        entanglers.push(Entangler {
            position: p.parse_field(line_no, fields[0])?,
            control: p.parse_field(line_no, fields[1])?,
            target: p.parse_field(line_no, fields[2])?,
        });
    }

    let n_meas = p.expect_tagged_usize("MEASURE")?;
    let mut measured_qubits = Vec::with_capacity(n_meas);
    for _ in 0..n_meas {
        let (line_no, fields) = p.fields("MEASURE entry")?;
        if fields.len() != 1 {
            return Err(p.err(line_no, "measured rows hold one qubit index"));
        }
        measured_qubits.push(p.parse_field(line_no, fields[0])?);
    }

    let (line_no, fields) = p.fields("PARAMS or END")?;
    let params = if fields.len() == 2 && fields[0] == "PARAMS" {
        let count: usize = p.parse_field(line_no, fields[1])?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (line_no, fields) = p.fields("PARAMS entry")?;
            if fields.len() != 1 {
                return Err(p.err(line_no, "parameter rows hold one value"));
            }
            values.push(p.parse_finite(line_no, fields[0])?);
        }
        p.expect_exact("END")?;
        Some(ParameterVector { values })
    } else if fields.len() == 1 && fields[0] == "END" {
        None
    } else {
        return Err(p.err(line_no, "expected PARAMS section or END"));
    };

    let template = CircuitTemplate {
        n_qubits,
        embedding_slots,
        variational_slots,
        entanglers,
        measured_qubits,
    };
    template.validate()?;
    Ok((template, params))
}

pub fn write_file(
    path: &Path,
    template: &CircuitTemplate,
    params: Option<&ParameterVector>,
) -> Result<()> {
    std::fs::write(path, serialize(template, params))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_file(path: &Path) -> Result<(CircuitTemplate, Option<ParameterVector>)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    deserialize(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StateVector;

    fn sample_template() -> CircuitTemplate {
        CircuitTemplate {
            n_qubits: 2,
            embedding_slots: vec![
                RotationSlot { qubit: 0, axis: RotationAxis::Y },
                RotationSlot { qubit: 1, axis: RotationAxis::X },
            ],
            variational_slots: vec![
                RotationSlot { qubit: 0, axis: RotationAxis::Z },
                RotationSlot { qubit: 1, axis: RotationAxis::Y },
                RotationSlot { qubit: 0, axis: RotationAxis::X },
            ],
            entanglers: vec![Entangler { position: 1, control: 0, target: 1 }],
            measured_qubits: vec![0, 1],
        }
    }

    #[test]
    fn bind_orders_embedding_then_interleaved_variational() {
        let t = sample_template();
        let features = FeatureVector::new(vec![1.0, 2.0]).unwrap();
        let params = ParameterVector { values: vec![0.1, 0.2, 0.3] };
        let gates = t.bind(&features, &params).unwrap();
        assert_eq!(gates.len(), t.gate_count());
        assert_eq!(gates[0], GateOp::Ry { qubit: 0, angle: 1.0 });
        assert_eq!(gates[1], GateOp::Rx { qubit: 1, angle: 2.0 });
        assert_eq!(gates[2], GateOp::Rz { qubit: 0, angle: 0.1 });
        assert_eq!(gates[3], GateOp::Cnot { control: 0, target: 1 });
        assert_eq!(gates[4], GateOp::Ry { qubit: 1, angle: 0.2 });
        assert_eq!(gates[5], GateOp::Rx { qubit: 0, angle: 0.3 });
    }

    #[test]
    fn bind_single_slot_template() {
        let t = CircuitTemplate {
            n_qubits: 1,
            embedding_slots: vec![RotationSlot { qubit: 0, axis: RotationAxis::Y }],
            variational_slots: vec![],
            entanglers: vec![],
            measured_qubits: vec![0],
        };
        let gates = t
            .bind(
                &FeatureVector::new(vec![std::f64::consts::PI]).unwrap(),
                &ParameterVector::zeros(0),
            )
            .unwrap();
        assert_eq!(gates, vec![GateOp::Ry { qubit: 0, angle: std::f64::consts::PI }]);
    }

    #[test]
    fn bind_rejects_length_mismatch() {
        let t = sample_template();
        let features = FeatureVector::new(vec![1.0]).unwrap();
        let params = ParameterVector::zeros(3);
        assert!(t.bind(&features, &params).is_err());
    }

    #[test]
    fn zero_params_match_embedding_only_distribution() {
        let t = sample_template();
        let features = FeatureVector::new(vec![0.7, 1.3]).unwrap();
        let full = t.bind(&features, &ParameterVector::zeros(3)).unwrap();
        let embed_only: Vec<GateOp> = full[..2].to_vec();
        let s_full = StateVector::evolve(2, &full).unwrap();
        // CNOT after zero rotations still acts, so compare distributions of
        // the embedding circuit with the entangler applied in stream order.
        let mut with_ent = embed_only.clone();
        with_ent.push(GateOp::Cnot { control: 0, target: 1 });
        let s_ent = StateVector::evolve(2, &with_ent).unwrap();
        let p_full = s_full.marginal_probabilities(&[0, 1]).unwrap();
        let p_ent = s_ent.marginal_probabilities(&[0, 1]).unwrap();
        for (a, b) in p_full.iter().zip(&p_ent) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_replica_is_deterministic_and_snapped() {
        let t = sample_template();
        let a = t.clifford_replica(9);
        let b = t.clifford_replica(9);
        assert_eq!(a, b);
        assert_ne!(a, t.clifford_replica(10));
        for gate in &a {
            if let GateOp::Rx { angle, .. } | GateOp::Ry { angle, .. } | GateOp::Rz { angle, .. } =
                gate
            {
                let k = angle / std::f64::consts::FRAC_PI_2;
                assert!((k - k.round()).abs() < 1e-12);
                assert!((0.0..4.0).contains(&k));
            }
        }
    }

    #[test]
    fn clifford_replica_angles_are_uniform() {
        let t = CircuitTemplate {
            n_qubits: 2,
            embedding_slots: vec![],
            variational_slots: (0..100)
                .map(|i| RotationSlot { qubit: i % 2, axis: RotationAxis::Y })
                .collect(),
            entanglers: vec![],
            measured_qubits: vec![0, 1],
        };
        let mut counts = [0usize; 4];
        for replica in 0..32 {
            for gate in t.clifford_replica(1000 + replica) {
                if let GateOp::Ry { angle, .. } = gate {
                    let k = (angle / std::f64::consts::FRAC_PI_2).round() as usize;
                    counts[k] += 1;
                }
            }
        }
        let total: usize = counts.iter().sum();
        assert_eq!(total, 3200);
        for &c in &counts {
            let freq = c as f64 / total as f64;
            assert!((freq - 0.25).abs() < 0.05, "angle frequency {freq}");
        }
    }

    #[test]
    fn device_validation_flags_non_edges() {
        let mut dev = DeviceDescription::ideal(3);
        dev.coupling_edges = [(0, 1), (1, 2)].into_iter().collect();
        let mut t = sample_template();
        t.n_qubits = 3;
        t.entanglers = vec![Entangler { position: 0, control: 0, target: 2 }];
        let report = t.validate_against_device(&dev).unwrap_err();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].entangler_index, Some(0));

        // Edges are unordered: (1, 0) on edge {0, 1} is fine.
        t.entanglers = vec![Entangler { position: 0, control: 1, target: 0 }];
        assert!(t.validate_against_device(&dev).is_ok());

        t.entanglers = vec![];
        assert!(t.validate_against_device(&dev).is_ok());
    }

    #[test]
    fn serialize_round_trip() {
        let t = sample_template();
        let params = ParameterVector { values: vec![0.25, -1.5, 3.14159] };
        let text = serialize(&t, Some(&params));
        let (t2, p2) = deserialize(&text, "mem").unwrap();
        assert_eq!(t, t2);
        assert_eq!(Some(params), p2);

        let text_no_params = serialize(&t, None);
        let (t3, p3) = deserialize(&text_no_params, "mem").unwrap();
        assert_eq!(t, t3);
        assert!(p3.is_none());
    }

    #[test]
    fn deserialize_rejects_truncation_naming_section() {
        let t = sample_template();
        let text = serialize(&t, None);
        let cut: String = text
            .lines()
            .take_while(|l| !l.starts_with("ENTANGLE"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = deserialize(&cut, "mem").unwrap_err();
        assert!(err.to_string().contains("ENTANGLE"), "{err}");
    }

    #[test]
    fn deserialize_rejects_nan_params() {
        let t = sample_template();
        let mut text = serialize(&t, Some(&ParameterVector { values: vec![0.5] }));
        text = text.replace("0.5", "NaN");
        let err = deserialize(&text, "mem").unwrap_err();
        assert!(err.to_string().contains("NaN"), "{err}");
    }

    #[test]
    fn depth_counts_packed_layers() {
        // Two parallel rotations pack into one layer; CNOT forces a new one.
        let t = sample_template();
        // embed: RY(q0), RX(q1) → layer 1; RZ(q0) → layer 2 (q0 reused);
        // CNOT(0,1) → layer 3; RY(q1) → layer 4; RX(q0) packs into layer 4.
        assert_eq!(t.depth(), 4);
    }
}
