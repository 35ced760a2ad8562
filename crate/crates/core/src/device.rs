//! Backend device descriptions: qubit count, coupling edges, per-qubit
//! readout confusion and gate error figures.
//!
//! The text file format has four sections:
//!
//! ```text
//! QDEVICE v1
//! QUBITS 16
//! EDGES 16
//! 0 1
//! ...
//! READOUT 16
//! 0 0.99 0.02 0.01 0.98
//! ...
//! GATE_ERRORS
//! p_dep_1q 0.001
//! p_dep_2q 0.01
//! p_idle 0.002
//! epsilon_coherent 0.02
//! END
//! ```
//!
//! Readout rows list `qubit a00 a01 a10 a11` where `a[observed][true]`, so
//! each column (fixed true state) sums to 1.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// 2×2 readout confusion matrix, indexed `[observed][true]`. Columns are
/// stochastic: `m[0][t] + m[1][t] == 1` for each true state `t`.
pub type ConfusionMatrix = [[f64; 2]; 2];

/// Identity confusion (perfect readout).
pub const IDENTITY_CONFUSION: ConfusionMatrix = [[1.0, 0.0], [0.0, 1.0]];

/// Check non-negativity and column-stochasticity within 1e-9.
pub fn validate_confusion(m: &ConfusionMatrix) -> Result<()> {
    for col in 0..2 {
        let (a, b) = (m[0][col], m[1][col]);
        if a < 0.0 || b < 0.0 {
            return Err(Error::Validation(format!(
                "confusion matrix entries must be non-negative, got column ({a}, {b})"
            )));
        }
        if (a + b - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "confusion matrix column sums to {} instead of 1",
                a + b
            )));
        }
    }
    Ok(())
}

/// Confusion matrix from asymmetric flip rates: `f0 = P(observe 1 | true 0)`,
/// `f1 = P(observe 0 | true 1)`.
pub fn confusion_from_flip_rates(f0: f64, f1: f64) -> ConfusionMatrix {
    [[1.0 - f0, f1], [f0, 1.0 - f1]]
}

/// Static description of a quantum backend.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceDescription {
    pub n_qubits: usize,
    /// Unordered coupling edges, stored with the smaller index first.
    pub coupling_edges: BTreeSet<(usize, usize)>,
    /// One confusion matrix per qubit.
    pub readout_confusion: Vec<ConfusionMatrix>,
    pub p_dep_1q: f64,
    pub p_dep_2q: f64,
    pub p_idle: f64,
    pub epsilon_coherent: f64,
}

impl DeviceDescription {
    /// Noiseless fully-connected device, handy for tests.
    pub fn ideal(n_qubits: usize) -> Self {
        let mut edges = BTreeSet::new();
        for a in 0..n_qubits {
            for b in a + 1..n_qubits {
                edges.insert((a, b));
            }
        }
        DeviceDescription {
            n_qubits,
            coupling_edges: edges,
            readout_confusion: vec![IDENTITY_CONFUSION; n_qubits],
            p_dep_1q: 0.0,
            p_dep_2q: 0.0,
            p_idle: 0.0,
            epsilon_coherent: 0.0,
        }
    }

    /// Bundled 16-qubit heavy-hex fragment with representative NISQ error
    /// figures (readout flips 1–3%).
    pub fn heavy_hex_16() -> Self {
        let edge_list = [
            (0, 1),
            (1, 2),
            (1, 4),
            (2, 3),
            (3, 5),
            (4, 7),
            (5, 8),
            (6, 7),
            (7, 10),
            (8, 9),
            (8, 11),
            (10, 12),
            (11, 14),
            (12, 13),
            (12, 15),
            (13, 14),
        ];
        let readout_confusion = (0..16)
            .map(|q| {
                let f0 = 0.01 + 0.01 * ((q % 3) as f64);
                let f1 = f0 + 0.005;
                confusion_from_flip_rates(f0, f1)
            })
            .collect();
        DeviceDescription {
            n_qubits: 16,
            coupling_edges: edge_list.into_iter().collect(),
            readout_confusion,
            p_dep_1q: 0.001,
            p_dep_2q: 0.01,
            p_idle: 0.002,
            epsilon_coherent: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Validation("device must have at least one qubit".into()));
        }
        for &(a, b) in &self.coupling_edges {
            if a == b {
                return Err(Error::Validation(format!("self-loop edge on qubit {a}")));
            }
            if a >= self.n_qubits || b >= self.n_qubits {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references qubit outside 0..{}",
                    self.n_qubits
                )));
            }
        }
        if self.readout_confusion.len() != self.n_qubits {
            return Err(Error::Validation(format!(
                "expected {} readout matrices, got {}",
                self.n_qubits,
                self.readout_confusion.len()
            )));
        }
        for m in &self.readout_confusion {
            validate_confusion(m)?;
        }
        for (name, p) in [
            ("p_dep_1q", self.p_dep_1q),
            ("p_dep_2q", self.p_dep_2q),
            ("p_idle", self.p_idle),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !self.epsilon_coherent.is_finite() {
            return Err(Error::Validation("epsilon_coherent must be finite".into()));
        }
        Ok(())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.coupling_edges.contains(&(a.min(b), a.max(b)))
    }

    /// Mean of the two flip probabilities of one qubit.
    pub fn mean_readout_error(&self, qubit: usize) -> f64 {
        let m = &self.readout_confusion[qubit];
        (m[1][0] + m[0][1]) / 2.0
    }

    /// Induced sub-device over `qubits`, relabeled to 0..k in list order.
    pub fn restrict(&self, qubits: &[usize]) -> Result<DeviceDescription> {
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let position = |q: usize| qubits.iter().position(|&x| x == q);
        let mut edges = BTreeSet::new();
        for &(a, b) in &self.coupling_edges {
            if let (Some(i), Some(j)) = (position(a), position(b)) {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        Ok(DeviceDescription {
            n_qubits: qubits.len(),
            coupling_edges: edges,
            readout_confusion: qubits
                .iter()
                .map(|&q| self.readout_confusion[q])
                .collect(),
            p_dep_1q: self.p_dep_1q,
            p_dep_2q: self.p_dep_2q,
            p_idle: self.p_idle,
            epsilon_coherent: self.epsilon_coherent,
        })
    }

    /// True when the induced subgraph over `qubits` is connected.
    pub fn is_connected_subset(&self, qubits: &[usize]) -> bool {
        if qubits.is_empty() {
            return false;
        }
        if qubits.len() == 1 {
            return true;
        }
        let mut visited = vec![false; qubits.len()];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..qubits.len() {
                if !visited[j] && self.has_edge(qubits[i], qubits[j]) {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
        visited.iter().all(|&v| v)
    }

    /// Serialize to the QDEVICE v1 text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("QDEVICE v1\n");
        let _ = writeln!(out, "QUBITS {}", self.n_qubits);
        let _ = writeln!(out, "EDGES {}", self.coupling_edges.len());
        for &(a, b) in &self.coupling_edges {
            let _ = writeln!(out, "{a} {b}");
        }
        let _ = writeln!(out, "READOUT {}", self.n_qubits);
        for (q, m) in self.readout_confusion.iter().enumerate() {
            let _ = writeln!(out, "{q} {:?} {:?} {:?} {:?}", m[0][0], m[0][1], m[1][0], m[1][1]);
        }
        out.push_str("GATE_ERRORS\n");
        let _ = writeln!(out, "p_dep_1q {:?}", self.p_dep_1q);
        let _ = writeln!(out, "p_dep_2q {:?}", self.p_dep_2q);
        let _ = writeln!(out, "p_idle {:?}", self.p_idle);
        let _ = writeln!(out, "epsilon_coherent {:?}", self.epsilon_coherent);
        out.push_str("END\n");
        out
    }

    /// Parse the QDEVICE v1 text format. `origin` labels error messages.
    pub fn from_text(text: &str, origin: &str) -> Result<DeviceDescription> {
        let mut p = LineParser::new(text, origin);
        p.expect_exact("QDEVICE v1")?;
        let n_qubits = p.expect_tagged_usize("QUBITS")?;
        let n_edges = p.expect_tagged_usize("EDGES")?;
        let mut coupling_edges = BTreeSet::new();
        for _ in 0..n_edges {
            let (line_no, fields) = p.fields("EDGES entry")?;
            if fields.len() != 2 {
                return Err(p.err(line_no, "edge rows need exactly 2 qubit indices"));
            }
            let a: usize = p.parse_field(line_no, fields[0])?;
            let b: usize = p.parse_field(line_no, fields[1])?;
            coupling_edges.insert((a.min(b), a.max(b)));
        }
        let n_readout = p.expect_tagged_usize("READOUT")?;
        if n_readout != n_qubits {
            return Err(Error::Validation(format!(
                "READOUT declares {n_readout} rows for {n_qubits} qubits"
            )));
        }
        let mut readout_confusion = vec![IDENTITY_CONFUSION; n_qubits];
        for _ in 0..n_readout {
            let (line_no, fields) = p.fields("READOUT entry")?;
            if fields.len() != 5 {
                return Err(p.err(line_no, "readout rows are: qubit a00 a01 a10 a11"));
            }
            let q: usize = p.parse_field(line_no, fields[0])?;
            if q >= n_qubits {
                return Err(p.err(line_no, format!("qubit {q} out of range")));
            }
            let vals: Vec<f64> = fields[1..]
                .iter()
                .map(|f| p.parse_field(line_no, f))
                .collect::<Result<_>>()?;
            readout_confusion[q] = [[vals[0], vals[1]], [vals[2], vals[3]]];
        }
        p.expect_exact("GATE_ERRORS")?;
        let (mut p_dep_1q, mut p_dep_2q, mut p_idle, mut epsilon) = (0.0, 0.0, 0.0, 0.0);
        loop {
            let (line_no, fields) = p.fields("GATE_ERRORS entry or END")?;
            if fields.len() == 1 && fields[0] == "END" {
                break;
            }
            if fields.len() != 2 {
                return Err(p.err(line_no, "gate error rows are: name value"));
            }
            let value: f64 = p.parse_field(line_no, fields[1])?;
            match fields[0] {
                "p_dep_1q" => p_dep_1q = value,
                "p_dep_2q" => p_dep_2q = value,
                "p_idle" => p_idle = value,
                "epsilon_coherent" => epsilon = value,
                other => {
                    return Err(p.err(line_no, format!("unknown gate error field {other:?}")))
                }
            }
        }
        let device = DeviceDescription {
            n_qubits,
            coupling_edges,
            readout_confusion,
            p_dep_1q,
            p_dep_2q,
            p_idle,
            epsilon_coherent: epsilon,
        };
        device.validate()?;
        Ok(device)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_file(path: &Path) -> Result<DeviceDescription> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        DeviceDescription::from_text(&text, &path.display().to_string())
    }
}

/// Line-oriented parser shared by the text formats in this crate. Skips
/// blank lines and `#` comments, tracks line numbers for error context.
pub(crate) struct LineParser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: String,
}

impl<'a> LineParser<'a> {
    pub fn new(text: &'a str, origin: &str) -> Self {
        LineParser {
            lines: text.lines().enumerate(),
            origin: origin.to_string(),
        }
    }

    pub fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(&self.origin, line, msg)
    }

    /// Next content line split on whitespace; errors name `expected` when
    /// the document ends early.
    pub fn fields(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.lines.by_ref() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((idx + 1, line.split_whitespace().collect()));
        }
        Err(Error::parse(
            &self.origin,
            0,
            format!("unexpected end of document, missing {expected}"),
        ))
    }

    pub fn expect_exact(&mut self, tag: &str) -> Result<()> {
        let (line_no, fields) = self.fields(tag)?;
        if fields.join(" ") != tag {
            return Err(self.err(line_no, format!("expected {tag:?}")));
        }
        Ok(())
    }

    pub fn expect_tagged_usize(&mut self, tag: &str) -> Result<usize> {
        let (line_no, fields) = self.fields(tag)?;
        if fields.len() != 2 || fields[0] != tag {
            return Err(self.err(line_no, format!("expected \"{tag} <count>\"")));
        }
        self.parse_field(line_no, fields[1])
    }

    pub fn parse_field<T: std::str::FromStr>(&self, line: usize, field: &str) -> Result<T> {
        let value: T = field
            .parse()
            .map_err(|_| self.err(line, format!("cannot parse field {field:?}")))?;
        Ok(value)
    }

    /// Parse a float, rejecting NaN and infinities.
    pub fn parse_finite(&self, line: usize, field: &str) -> Result<f64> {
        let v: f64 = self.parse_field(line, field)?;
        if !v.is_finite() {
            return Err(self.err(line, format!("non-finite value {field:?}")));
        }
        Ok(v)
    }
}
