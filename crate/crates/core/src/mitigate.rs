//! Matrix-free readout-error mitigation.
//!
//! The full-register confusion matrix is the tensor product of per-qubit 2×2
//! matrices and never materializes. [`mitigate`] restricts the linear system
//! `A x = p` to the observed bitstring subspace S and solves it with a
//! diagonally preconditioned stationary iteration
//! `x_{k+1} = x_k + D⁻¹ (p − A|_S x_k)`, which converges geometrically while
//! the per-qubit flip rates stay below 50% (the restricted matrix is then
//! diagonally dominant). For small S the restricted matrix is cached; above
//! [`DENSE_CUTOFF`] rows are recomputed per matvec.
//!
//! Solutions are quasi-probabilities: small negative weights are preserved,
//! never clipped, and downstream expectation arithmetic is signed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::device::{validate_confusion, ConfusionMatrix, IDENTITY_CONFUSION};
use crate::error::{Error, Result};
use crate::sim::{outcome_index, CountsDistribution};

/// Per-qubit readout confusion matrices, indexed `[observed][true]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutCalibration {
    matrices: Vec<ConfusionMatrix>,
}

impl ReadoutCalibration {
    pub fn new(matrices: Vec<ConfusionMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Calibration("calibration has no qubits".into()));
        }
        for m in &matrices {
            validate_confusion(m)?;
        }
        Ok(ReadoutCalibration { matrices })
    }

    pub fn identity(n_qubits: usize) -> Self {
        ReadoutCalibration {
            matrices: vec![IDENTITY_CONFUSION; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[ConfusionMatrix] {
        &self.matrices
    }

    /// Calibration restricted to `qubits`, in list order. Used to line a
    /// full-register calibration up with a measured-qubit subset.
    pub fn select(&self, qubits: &[usize]) -> Result<ReadoutCalibration> {
        let matrices = qubits
            .iter()
            .map(|&q| {
                self.matrices.get(q).copied().ok_or(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.matrices.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ReadoutCalibration::new(matrices)
    }

    /// Text form: one `a00 a01 a10 a11` row per qubit.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# per-qubit readout confusion: a00 a01 a10 a11\n");
        for m in &self.matrices {
            let _ = writeln!(out, "{:?} {:?} {:?} {:?}", m[0][0], m[0][1], m[1][0], m[1][1]);
        }
        out
    }

    pub fn from_text(text: &str, origin: &str) -> Result<ReadoutCalibration> {
        let mut matrices = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    "calibration rows are: a00 a01 a10 a11",
                ));
            }
            let vals: Vec<f64> = fields
                .iter()
                .map(|f| {
                    f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        Error::parse(origin, idx + 1, format!("cannot parse {f:?}"))
                    })
                })
                .collect::<Result<_>>()?;
            matrices.push([[vals[0], vals[1]], [vals[2], vals[3]]]);
        }
        ReadoutCalibration::new(matrices)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_file(path: &Path) -> Result<ReadoutCalibration> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        ReadoutCalibration::from_text(&text, &path.display().to_string())
    }
}

/// Signed mitigated weights over the observed bitstrings, plus the raw total
/// they should sum back to (normalization audit).
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDistribution {
    n_measured: usize,
    entries: BTreeMap<String, f64>,
    raw_total: f64,
}

impl QuasiDistribution {
    pub fn n_measured(&self) -> usize {
        self.n_measured
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

    pub fn raw_total(&self) -> f64 {
        self.raw_total
    }

    /// Unmitigated pass-through: counts become probability weights. Lets the
    /// no-mitigation inference path share the expectation arithmetic.
    pub fn from_counts(counts: &CountsDistribution) -> QuasiDistribution {
        let scale = if counts.total_shots() > 0 {
            counts.total_shots() as f64
        } else {
            1.0
        };
        let entries: BTreeMap<String, f64> = counts
            .entries()
            .iter()
            .map(|(k, &v)| (k.clone(), v / scale))
            .collect();
        let raw_total = entries.values().sum();
        QuasiDistribution {
            n_measured: counts.n_measured(),
            entries,
            raw_total,
        }
    }

    pub fn from_entries(n_measured: usize, entries: BTreeMap<String, f64>) -> Result<Self> {
        for key in entries.keys() {
            if key.len() != n_measured {
                return Err(Error::Validation(format!(
                    "bitstring {key:?} has length {}, expected {n_measured}",
                    key.len()
                )));
            }
            outcome_index(key)?;
        }
        let raw_total = entries.values().sum();
        Ok(QuasiDistribution {
            n_measured,
            entries,
            raw_total,
        })
    }

    /// Text form used by the CLI.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("QQUASI v1\n");
        let _ = writeln!(out, "n_measured {}", self.n_measured);
        let _ = writeln!(out, "raw_total {:?}", self.raw_total);
        for (key, w) in &self.entries {
            let _ = writeln!(out, "{key} {w:?}");
        }
        out
    }
}

/// Above this subspace size the restricted matrix is not cached; matvec rows
/// are recomputed on demand.
pub const DENSE_CUTOFF: usize = 512;

/// Default residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 1000;

struct RestrictedSystem<'a> {
    outcomes: Vec<u64>,
    cal: &'a ReadoutCalibration,
    n_measured: usize,
    cached: Option<Vec<f64>>,
}

impl<'a> RestrictedSystem<'a> {
    fn new(outcomes: Vec<u64>, cal: &'a ReadoutCalibration, n_measured: usize) -> Self {
        let cached = (outcomes.len() <= DENSE_CUTOFF).then(|| {
            let k = outcomes.len();
            let mut m = vec![0.0; k * k];
            for (r, &s) in outcomes.iter().enumerate() {
                for (c, &t) in outcomes.iter().enumerate() {
                    m[r * k + c] = entry(cal, n_measured, s, t);
                }
            }
            m
        });
        RestrictedSystem {
            outcomes,
            cal,
            n_measured,
            cached,
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|&s| entry(self.cal, self.n_measured, s, s))
            .collect()
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let k = self.outcomes.len();
        let mut y = vec![0.0; k];
        if let Some(m) = &self.cached {
            for r in 0..k {
                let row = &m[r * k..(r + 1) * k];
                y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        } else {
            for (r, &s) in self.outcomes.iter().enumerate() {
                y[r] = self
                    .outcomes
                    .iter()
                    .zip(x)
                    .map(|(&t, &xv)| entry(self.cal, self.n_measured, s, t) * xv)
                    .sum();
            }
        }
        y
    }
}

/// A|_S entry: product over measured positions of the per-qubit confusion
/// element P(observe s_q | true t_q).
fn entry(cal: &ReadoutCalibration, n_measured: usize, s: u64, t: u64) -> f64 {
    let mut a = 1.0;
    for pos in 0..n_measured {
        let obs = (s >> pos & 1) as usize;
        let tru = (t >> pos & 1) as usize;
        a *= cal.matrices()[pos][obs][tru];
    }
    a
}

/// Solve the confusion system restricted to the observed bitstring set,
/// returning quasi-probability weights. `raw` may hold counts or
/// probabilities; calibration matrices are taken in measured-position order.
pub fn mitigate(
    raw: &CountsDistribution,
    cal: &ReadoutCalibration,
    tol: f64,
    max_iter: usize,
) -> Result<QuasiDistribution> {
    if raw.entries().is_empty() {
        return Err(Error::Validation("raw distribution is empty".into()));
    }
    if cal.n_qubits() < raw.n_measured() {
        return Err(Error::Calibration(format!(
            "calibration covers {} qubits but {} are measured",
            cal.n_qubits(),
            raw.n_measured()
        )));
    }
    if tol <= 0.0 || max_iter == 0 {
        return Err(Error::Validation(
            "tolerance must be positive and max_iter >= 1".into(),
        ));
    }

    let n_measured = raw.n_measured();
    let keys: Vec<&String> = raw.entries().keys().collect();
    let outcomes: Vec<u64> = keys
        .iter()
        .map(|k| outcome_index(k).expect("validated on construction"))
        .collect();
    let scale = if raw.total_shots() > 0 {
        raw.total_shots() as f64
    } else {
        1.0
    };
    let p: Vec<f64> = raw.entries().values().map(|&v| v / scale).collect();

    let system = RestrictedSystem::new(outcomes, cal, n_measured);
    let diag = system.diagonal();
    if let Some((i, &d)) = diag
        .iter()
        .enumerate()
        .find(|(_, &d)| d.abs() < f64::EPSILON)
    {
        return Err(Error::Calibration(format!(
            "zero diagonal entry for observed bitstring {:?} (flip rate of 1?)",
            keys[i]
        )));
    }

    let mut x = p.clone();
    let mut converged = false;
    let mut residual_norm = f64::INFINITY;
    for _ in 0..max_iter {
        let ax = system.matvec(&x);
        let mut r1 = 0.0;
        for i in 0..x.len() {
            let r = p[i] - ax[i];
            r1 += r.abs();
            x[i] += r / diag[i];
        }
        residual_norm = r1;
        if r1 < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            max_iter,
            residual: residual_norm,
        });
    }

    let entries: BTreeMap<String, f64> = keys
        .into_iter()
        .cloned()
        .zip(x)
        .collect();
    let raw_total = p.iter().sum();
    Ok(QuasiDistribution {
        n_measured,
        entries,
        raw_total,
    })
}

/// Per-qubit ⟨Z⟩ from signed weights: `P(q, m) = Σ_{bit q = m} w / Σ w`,
/// `⟨Z_q⟩ = P(q, 0) − P(q, 1)`. Values may leave [−1, 1] for genuine
/// quasi-distributions; that is expected and propagates downstream.
pub fn expectations_from_quasi(quasi: &QuasiDistribution) -> Result<Vec<f64>> {
    let total = quasi.total_weight();
    if total.abs() < 1e-9 {
        return Err(Error::DegenerateDistribution(total));
    }
    let n = quasi.n_measured();
    let mut z = vec![0.0; n];
    for (key, &w) in quasi.entries() {
        let idx = outcome_index(key).expect("validated on construction");
        for (pos, zq) in z.iter_mut().enumerate() {
            if idx >> pos & 1 == 0 {
                *zq += w;
            } else {
                *zq -= w;
            }
        }
    }
    for zq in z.iter_mut() {
        *zq /= total;
    }
    Ok(z)
}
