//! Device-aware circuit search.
//!
//! Candidates are generated connectivity-legal by construction on the best
//! available qubit subset, then ranked in two passes:
//!
//! 1. Clifford noise resilience (CNR): each candidate is snapped to M
//!    stabilizer replicas; per replica the noisy sampled distribution is
//!    compared to the analytic noiseless one via total variation distance,
//!    and CNR is the mean fidelity `1 − TVD`. Candidates below the CNR
//!    threshold are excluded from further evaluation.
//! 2. Representation capacity (RepCap): the survivors' state-fidelity
//!    similarity matrix over a stratified sample set is compared against the
//!    ideal class-block matrix.
//!
//! Survivors are ranked by the composite score `CNR^α · RepCap` (ties broken
//! by fewer gates, then candidate index).

use rayon::prelude::*;
use serde::Serialize;

use rand::Rng;

use crate::circuit::{
    CircuitTemplate, Entangler, FeatureVector, ParameterVector, RotationAxis, RotationSlot,
};
use crate::data::PreparedDataset;
use crate::device::DeviceDescription;
use crate::error::{Error, Result};
use crate::noise::{noisy_sample, NoiseModel};
use crate::seed::{derive_seed, rng_for, streams};
use crate::sim::{CountsDistribution, StateVector};

/// Search hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub n_candidates: usize,
    /// Clifford replicas per candidate (M).
    pub m_replicas: usize,
    /// Shots per replica when sampling the noisy distribution.
    pub replica_shots: u64,
    /// Candidates with CNR below this are excluded.
    pub cnr_threshold: f64,
    /// Exponent weighting CNR in the composite score.
    pub alpha_cnr: f64,
    /// Samples per class entering RepCap.
    pub d_c: usize,
    /// Random parameter draws averaged by RepCap.
    pub repcap_param_draws: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_candidates: 250,
            m_replicas: 32,
            replica_shots: 10_000,
            cnr_threshold: 0.7,
            alpha_cnr: 0.5,
            d_c: 16,
            repcap_param_draws: 8,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0
            || self.m_replicas == 0
            || self.replica_shots == 0
            || self.d_c == 0
            || self.repcap_param_draws == 0
        {
            return Err(Error::Config("all search counts must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.cnr_threshold) {
            return Err(Error::Config(format!(
                "cnr_threshold {} outside [0, 1]",
                self.cnr_threshold
            )));
        }
        if !self.alpha_cnr.is_finite() || self.alpha_cnr < 0.0 {
            return Err(Error::Config("alpha_cnr must be a non-negative number".into()));
        }
        Ok(())
    }
}

/// One scored candidate in the search ledger.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredCircuit {
    /// Index into the generated candidate list.
    pub index: usize,
    #[serde(skip)]
    pub template: CircuitTemplate,
    pub gate_count: usize,
    pub depth: usize,
    pub cnr: f64,
    /// Unset for candidates excluded by the CNR threshold.
    pub repcap: Option<f64>,
    pub f_score: Option<f64>,
    pub passed_threshold: bool,
}

/// Full search result: every candidate's row (survivors ranked first) and
/// the winning template, when any survived.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub rows: Vec<ScoredCircuit>,
    pub best: Option<CircuitTemplate>,
}

/// Candidate set plus the device restriction it was generated against.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub templates: Vec<CircuitTemplate>,
    /// Induced sub-device over the selected qubits, relabeled 0..n.
    pub sub_device: DeviceDescription,
    /// Physical qubit indices behind logical 0..n.
    pub physical_qubits: Vec<usize>,
}

/// Pick the connected `k`-qubit subset minimizing mean readout error, ties
/// broken by the lexicographically smallest index set. Exhaustive over all
/// subsets for devices up to 20 qubits; greedy expansion beyond that.
pub fn select_qubit_subset(device: &DeviceDescription, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > device.n_qubits {
        return Err(Error::Config(format!(
            "cannot select {k} qubits from a {}-qubit device",
            device.n_qubits
        )));
    }
    if device.n_qubits <= 20 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 0u32..1 << device.n_qubits {
            if mask.count_ones() as usize != k {
                continue;
            }
            let subset: Vec<usize> =
                (0..device.n_qubits).filter(|q| mask >> q & 1 == 1).collect();
            if !device.is_connected_subset(&subset) {
                continue;
            }
            let err: f64 = subset.iter().map(|&q| device.mean_readout_error(q)).sum::<f64>()
                / k as f64;
            let better = match &best {
                None => true,
                Some((e, s)) => err < *e - 1e-15 || ((err - e).abs() <= 1e-15 && subset < *s),
            };
            if better {
                best = Some((err, subset));
            }
        }
        best.map(|(_, s)| s).ok_or_else(|| {
            Error::Config(format!("device has no connected subgraph of {k} qubits"))
        })
    } else {
        // Greedy: grow from the lowest-error qubit, always adding the
        // lowest-error neighbor of the current set.
        let start = (0..device.n_qubits)
            .min_by(|&a, &b| {
                device
                    .mean_readout_error(a)
                    .partial_cmp(&device.mean_readout_error(b))
                    .unwrap()
            })
            .expect("non-empty device");
        let mut subset = vec![start];
        while subset.len() < k {
            let next = (0..device.n_qubits)
                .filter(|q| !subset.contains(q))
                .filter(|&q| subset.iter().any(|&s| device.has_edge(s, q)))
                .min_by(|&a, &b| {
                    device
                        .mean_readout_error(a)
                        .partial_cmp(&device.mean_readout_error(b))
                        .unwrap()
                });
            match next {
                Some(q) => subset.push(q),
                None => {
                    return Err(Error::Config(format!(
                        "device has no connected subgraph of {k} qubits"
                    )))
                }
            }
        }
        subset.sort_unstable();
        Ok(subset)
    }
}

/// Generate `config.n_candidates` connectivity-legal templates on the best
/// `n_qubits`-qubit subset of the device.
///
/// Per candidate: embedding slots visit qubits round-robin (the remainder
/// uniformly at random) with uniform axes; variational slots draw qubit and
/// axis uniformly; the entangler count is uniform in
/// `[n_qubits − 1, 2·n_qubits]`, each entangler sits on a uniform coupling
/// edge (uniform orientation) at a distinct uniform stream position. All
/// templates measure every qubit; the trainer narrows that to its
/// measurement plan.
pub fn generate_candidates(
    config: &SearchConfig,
    device: &DeviceDescription,
    n_qubits: usize,
    n_embed: usize,
    n_params: usize,
) -> Result<CandidateSet> {
    config.validate()?;
    device.validate()?;
    if n_qubits > crate::sim::MAX_QUBITS {
        return Err(Error::Config(format!(
            "n_qubits {n_qubits} exceeds simulator limit {}",
            crate::sim::MAX_QUBITS
        )));
    }
    let physical_qubits = select_qubit_subset(device, n_qubits)?;
    let sub_device = device.restrict(&physical_qubits)?;
    let edges: Vec<(usize, usize)> = sub_device.coupling_edges.iter().copied().collect();
    if edges.is_empty() && n_qubits > 1 {
        return Err(Error::Config(
            "selected subgraph has no coupling edges".into(),
        ));
    }

    let templates = (0..config.n_candidates)
        .map(|i| {
            let mut rng = rng_for(config.seed, streams::CANDIDATE + i as u64);
            let axis = |rng: &mut rand_chacha::ChaCha8Rng| match rng.gen_range(0..3u32) {
                0 => RotationAxis::X,
                1 => RotationAxis::Y,
                _ => RotationAxis::Z,
            };
            let full_rounds = n_embed / n_qubits * n_qubits;
            let embedding_slots: Vec<RotationSlot> = (0..n_embed)
                .map(|s| {
                    let qubit = if s < full_rounds {
                        s % n_qubits
                    } else {
                        rng.gen_range(0..n_qubits)
                    };
                    RotationSlot { qubit, axis: axis(&mut rng) }
                })
                .collect();
            let variational_slots: Vec<RotationSlot> = (0..n_params)
                .map(|_| RotationSlot {
                    qubit: rng.gen_range(0..n_qubits),
                    axis: axis(&mut rng),
                })
                .collect();
            let n_ent = if n_qubits == 1 {
                0
            } else {
                rng.gen_range(n_qubits - 1..=2 * n_qubits)
            };
            let stream_len = n_params + n_ent;
            // Distinct stream positions via partial Fisher-Yates.
            let mut positions: Vec<usize> = (0..stream_len).collect();
            for j in 0..n_ent {
                let swap = rng.gen_range(j..stream_len);
                positions.swap(j, swap);
            }
            let mut entanglers: Vec<Entangler> = (0..n_ent)
                .map(|j| {
                    let (a, b) = edges[rng.gen_range(0..edges.len())];
                    let (control, target) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
                    Entangler { position: positions[j], control, target }
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
        })
        .collect::<Vec<_>>();

    for t in &templates {
        t.validate()?;
        if let Err(report) = t.validate_against_device(&sub_device) {
            return Err(Error::Validation(format!(
                "generated candidate violates device constraints: {report}"
            )));
        }
    }

    Ok(CandidateSet {
        templates,
        sub_device,
        physical_qubits,
    })
}

/// Total variation distance `½ Σ |p_i − q_i|` between two probability
/// distributions over the same measured-qubit space. Missing keys count as
/// zero; inputs must each sum to 1 within 1e-6.
pub fn tvd(p: &CountsDistribution, q: &CountsDistribution) -> Result<f64> {
    if p.n_measured() != q.n_measured() {
        return Err(Error::Validation(format!(
            "distributions over {} and {} measured qubits",
            p.n_measured(),
            q.n_measured()
        )));
    }
    for (name, d) in [("first", p), ("second", q)] {
        if !d.is_probabilities() {
            return Err(Error::Validation(format!(
                "{name} argument holds counts; convert with into_probabilities()"
            )));
        }
        let total = d.total_weight();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "{name} argument sums to {total}, not 1"
            )));
        }
    }
    let mut acc = 0.0;
    for (key, &w) in p.entries() {
        acc += (w - q.weight(key)).abs();
    }
    for (key, &w) in q.entries() {
        if p.entries().get(key).is_none() {
            acc += w.abs();
        }
    }
    Ok(acc / 2.0)
}

/// Clifford noise resilience: mean over M replicas of `1 − TVD(noiseless,
/// noisy)`. Replica angle seeds and sampling seeds derive from
/// `config.seed` plus the replica index, so CNR is deterministic and
/// identical replica families are reused across candidates.
pub fn cnr(template: &CircuitTemplate, noise: &NoiseModel, config: &SearchConfig) -> Result<f64> {
    config.validate()?;
    let measured = &template.measured_qubits;
    let fidelities: Vec<f64> = (0..config.m_replicas)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let gates =
                template.clifford_replica(derive_seed(config.seed, streams::REPLICA + i as u64));
            let ideal = StateVector::evolve(template.n_qubits, &gates)?
                .exact_probabilities(measured)?;
            let sampled = noisy_sample(
                &gates,
                measured,
                config.replica_shots,
                noise,
                derive_seed(config.seed, streams::REPLICA_SAMPLE + i as u64),
            )?
            .into_probabilities();
            Ok(1.0 - tvd(&ideal, &sampled)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fidelities.iter().sum::<f64>() / fidelities.len() as f64)
}

/// Representation capacity (fidelity kernel).
///
/// Over a stratified pick of `d_c` training samples per class and
/// `repcap_param_draws` random parameter vectors, the similarity matrix
/// `R_C(i,j) = mean_t |⟨ψ_i(θ_t)|ψ_j(θ_t)⟩|²` is compared against the ideal
/// class-block matrix: `1 − ‖R_C − R_ref‖²_F / (2 n_c d_c²)`. The result can
/// be negative for adversarial similarity structure; it is not clamped.
pub fn repcap(
    template: &CircuitTemplate,
    dataset: &PreparedDataset,
    config: &SearchConfig,
) -> Result<f64> {
    config.validate()?;
    let indices = dataset.stratified_train_indices(
        config.d_c,
        derive_seed(config.seed, streams::REPCAP_SELECT),
    )?;
    let n_c = dataset.n_classes;
    let d_c = config.d_c;
    let n = indices.len();
    debug_assert_eq!(n, n_c * d_c);

    let mut r_c = vec![0.0f64; n * n];
    for t in 0..config.repcap_param_draws {
        let mut rng = rng_for(config.seed, streams::REPCAP_PARAMS + t as u64);
        let params = ParameterVector {
            values: (0..template.n_params())
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect(),
        };
        let states: Vec<StateVector> = indices
            .iter()
            .map(|&i| {
                let gates = template.bind(&dataset.samples[i].features, &params)?;
                StateVector::evolve(template.n_qubits, &gates)
            })
            .collect::<Result<Vec<_>>>()?;
        for i in 0..n {
            r_c[i * n + i] += 1.0; // |⟨ψ|ψ⟩|² = 1 for normalized states
            for j in i + 1..n {
                let f = states[i].fidelity(&states[j])?;
                r_c[i * n + j] += f;
                r_c[j * n + i] += f;
            }
        }
    }
    let draws = config.repcap_param_draws as f64;
    let mut frob_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let same_class =
                dataset.samples[indices[i]].label == dataset.samples[indices[j]].label;
            let reference = if same_class { 1.0 } else { 0.0 };
            let diff = r_c[i * n + j] / draws - reference;
            frob_sq += diff * diff;
        }
    }
    Ok(1.0 - frob_sq / (2.0 * n_c as f64 * (d_c * d_c) as f64))
}

/// Composite score `CNR^α × RepCap`.
pub fn f_score(cnr: f64, repcap: f64, alpha_cnr: f64) -> f64 {
    cnr.powf(alpha_cnr) * repcap
}

/// Score all candidates and rank the threshold survivors by F-score
/// (descending), ties broken by fewer gates, then lower candidate index.
/// Excluded candidates keep their CNR but no RepCap, and sort after the
/// survivors by index. An empty survivor set yields `best: None`.
pub fn score_and_select(
    candidates: &[CircuitTemplate],
    noise: &NoiseModel,
    dataset: &PreparedDataset,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    if candidates.is_empty() {
        return Err(Error::Validation("candidate list is empty".into()));
    }
    let cnrs: Vec<f64> = candidates
        .par_iter()
        .map(|t| cnr(t, noise, config))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(candidates.len());
    for (index, template) in candidates.iter().enumerate() {
        let cnr_value = cnrs[index];
        let passed = cnr_value >= config.cnr_threshold;
        let repcap_value = if passed {
            Some(repcap(template, dataset, config)?)
        } else {
            None
        };
        rows.push(ScoredCircuit {
            index,
            template: template.clone(),
            gate_count: template.gate_count(),
            depth: template.depth(),
            cnr: cnr_value,
            repcap: repcap_value,
            f_score: repcap_value.map(|r| f_score(cnr_value, r, config.alpha_cnr)),
            passed_threshold: passed,
        });
    }

    rows.sort_by(|a, b| match (a.f_score, b.f_score) {
        (Some(fa), Some(fb)) => fb
            .partial_cmp(&fa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.gate_count.cmp(&b.gate_count))
            .then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });

    let best = rows
        .first()
        .filter(|r| r.passed_threshold)
        .map(|r| r.template.clone());
    Ok(SearchOutcome { rows, best })
}

/// Human-readable ledger table, one row per candidate in rank order.
pub fn render_report_text(outcome: &SearchOutcome, config: &SearchConfig) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# candidates={} m_replicas={} replica_shots={} cnr_threshold={} alpha_cnr={} d_c={} seed={}",
        outcome.rows.len(),
        config.m_replicas,
        config.replica_shots,
        config.cnr_threshold,
        config.alpha_cnr,
        config.d_c,
        config.seed
    );
    let _ = writeln!(
        out,
        "{:>5} {:>6} {:>6} {:>8} {:>8} {:>9} {:>9}",
        "index", "gates", "depth", "cnr", "repcap", "f_score", "excluded"
    );
    for r in &outcome.rows {
        let fmt_opt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:>5} {:>6} {:>6} {:>8.4} {:>8} {:>9} {:>9}",
            r.index,
            r.gate_count,
            r.depth,
            r.cnr,
            fmt_opt(r.repcap),
            fmt_opt(r.f_score),
            if r.passed_threshold { "no" } else { "yes" }
        );
    }
    out
}

/// Machine-readable ledger (JSON array in rank order).
pub fn render_report_json(outcome: &SearchOutcome) -> String {
    serde_json::to_string_pretty(&outcome.rows).expect("rows serialize")
}
