//! Classical optimization of circuit parameters.
//!
//! Training runs on analytic (noiseless) expectations. Losses follow the
//! class-count rule — one measured qubit and MSE against ±1 targets for two
//! classes, two qubits with bit-corner targets for four, one qubit per class
//! with cross-entropy otherwise. Gradients come from adjoint statevector
//! differentiation by default (one forward plus one reverse sweep for all
//! parameters); the parameter-shift rule is retained as an independent
//! cross-check route.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{CircuitTemplate, FeatureVector, ParameterVector};
use crate::data::PreparedDataset;
use crate::error::{Error, Result};
use crate::seed::{rng_for, streams};
use crate::sim::{GateOp, Pauli, StateVector};

/// How many qubits are measured for a class count: 1 for binary, 2 for
/// four-class, one per class otherwise.
pub fn measured_count_for(n_classes: usize) -> Result<usize> {
    match n_classes {
        0 | 1 => Err(Error::Config(format!(
            "classification needs at least 2 classes, got {n_classes}"
        ))),
        2 => Ok(1),
        4 => Ok(2),
        m => Ok(m),
    }
}

/// Measured-qubit selection and target encoding for one class count.
///
/// Binary labels map to ⟨Z⟩ targets −1 (class 0) and +1 (class 1). Four-way
/// labels map their bits (b1, b0) to targets (1−2·b1, 1−2·b0) on the two
/// measured qubits. Multi-class targets are one-hot in ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub n_classes: usize,
    pub measured_qubits: Vec<usize>,
}

impl MeasurementPlan {
    /// Plan for a template: the last k entries of its measured list, where k
    /// follows the class-count rule.
    pub fn for_template(n_classes: usize, template: &CircuitTemplate) -> Result<Self> {
        let k = measured_count_for(n_classes)?;
        if template.measured_qubits.len() < k {
            return Err(Error::Config(format!(
                "template measures {} qubits but {n_classes} classes need {k}",
                template.measured_qubits.len()
            )));
        }
        let measured_qubits =
            template.measured_qubits[template.measured_qubits.len() - k..].to_vec();
        Ok(MeasurementPlan {
            n_classes,
            measured_qubits,
        })
    }

    pub fn n_measured(&self) -> usize {
        self.measured_qubits.len()
    }

    /// ±1 target vector for MSE training.
    pub fn mse_target(&self, label: usize) -> Result<Vec<f64>> {
        if label >= self.n_classes {
            return Err(Error::Validation(format!(
                "label {label} >= n_classes {}",
                self.n_classes
            )));
        }
        Ok(match self.n_classes {
            2 => vec![2.0 * label as f64 - 1.0],
            4 => {
                let b1 = (label >> 1 & 1) as f64;
                let b0 = (label & 1) as f64;
                vec![1.0 - 2.0 * b1, 1.0 - 2.0 * b0]
            }
            _ => (0..self.n_measured())
                .map(|i| if i == label { 1.0 } else { -1.0 })
                .collect(),
        })
    }

    /// Predicted class from an expectation vector: sign rule for binary
    /// (⟨Z⟩ = 0 falls to class 0 and is counted incorrect by the accuracy
    /// rule), nearest ±1 corner for four classes, argmax otherwise. Ties
    /// break toward the lower class index.
    pub fn predict(&self, expectations: &[f64]) -> usize {
        match self.n_classes {
            2 => usize::from(expectations[0] > 0.0),
            4 => {
                let mut best = (f64::INFINITY, 0usize);
                for class in 0..4 {
                    let target = self.mse_target(class).expect("class in range");
                    let d2: f64 = expectations
                        .iter()
                        .zip(&target)
                        .map(|(e, t)| (e - t) * (e - t))
                        .sum();
                    if d2 < best.0 {
                        best = (d2, class);
                    }
                }
                best.1
            }
            _ => {
                let mut best = (f64::NEG_INFINITY, 0usize);
                for (i, &e) in expectations.iter().enumerate() {
                    if e > best.0 {
                        best = (e, i);
                    }
                }
                best.1
            }
        }
    }

    /// Per-class score vector (length `n_classes`) for AUC computation:
    /// binary keeps the raw ⟨Z⟩ margin handling outside, four-class scores
    /// are negative squared corner distances, multi-class passes the
    /// expectations through.
    pub fn class_scores(&self, expectations: &[f64]) -> Vec<f64> {
        match self.n_classes {
            2 => vec![-expectations[0], expectations[0]],
            4 => (0..4)
                .map(|class| {
                    let target = self.mse_target(class).expect("class in range");
                    -expectations
                        .iter()
                        .zip(&target)
                        .map(|(e, t)| (e - t) * (e - t))
                        .sum::<f64>()
                })
                .collect(),
            _ => expectations.to_vec(),
        }
    }
}

/// Loss selection. `Auto` resolves by class count: MSE for 2 and 4 classes,
/// cross-entropy otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Auto,
    Mse,
    CrossEntropy,
}

impl LossKind {
    pub fn resolve(self, n_classes: usize) -> LossKind {
        match self {
            LossKind::Auto => {
                if n_classes == 2 || n_classes == 4 {
                    LossKind::Mse
                } else {
                    LossKind::CrossEntropy
                }
            }
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LossKind::Auto => "auto",
            LossKind::Mse => "mse",
            LossKind::CrossEntropy => "cross-entropy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    Adjoint,
    ParameterShift,
}

impl GradientMode {
    pub fn label(self) -> &'static str {
        match self {
            GradientMode::Adjoint => "adjoint",
            GradientMode::ParameterShift => "parameter-shift",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss_kind: LossKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub gradient_mode: GradientMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 128,
            loss_kind: LossKind::Auto,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            gradient_mode: GradientMode::Adjoint,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!(
                "learning_rate {} must be non-negative",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Analytic forward pass: one ⟨Z⟩ per measured qubit.
pub fn forward(
    template: &CircuitTemplate,
    measured: &[usize],
    params: &ParameterVector,
    features: &FeatureVector,
) -> Result<Vec<f64>> {
    let gates = template.bind(features, params)?;
    let state = StateVector::evolve(template.n_qubits, &gates)?;
    measured.iter().map(|&q| state.expectation_z(q)).collect()
}

/// Loss of one sample given its expectation vector.
pub fn loss(
    expectations: &[f64],
    label: usize,
    plan: &MeasurementPlan,
    kind: LossKind,
) -> Result<f64> {
    if label >= plan.n_classes {
        return Err(Error::Validation(format!(
            "label {label} >= n_classes {}",
            plan.n_classes
        )));
    }
    match kind.resolve(plan.n_classes) {
        LossKind::Mse => {
            let target = plan.mse_target(label)?;
            Ok(expectations
                .iter()
                .zip(&target)
                .map(|(e, t)| (e - t) * (e - t))
                .sum::<f64>()
                / expectations.len() as f64)
        }
        LossKind::CrossEntropy => {
            if expectations.len() != plan.n_classes {
                return Err(Error::Validation(format!(
                    "cross-entropy needs one score per class: {} scores, {} classes",
                    expectations.len(),
                    plan.n_classes
                )));
            }
            let probs = softmax(expectations);
            Ok(-probs[label].max(f64::MIN_POSITIVE).ln())
        }
        LossKind::Auto => unreachable!("resolved above"),
    }
}

/// ∂loss/∂⟨Z_j⟩ for the chain rule.
fn loss_grad_wrt_expectations(
    expectations: &[f64],
    label: usize,
    plan: &MeasurementPlan,
    kind: LossKind,
) -> Result<Vec<f64>> {
    match kind.resolve(plan.n_classes) {
        LossKind::Mse => {
            let target = plan.mse_target(label)?;
            let k = expectations.len() as f64;
            Ok(expectations
                .iter()
                .zip(&target)
                .map(|(e, t)| 2.0 * (e - t) / k)
                .collect())
        }
        LossKind::CrossEntropy => {
            let probs = softmax(expectations);
            Ok(probs
                .iter()
                .enumerate()
                .map(|(j, &p)| p - f64::from(u8::from(j == label)))
                .collect())
        }
        LossKind::Auto => unreachable!("resolved above"),
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn rotation_pauli(gate: &GateOp) -> Option<(Pauli, usize)> {
    match *gate {
        GateOp::Rx { qubit, .. } => Some((Pauli::X, qubit)),
        GateOp::Ry { qubit, .. } => Some((Pauli::Y, qubit)),
        GateOp::Rz { qubit, .. } => Some((Pauli::Z, qubit)),
        _ => None,
    }
}

/// Loss and gradient of one sample via adjoint differentiation: forward to
/// |ψ⟩, seed the costate with the loss-weighted Z observable, then sweep the
/// circuit backwards accumulating Im⟨λ|P|φ⟩ per parameterized rotation.
fn adjoint_sample_gradient(
    template: &CircuitTemplate,
    plan: &MeasurementPlan,
    params: &ParameterVector,
    features: &FeatureVector,
    label: usize,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    let (gates, origins) = template.bind_with_origins(features, params)?;
    let mut phi = StateVector::evolve(template.n_qubits, &gates)?;
    let expectations: Vec<f64> = plan
        .measured_qubits
        .iter()
        .map(|&q| phi.expectation_z(q))
        .collect::<Result<Vec<_>>>()?;
    let sample_loss = loss(&expectations, label, plan, kind)?;
    let weights = loss_grad_wrt_expectations(&expectations, label, plan, kind)?;

    // λ = O_eff |ψ⟩ with O_eff = Σ_j w_j Z_{q_j}, diagonal in the Z basis.
    let mut lambda_amps = phi.amplitudes().to_vec();
    for (i, amp) in lambda_amps.iter_mut().enumerate() {
        let mut diag = 0.0;
        for (&q, &w) in plan.measured_qubits.iter().zip(&weights) {
            diag += if i >> q & 1 == 0 { w } else { -w };
        }
        *amp *= diag;
    }

    let mut grad = vec![0.0; params.len()];
    let mut lambda = StateVector::from_amplitudes_unnormalized(lambda_amps);
    for (gate, origin) in gates.iter().zip(&origins).rev() {
        if let Some(param_index) = origin {
            let (pauli, qubit) = rotation_pauli(gate).expect("origins mark rotations only");
            let mut p_phi = phi.clone();
            p_phi.apply_pauli(pauli, qubit)?;
            grad[*param_index] += lambda.inner_product(&p_phi)?.im;
        }
        phi.apply_inverse(gate)?;
        lambda.apply_inverse(gate)?;
    }
    Ok((sample_loss, grad))
}

/// Loss and gradient of one sample via the parameter-shift rule:
/// d⟨Z⟩/dθ_k = ½ [f(θ_k + π/2) − f(θ_k − π/2)], chained through the loss.
fn parameter_shift_sample_gradient(
    template: &CircuitTemplate,
    plan: &MeasurementPlan,
    params: &ParameterVector,
    features: &FeatureVector,
    label: usize,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    let expectations = forward(template, &plan.measured_qubits, params, features)?;
    let sample_loss = loss(&expectations, label, plan, kind)?;
    let weights = loss_grad_wrt_expectations(&expectations, label, plan, kind)?;
    let mut grad = vec![0.0; params.len()];
    let mut shifted = params.clone();
    for k in 0..params.len() {
        let original = shifted.values[k];
        shifted.values[k] = original + std::f64::consts::FRAC_PI_2;
        let plus = forward(template, &plan.measured_qubits, &shifted, features)?;
        shifted.values[k] = original - std::f64::consts::FRAC_PI_2;
        let minus = forward(template, &plan.measured_qubits, &shifted, features)?;
        shifted.values[k] = original;
        grad[k] = weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * (plus[j] - minus[j]) / 2.0)
            .sum();
    }
    Ok((sample_loss, grad))
}

/// Mean loss and mean gradient over a batch of (features, label) samples.
pub fn gradient(
    template: &CircuitTemplate,
    plan: &MeasurementPlan,
    params: &ParameterVector,
    batch: &[(&FeatureVector, usize)],
    kind: LossKind,
    mode: GradientMode,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Validation("gradient batch is empty".into()));
    }
    let per_sample: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|(features, label)| match mode {
            GradientMode::Adjoint => {
                adjoint_sample_gradient(template, plan, params, features, *label, kind)
            }
            GradientMode::ParameterShift => {
                parameter_shift_sample_gradient(template, plan, params, features, *label, kind)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n = batch.len() as f64;
    let mut total_loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (sample_loss, sample_grad) in per_sample {
        total_loss += sample_loss;
        for (g, s) in grad.iter_mut().zip(sample_grad) {
            *g += s;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((total_loss / n, grad))
}

/// Adam optimizer with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: usize,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, config: &TrainConfig) -> Self {
        Adam {
            lr: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

/// Everything needed to resume training mid-run with an identical
/// trajectory: parameters, Adam moments, epoch counter, and the
/// best-so-far checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub adam_step: usize,
    pub completed_epochs: usize,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub best_params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    /// Best-by-validation-AUC parameters (the checkpoint to keep).
    pub best_params: ParameterVector,
    /// Parameters after the final epoch.
    pub final_params: ParameterVector,
    pub history: TrainHistory,
    pub state: TrainState,
    pub plan: MeasurementPlan,
}

/// Train from scratch. See [`train_from`] for resuming.
pub fn train(
    template: &CircuitTemplate,
    dataset: &PreparedDataset,
    plan: &MeasurementPlan,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    train_from(template, dataset, plan, config, None)
}

/// Epoch loop: seeded shuffle per epoch, Adam updates per batch, per-epoch
/// train loss plus validation accuracy/AUC, best-by-validation-AUC
/// checkpointing. A stratified 10% of the training split (at least one
/// sample per class) is held out for validation. Aborts with a diagnostic
/// if the loss leaves the reals.
pub fn train_from(
    template: &CircuitTemplate,
    dataset: &PreparedDataset,
    plan: &MeasurementPlan,
    config: &TrainConfig,
    resume: Option<TrainState>,
) -> Result<TrainOutput> {
    config.validate()?;
    template.validate()?;
    if dataset.n_classes != plan.n_classes {
        return Err(Error::Config(format!(
            "dataset has {} classes, plan expects {}",
            dataset.n_classes, plan.n_classes
        )));
    }
    let kind = config.loss_kind.resolve(plan.n_classes);

    // Stratified validation holdout: ~10% of training samples per class,
    // at least one each, under a seeded shuffle.
    let mut val_indices: Vec<usize> = Vec::new();
    let mut pool: Vec<usize> = Vec::new();
    {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); plan.n_classes];
        for (i, s) in dataset.samples.iter().enumerate() {
            if s.split == crate::data::Split::Train {
                by_class[s.label].push(i);
            }
        }
        let mut rng = rng_for(config.seed, streams::VALIDATION_SPLIT);
        for (class, mut indices) in by_class.into_iter().enumerate() {
            if indices.is_empty() {
                return Err(Error::Validation(format!(
                    "class {class} has no training samples"
                )));
            }
            indices.shuffle(&mut rng);
            if indices.len() == 1 {
                // Too small to split; keep the sample for training.
                pool.push(indices[0]);
                continue;
            }
            let n_val = ((indices.len() as f64 * 0.1).round() as usize)
                .clamp(1, indices.len() - 1);
            val_indices.extend_from_slice(&indices[..n_val]);
            pool.extend_from_slice(&indices[n_val..]);
        }
        val_indices.sort_unstable();
        pool.sort_unstable();
    }
    if pool.is_empty() {
        return Err(Error::Validation("no training samples left after holdout".into()));
    }

    let n_params = template.n_params();
    let (mut params, mut adam, start_epoch, mut best_epoch, mut best_val_auc, mut best_params) =
        match resume {
            Some(state) => {
                if state.params.len() != n_params {
                    return Err(Error::Config(format!(
                        "resume state has {} params, template needs {n_params}",
                        state.params.len()
                    )));
                }
                let mut adam = Adam::new(n_params, config);
                adam.m = state.adam_m;
                adam.v = state.adam_v;
                adam.step = state.adam_step;
                (
                    state.params,
                    adam,
                    state.completed_epochs,
                    state.best_epoch,
                    state.best_val_auc,
                    state.best_params,
                )
            }
            None => {
                let mut rng = rng_for(config.seed, streams::PARAM_INIT);
                let params: Vec<f64> = (0..n_params)
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect();
                let best = params.clone();
                (params, Adam::new(n_params, config), 0, 0, f64::NEG_INFINITY, best)
            }
        };

    let mut history = TrainHistory::default();
    for epoch in start_epoch..config.epochs {
        let mut order = pool.clone();
        order.shuffle(&mut rng_for(config.seed, streams::EPOCH_SHUFFLE + epoch as u64));

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&FeatureVector, usize)> = chunk
                .iter()
                .map(|&i| (&dataset.samples[i].features, dataset.samples[i].label))
                .collect();
            let pv = ParameterVector { values: params.clone() };
            let (batch_loss, grad) =
                gradient(template, plan, &pv, &batch, kind, config.gradient_mode)?;
            if !batch_loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss is not finite at epoch {}, batch {batch_no}",
                    epoch + 1
                )));
            }
            loss_sum += batch_loss * chunk.len() as f64;
            loss_count += chunk.len();
            adam.update(&mut params, &grad);
        }

        let (val_acc, val_auc) = evaluate_split(template, plan, &params, dataset, &val_indices)?;
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / loss_count as f64,
            val_acc,
            val_auc,
        });
        if val_auc > best_val_auc {
            best_val_auc = val_auc;
            best_epoch = epoch + 1;
            best_params = params.clone();
        }
    }

    if best_val_auc == f64::NEG_INFINITY {
        // Validation AUC was never defined (degenerate holdout); fall back
        // to the final parameters.
        best_params = params.clone();
        best_epoch = config.epochs;
    }

    let state = TrainState {
        params: params.clone(),
        adam_m: adam.m.clone(),
        adam_v: adam.v.clone(),
        adam_step: adam.step,
        completed_epochs: config.epochs,
        best_epoch,
        best_val_auc,
        best_params: best_params.clone(),
    };
    Ok(TrainOutput {
        best_params: ParameterVector { values: best_params },
        final_params: ParameterVector { values: params },
        history,
        state,
        plan: plan.clone(),
    })
}

/// Accuracy and AUC of `params` on the given sample indices. Degenerate
/// splits (empty, or missing a class) yield NaN AUC rather than an error.
fn evaluate_split(
    template: &CircuitTemplate,
    plan: &MeasurementPlan,
    params: &[f64],
    dataset: &PreparedDataset,
    indices: &[usize],
) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let pv = ParameterVector { values: params.to_vec() };
    let rows: Vec<Vec<f64>> = indices
        .par_iter()
        .map(|&i| forward(template, &plan.measured_qubits, &pv, &dataset.samples[i].features))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = indices.iter().map(|&i| dataset.samples[i].label).collect();
    let acc = crate::metrics::accuracy(&rows, &labels, plan)?;
    let auc = if plan.n_classes == 2 {
        let scores: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        crate::metrics::auc_binary(&scores, &labels)
    } else {
        let score_rows: Vec<Vec<f64>> = rows.iter().map(|r| plan.class_scores(r)).collect();
        crate::metrics::auc_multiclass(
            &score_rows,
            &labels,
            plan.n_classes,
            crate::metrics::AucAverage::Macro,
        )
    };
    let auc = match auc {
        Ok(v) => v,
        Err(Error::UndefinedAuc(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok((acc, auc))
}

// ---------------------------------------------------------------------------
// TRAINSTATE v1 persistence (resume support)
// ---------------------------------------------------------------------------

pub fn state_to_text(state: &TrainState) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("TRAINSTATE v1\n");
    let _ = writeln!(out, "completed_epochs {}", state.completed_epochs);
    let _ = writeln!(out, "adam_step {}", state.adam_step);
    let _ = writeln!(out, "best_epoch {}", state.best_epoch);
    let _ = writeln!(out, "best_val_auc {:?}", state.best_val_auc);
    for (tag, values) in [
        ("PARAMS", &state.params),
        ("ADAM_M", &state.adam_m),
        ("ADAM_V", &state.adam_v),
        ("BEST_PARAMS", &state.best_params),
    ] {
        let _ = writeln!(out, "{tag} {}", values.len());
        for v in values {
            let _ = writeln!(out, "{v:?}");
        }
    }
    out.push_str("END\n");
    out
}

pub fn state_from_text(text: &str, origin: &str) -> Result<TrainState> {
    use crate::device::LineParser;
    let mut p = LineParser::new(text, origin);
    p.expect_exact("TRAINSTATE v1")?;
    let scalar = |p: &mut LineParser, tag: &str| -> Result<String> {
        let (line_no, fields) = p.fields(tag)?;
        if fields.len() != 2 || fields[0] != tag {
            return Err(p.err(line_no, format!("expected \"{tag} <value>\"")));
        }
        Ok(fields[1].to_string())
    };
    let completed_epochs: usize = scalar(&mut p, "completed_epochs")?
        .parse()
        .map_err(|_| Error::parse(origin, 0, "bad completed_epochs"))?;
    let adam_step: usize = scalar(&mut p, "adam_step")?
        .parse()
        .map_err(|_| Error::parse(origin, 0, "bad adam_step"))?;
    let best_epoch: usize = scalar(&mut p, "best_epoch")?
        .parse()
        .map_err(|_| Error::parse(origin, 0, "bad best_epoch"))?;
    let best_val_auc: f64 = scalar(&mut p, "best_val_auc")?
        .parse()
        .map_err(|_| Error::parse(origin, 0, "bad best_val_auc"))?;
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for tag in ["PARAMS", "ADAM_M", "ADAM_V", "BEST_PARAMS"] {
        let count = p.expect_tagged_usize(tag)?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (line_no, fields) = p.fields(&format!("{tag} entry"))?;
            if fields.len() != 1 {
                return Err(p.err(line_no, "vector rows hold one value"));
            }
            values.push(p.parse_field::<f64>(line_no, fields[0])?);
        }
        vectors.push(values);
    }
    p.expect_exact("END")?;
    let best_params = vectors.pop().unwrap();
    let adam_v = vectors.pop().unwrap();
    let adam_m = vectors.pop().unwrap();
    let params = vectors.pop().unwrap();
    Ok(TrainState {
        params,
        adam_m,
        adam_v,
        adam_step,
        completed_epochs,
        best_epoch,
        best_val_auc,
        best_params,
    })
}

/// Render the per-epoch history table (no timestamp; callers prepend one).
pub fn history_to_text(history: &TrainHistory, config: &TrainConfig, plan: &MeasurementPlan) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("TRAINHISTORY v1\n");
    let _ = writeln!(
        out,
        "epochs {} learning_rate {:?} batch_size {} loss {} gradient {} seed {} n_classes {}",
        config.epochs,
        config.learning_rate,
        config.batch_size,
        config.loss_kind.resolve(plan.n_classes).label(),
        config.gradient_mode.label(),
        config.seed,
        plan.n_classes
    );
    out.push_str("epoch train_loss val_acc val_auc\n");
    for r in &history.records {
        let _ = writeln!(
            out,
            "{} {:?} {:?} {:?}",
            r.epoch, r.train_loss, r.val_acc, r.val_auc
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{RotationAxis, RotationSlot};
    use crate::data::{prepare, synth_dataset, SynthKind};

    fn ry_template() -> CircuitTemplate {
        CircuitTemplate {
            n_qubits: 1,
            embedding_slots: vec![],
            variational_slots: vec![RotationSlot { qubit: 0, axis: RotationAxis::Y }],
            entanglers: vec![],
            measured_qubits: vec![0],
        }
    }

    fn binary_plan(template: &CircuitTemplate) -> MeasurementPlan {
        MeasurementPlan::for_template(2, template).unwrap()
    }

    #[test]
    fn measured_count_rule() {
        assert_eq!(measured_count_for(2).unwrap(), 1);
        assert_eq!(measured_count_for(4).unwrap(), 2);
        assert_eq!(measured_count_for(5).unwrap(), 5);
        assert_eq!(measured_count_for(9).unwrap(), 9);
        assert!(measured_count_for(1).is_err());
    }

    #[test]
    fn plan_takes_last_k_measured() {
        let t = crate::fixtures::random_template(4, 4, 4, 1);
        let plan = MeasurementPlan::for_template(2, &t).unwrap();
        assert_eq!(plan.measured_qubits, vec![3]);
        let plan4 = MeasurementPlan::for_template(4, &t).unwrap();
        assert_eq!(plan4.measured_qubits, vec![2, 3]);
    }

    #[test]
    fn forward_identity_and_closed_form() {
        let t = ry_template();
        let plan = binary_plan(&t);
        let zero = forward(
            &t,
            &plan.measured_qubits,
            &ParameterVector::zeros(1),
            &FeatureVector::new(vec![]).unwrap(),
        )
        .unwrap();
        assert!((zero[0] - 1.0).abs() < 1e-15);

        let theta = 1.234;
        let e = forward(
            &t,
            &plan.measured_qubits,
            &ParameterVector { values: vec![theta] },
            &FeatureVector::new(vec![]).unwrap(),
        )
        .unwrap();
        assert!((e[0] - theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn mse_loss_values() {
        let t = ry_template();
        let plan = binary_plan(&t);
        assert_eq!(loss(&[1.0], 1, &plan, LossKind::Auto).unwrap(), 0.0);
        assert_eq!(loss(&[-1.0], 1, &plan, LossKind::Auto).unwrap(), 4.0);
        assert!(loss(&[0.5], 2, &plan, LossKind::Auto).is_err());
    }

    #[test]
    fn cross_entropy_uniform_scores() {
        let t = crate::fixtures::random_template(3, 3, 3, 0);
        let plan = MeasurementPlan::for_template(3, &t).unwrap();
        let l = loss(&[0.4, 0.4, 0.4], 1, &plan, LossKind::Auto).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariance() {
        let scores = [0.3, -0.2, 1.1];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 5.0).collect();
        for (a, b) in softmax(&scores).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_closed_form_ry() {
        let t = ry_template();
        let plan = binary_plan(&t);
        let features = FeatureVector::new(vec![]).unwrap();
        // Loss = (⟨Z⟩ − 1)² with target +1 → dL/dθ = 2(cos θ − 1)(−sin θ).
        for &theta in &[0.0, std::f64::consts::FRAC_PI_2, 1.1] {
            let pv = ParameterVector { values: vec![theta] };
            let batch = vec![(&features, 1usize)];
            for mode in [GradientMode::Adjoint, GradientMode::ParameterShift] {
                let (_, g) = gradient(&t, &plan, &pv, &batch, LossKind::Mse, mode).unwrap();
                let expected = 2.0 * (theta.cos() - 1.0) * (-theta.sin());
                assert!(
                    (g[0] - expected).abs() < 1e-10,
                    "{mode:?} θ={theta}: {} vs {expected}",
                    g[0]
                );
            }
        }
    }

    #[test]
    fn adjoint_matches_parameter_shift_and_finite_differences() {
        let t = crate::fixtures::random_template(4, 6, 10, 3);
        let plan = MeasurementPlan::for_template(2, &t).unwrap();
        let mut rng = crate::seed::rng_for(5, 0);
        use rand::Rng;
        let features = FeatureVector::new(
            (0..6).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect(),
        )
        .unwrap();
        let pv = ParameterVector {
            values: (0..10).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
        };
        let batch = vec![(&features, 1usize)];
        let (_, adj) =
            gradient(&t, &plan, &pv, &batch, LossKind::Mse, GradientMode::Adjoint).unwrap();
        let (_, ps) =
            gradient(&t, &plan, &pv, &batch, LossKind::Mse, GradientMode::ParameterShift).unwrap();
        for (a, b) in adj.iter().zip(&ps) {
            assert!((a - b).abs() < 1e-10, "adjoint {a} vs shift {b}");
        }
        // Central finite differences as the independent oracle.
        let h = 1e-4;
        for k in 0..10 {
            let mut plus = pv.clone();
            plus.values[k] += h;
            let mut minus = pv.clone();
            minus.values[k] -= h;
            let lp = loss(
                &forward(&t, &plan.measured_qubits, &plus, &features).unwrap(),
                1,
                &plan,
                LossKind::Mse,
            )
            .unwrap();
            let lm = loss(
                &forward(&t, &plan.measured_qubits, &minus, &features).unwrap(),
                1,
                &plan,
                LossKind::Mse,
            )
            .unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let scale = fd.abs().max(1e-3);
            assert!(
                ((adj[k] - fd) / scale).abs() < 1e-5,
                "param {k}: adjoint {} vs fd {fd}",
                adj[k]
            );
        }
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut adam = Adam::new(3, &TrainConfig::default());
        let mut params = vec![0.5, -1.0, 2.0];
        let before = params.clone();
        adam.update(&mut params, &[0.0, 0.0, 0.0]);
        assert_eq!(params, before);
    }

    #[test]
    fn predict_class_rules() {
        let t2 = ry_template();
        let plan2 = binary_plan(&t2);
        assert_eq!(plan2.predict(&[0.3]), 1);
        assert_eq!(plan2.predict(&[-0.3]), 0);
        assert_eq!(plan2.predict(&[0.0]), 0);

        let t4 = crate::fixtures::random_template(4, 4, 4, 9);
        let plan4 = MeasurementPlan::for_template(4, &t4).unwrap();
        // (0.9, −0.8) is nearest the corner (+1, −1) = bits (0, 1) = class 1.
        assert_eq!(plan4.predict(&[0.9, -0.8]), 1);
        assert_eq!(plan4.predict(&[0.9, 0.8]), 0);
        assert_eq!(plan4.predict(&[-0.9, 0.8]), 2);
        assert_eq!(plan4.predict(&[-0.9, -0.8]), 3);

        let t5 = crate::fixtures::random_template(5, 5, 5, 9);
        let plan5 = MeasurementPlan::for_template(5, &t5).unwrap();
        assert_eq!(plan5.predict(&[0.1, 0.7, -0.2, 0.0, 0.3]), 1);
        // Argmax tie breaks low.
        assert_eq!(plan5.predict(&[0.7, 0.7, -0.2, 0.0, 0.3]), 0);
    }

    #[test]
    fn predict_invariant_under_monotone_transform() {
        let t5 = crate::fixtures::random_template(5, 5, 5, 9);
        let plan5 = MeasurementPlan::for_template(5, &t5).unwrap();
        let e = [0.1, 0.7, -0.2, 0.0, 0.3];
        let transformed: Vec<f64> = e.iter().map(|x| (3.0 * x + 0.5).tanh()).collect();
        assert_eq!(plan5.predict(&e), plan5.predict(&transformed));
    }

    #[test]
    fn train_two_blob_reaches_high_accuracy() {
        let raw = synth_dataset(SynthKind::TwoBlob, 120, 28, 17);
        let dataset = prepare(&raw, 7).unwrap();
        let template = crate::fixtures::random_template(4, 49, 60, 23);
        let plan = MeasurementPlan::for_template(2, &template).unwrap();
        let config = TrainConfig {
            epochs: 50,
            batch_size: 32,
            seed: 4,
            ..TrainConfig::default()
        };
        let out = train(&template, &dataset, &plan, &config).unwrap();

        let train_idx: Vec<usize> = dataset
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == crate::data::Split::Train)
            .map(|(i, _)| i)
            .collect();
        let rows: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| {
                forward(
                    &template,
                    &plan.measured_qubits,
                    &out.best_params,
                    &dataset.samples[i].features,
                )
                .unwrap()
            })
            .collect();
        let labels: Vec<usize> = train_idx.iter().map(|&i| dataset.samples[i].label).collect();
        let acc = crate::metrics::accuracy(&rows, &labels, &plan).unwrap();
        assert!(acc >= 0.95, "train accuracy {acc}");
    }

    #[test]
    fn zero_learning_rate_keeps_params_and_loss_flat() {
        let raw = synth_dataset(SynthKind::TwoBlob, 30, 14, 2);
        let dataset = prepare(&raw, 4).unwrap();
        let template = crate::fixtures::random_template(3, 16, 8, 2);
        let plan = MeasurementPlan::for_template(2, &template).unwrap();
        let config = TrainConfig {
            epochs: 4,
            learning_rate: 0.0,
            batch_size: 16,
            seed: 1,
            ..TrainConfig::default()
        };
        let out = train(&template, &dataset, &plan, &config).unwrap();
        let init: Vec<f64> = {
            let mut rng = rng_for(1, streams::PARAM_INIT);
            (0..8).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
        };
        assert_eq!(out.final_params.values, init);
        let first = out.history.records[0].train_loss;
        for r in &out.history.records {
            assert!((r.train_loss - first).abs() < 1e-9);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let raw = synth_dataset(SynthKind::TwoBlob, 24, 14, 8);
        let dataset = prepare(&raw, 4).unwrap();
        let template = crate::fixtures::random_template(3, 16, 10, 5);
        let plan = MeasurementPlan::for_template(2, &template).unwrap();
        let config = TrainConfig { epochs: 6, batch_size: 8, seed: 9, ..TrainConfig::default() };
        let a = train(&template, &dataset, &plan, &config).unwrap();
        let b = train(&template, &dataset, &plan, &config).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.final_params, b.final_params);
    }

    #[test]
    fn resume_reproduces_full_run() {
        let raw = synth_dataset(SynthKind::TwoBlob, 24, 14, 8);
        let dataset = prepare(&raw, 4).unwrap();
        let template = crate::fixtures::random_template(3, 16, 10, 5);
        let plan = MeasurementPlan::for_template(2, &template).unwrap();
        let full_config =
            TrainConfig { epochs: 8, batch_size: 8, seed: 9, ..TrainConfig::default() };
        let full = train(&template, &dataset, &plan, &full_config).unwrap();

        let half_config = TrainConfig { epochs: 4, ..full_config.clone() };
        let half = train(&template, &dataset, &plan, &half_config).unwrap();
        // Round-trip the state through its text form, as the CLI would.
        let state = state_from_text(&state_to_text(&half.state), "mem").unwrap();
        let resumed = train_from(&template, &dataset, &plan, &full_config, Some(state)).unwrap();

        assert_eq!(resumed.final_params, full.final_params);
        assert_eq!(
            resumed.history.records,
            full.history.records[4..].to_vec()
        );
    }

    #[test]
    fn nan_loss_aborts_with_epoch_diagnostic() {
        let raw = synth_dataset(SynthKind::TwoBlob, 24, 14, 8);
        let dataset = prepare(&raw, 4).unwrap();
        let template = crate::fixtures::random_template(3, 16, 10, 5);
        let plan = MeasurementPlan::for_template(2, &template).unwrap();
        let config = TrainConfig {
            epochs: 3,
            learning_rate: f64::INFINITY,
            batch_size: 8,
            seed: 9,
            ..TrainConfig::default()
        };
        match train(&template, &dataset, &plan, &config) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("epoch"), "{msg}"),
            other => panic!("expected numerical failure, got {other:?}"),
        }
    }

    #[test]
    fn state_text_round_trip() {
        let state = TrainState {
            params: vec![0.1, 0.2],
            adam_m: vec![0.01, -0.02],
            adam_v: vec![0.001, 0.002],
            adam_step: 17,
            completed_epochs: 3,
            best_epoch: 2,
            best_val_auc: 0.875,
            best_params: vec![0.15, 0.25],
        };
        let text = state_to_text(&state);
        assert_eq!(state_from_text(&text, "mem").unwrap(), state);
    }
}
