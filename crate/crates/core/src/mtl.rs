//! Shared-encoder multi-task classifier and its trainer.
//!
//! One encoder feeds two task-specific affine heads producing
//! `(negative, positive)` logits. Training samples a task per step, draws a
//! batch of that task's instances and back-propagates cross-entropy through
//! the selected head and the whole encoder. Nothing is frozen.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, CombinedMetric};
use crate::encoder::{Embedding, TrainableEncoder};
use crate::math;
use crate::optim::{AdamW, AdamWConfig, GradBuffer};
use crate::predictions::{Prediction, PredictionSet};
use crate::types::{ArgumentInstance, Label, Task};

/// Encoder input for one instance.
pub fn input_text(inst: &ArgumentInstance) -> String {
    alloc::format!(
        "topic: {} premise: {} conclusion: {}",
        inst.topic,
        inst.premise,
        inst.conclusion
    )
}

/// Affine map from an embedding to `(negative, positive)` logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    /// `2 × dim`, row-major; row 0 scores the negative class.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(dim: usize) -> Self {
        LinearHead {
            weight: vec![0.0; 2 * dim],
            bias: vec![0.0; 2],
        }
    }

    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let limit = math::sqrt(6.0 / (dim + 2) as f64);
        LinearHead {
            weight: (0..2 * dim).map(|_| rng.gen_range(-limit..limit)).collect(),
            bias: vec![0.0; 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.len() / 2
    }

    pub fn logits(&self, x: &[f64]) -> [f64; 2] {
        let d = self.dim();
        [
            math::dot(&self.weight[..d], x) + self.bias[0],
            math::dot(&self.weight[d..], x) + self.bias[1],
        ]
    }
}

/// Softmax cross-entropy over two logits and its gradient w.r.t. the logits.
pub fn cross_entropy(logits: [f64; 2], target: Label) -> (f64, [f64; 2]) {
    let m = logits[0].max(logits[1]);
    let e0 = math::exp(logits[0] - m);
    let e1 = math::exp(logits[1] - m);
    let z = e0 + e1;
    let lse = m + math::ln(z);
    let loss = lse - logits[target.index()];
    let mut grad = [e0 / z, e1 / z];
    grad[target.index()] -= 1.0;
    (loss, grad)
}

/// Positive only when its logit is strictly larger; ties go negative.
pub fn decide(logits: [f64; 2]) -> Label {
    Label::from_bool(logits[1] > logits[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtlModel<E> {
    /// Source tag written on predictions.
    pub name: String,
    pub encoder: E,
    /// Indexed by [`Task::index`].
    pub heads: [LinearHead; 2],
}

impl<E: TrainableEncoder> MtlModel<E> {
    /// Wraps `encoder` with two freshly initialized heads.
    pub fn new(name: impl Into<String>, encoder: E, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6865_6164);
        let dim = encoder.dim();
        let heads = [LinearHead::random(dim, &mut rng), LinearHead::random(dim, &mut rng)];
        MtlModel {
            name: name.into(),
            encoder,
            heads,
        }
    }

    pub fn with_heads(name: impl Into<String>, encoder: E, heads: [LinearHead; 2]) -> Result<Self> {
        for h in &heads {
            crate::encoder::check_dim(&encoder, h.dim())?;
            if h.bias.len() != 2 || h.weight.len() != 2 * h.dim() {
                return Err(Error::Config("head must map to exactly 2 logits".into()));
            }
        }
        Ok(MtlModel {
            name: name.into(),
            encoder,
            heads,
        })
    }

    fn encoder_slots(&self) -> usize {
        self.encoder.param_sizes().len()
    }

    /// Gradient slot of a head's weight; its bias follows at `+1`.
    pub fn head_slot(&self, task: Task) -> usize {
        self.encoder_slots() + 2 * task.index()
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut sizes = self.encoder.param_sizes();
        for h in &self.heads {
            sizes.push(h.weight.len());
            sizes.push(h.bias.len());
        }
        sizes
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut p = self.encoder.params();
        for h in &self.heads {
            p.push(&h.weight);
            p.push(&h.bias);
        }
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.encoder.params_mut();
        for h in self.heads.iter_mut() {
            p.push(&mut h.weight);
            p.push(&mut h.bias);
        }
        p
    }

    fn texts(batch: &[&ArgumentInstance]) -> Vec<String> {
        batch.iter().map(|i| input_text(i)).collect()
    }

    /// `(negative, positive)` logits from `task`'s head.
    pub fn forward(&self, batch: &[ArgumentInstance], task: Task) -> Result<Vec<[f64; 2]>> {
        let texts: Vec<String> = batch.iter().map(input_text).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let emb = self.encoder.encode(&refs)?;
        Ok(emb.iter().map(|e| self.heads[task.index()].logits(&e.values)).collect())
    }

    /// Mean cross-entropy of `batch` on `task`.
    pub fn loss(&self, batch: &[ArgumentInstance], task: Task) -> Result<f64> {
        let logits = self.forward(batch, task)?;
        let mut total = 0.0;
        for (inst, l) in batch.iter().zip(&logits) {
            total += cross_entropy(*l, inst.label(task)?).0;
        }
        Ok(total / batch.len().max(1) as f64)
    }

    /// Adds `scale ×` the gradient of the batch-mean cross-entropy into
    /// `grads` and returns the (unscaled) mean loss.
    pub fn accumulate_gradients(
        &self,
        batch: &[&ArgumentInstance],
        task: Task,
        grads: &mut GradBuffer,
        scale: f64,
    ) -> Result<f64> {
        let texts = Self::texts(batch);
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let (emb, cache) = self.encoder.forward_train(&refs)?;
        let head = &self.heads[task.index()];
        let d = head.dim();
        let n = batch.len() as f64;
        let slot = self.head_slot(task);

        let mut total = 0.0;
        let mut grad_emb = Vec::with_capacity(batch.len());
        for (inst, e) in batch.iter().zip(&emb) {
            let (loss, gl) = cross_entropy(head.logits(&e.values), inst.label(task)?);
            total += loss;
            let gl = [gl[0] * scale / n, gl[1] * scale / n];
            {
                let gw = grads.slot_mut(slot);
                for k in 0..2 {
                    for j in 0..d {
                        gw[k * d + j] += gl[k] * e.values[j];
                    }
                }
            }
            {
                let gb = grads.slot_mut(slot + 1);
                gb[0] += gl[0];
                gb[1] += gl[1];
            }
            grad_emb.push((0..d).map(|j| gl[0] * head.weight[j] + gl[1] * head.weight[d + j]).collect());
        }
        self.encoder.backward(&cache, &grad_emb, grads, 0);
        Ok(total / n)
    }

    pub fn embed(&self, instances: &[ArgumentInstance]) -> Result<Vec<Embedding>> {
        let texts: Vec<String> = instances.iter().map(input_text).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        self.encoder.encode(&refs)
    }

    /// Argmax labels for `task`, tagged with the model's name.
    pub fn predict(&self, instances: &[ArgumentInstance], task: Task) -> Result<Vec<Prediction>> {
        let logits = self.forward(instances, task)?;
        Ok(instances
            .iter()
            .zip(logits)
            .map(|(inst, l)| Prediction::new(inst.id.clone(), task, decide(l), self.name.clone()))
            .collect())
    }

    /// Both tasks' predictions with a single encoder pass.
    pub fn predict_all(&self, instances: &[ArgumentInstance]) -> Result<PredictionSet> {
        let emb = self.embed(instances)?;
        let mut rows = Vec::with_capacity(2 * instances.len());
        for (inst, e) in instances.iter().zip(&emb) {
            for task in Task::ALL {
                let label = decide(self.heads[task.index()].logits(&e.values));
                rows.push(Prediction::new(inst.id.clone(), task, label, self.name.clone()));
            }
        }
        PredictionSet::new(rows)
    }
}

/// Draws a task: validity with probability `probabilities[0]`.
pub fn sample_task(rng: &mut impl Rng, probabilities: [f64; 2]) -> Result<Task> {
    validate_probabilities(probabilities)?;
    Ok(if rng.gen::<f64>() < probabilities[0] {
        Task::Validity
    } else {
        Task::Novelty
    })
}

fn validate_probabilities(p: [f64; 2]) -> Result<()> {
    let ok = p.iter().all(|x| x.is_finite() && *x >= 0.0) && math::abs(p[0] + p[1] - 1.0) <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::Config(alloc::format!(
            "task probabilities must be non-negative and sum to 1, got ({}, {})",
            p[0],
            p[1]
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub grad_accumulation: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// `(validity, novelty)` sampling probabilities.
    pub task_probabilities: [f64; 2],
    /// Dev-set selection metric.
    pub metric: CombinedMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::clteaml2()
    }
}

impl TrainConfig {
    /// lr 1e-5, 9 epochs, no accumulation.
    pub fn clteaml2() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            epochs: 9,
            grad_accumulation: 1,
            batch_size: 16,
            weight_decay: 0.0,
            seed: 0,
            task_probabilities: [0.5, 0.5],
            metric: CombinedMetric::JointMacroF1,
        }
    }

    /// lr 5e-6, 6 epochs, 4 accumulation steps.
    pub fn clteaml4() -> Self {
        TrainConfig {
            learning_rate: 5e-6,
            epochs: 6,
            grad_accumulation: 4,
            ..TrainConfig::clteaml2()
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "clteaml-2" => Ok(TrainConfig::clteaml2()),
            "clteaml-4" => Ok(TrainConfig::clteaml4()),
            other => Err(Error::Config(alloc::format!(
                "unknown training profile {other:?} (expected clteaml-2 or clteaml-4)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(alloc::format!("invalid learning rate {}", self.learning_rate)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(alloc::format!("invalid weight decay {}", self.weight_decay)));
        }
        if self.epochs == 0 || self.grad_accumulation == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs, grad_accumulation and batch_size must be >= 1".into(),
            ));
        }
        validate_probabilities(self.task_probabilities)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    /// Mean step loss over the epoch.
    pub train_loss: f64,
    pub dev_combined_f1: f64,
    pub dev_validity_f1: f64,
    pub dev_novelty_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Index of the highest score; the earliest wins ties.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_nan() && best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    // All-NaN histories fall back to the first epoch.
    best.or_else(|| (!scores.is_empty()).then_some(0))
}

pub(crate) struct DevScores {
    pub combined: f64,
    pub validity: f64,
    pub novelty: f64,
}

pub(crate) fn dev_scores<E: TrainableEncoder>(
    model: &MtlModel<E>,
    dev: &[ArgumentInstance],
    metric: CombinedMetric,
) -> Result<DevScores> {
    let preds = model.predict_all(dev)?;
    Ok(DevScores {
        combined: eval::combined_score(&preds, dev, metric)?,
        validity: eval::macro_f1(&eval::confusion(&preds, dev, Task::Validity)?),
        novelty: eval::macro_f1(&eval::confusion(&preds, dev, Task::Novelty)?),
    })
}

/// Trains `model` in place and leaves it at the best dev checkpoint.
pub fn train<E>(
    model: &mut MtlModel<E>,
    train_set: &[ArgumentInstance],
    dev_set: &[ArgumentInstance],
    config: &TrainConfig,
) -> Result<TrainOutcome>
where
    E: TrainableEncoder + Clone,
{
    config.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::Data("training and dev sets must be non-empty".into()));
    }
    for inst in train_set.iter().chain(dev_set) {
        inst.validate()?;
    }

    let n = train_set.len();
    let active = config.task_probabilities.iter().filter(|p| **p > 0.0).count();
    let steps_per_epoch = n.div_ceil(config.batch_size) * active;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut orders: [Vec<usize>; 2] = [(0..n).collect(), (0..n).collect()];
    let mut cursors = [0usize; 2];
    let sizes = model.param_sizes();
    let mut opt = AdamW::new(AdamWConfig::new(config.learning_rate, config.weight_decay), sizes.len());
    let mut grads = GradBuffer::new(&sizes);
    let accum_scale = 1.0 / config.grad_accumulation as f64;

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, MtlModel<E>)> = None;

    for epoch in 0..config.epochs {
        for (order, cursor) in orders.iter_mut().zip(cursors.iter_mut()) {
            order.shuffle(&mut rng);
            *cursor = 0;
        }
        let mut pending = 0usize;
        let mut loss_sum = 0.0;
        for step in 0..steps_per_epoch {
            let task = sample_task(&mut rng, config.task_probabilities)?;
            let t = task.index();
            if cursors[t] >= n {
                orders[t].shuffle(&mut rng);
                cursors[t] = 0;
            }
            let end = (cursors[t] + config.batch_size).min(n);
            let batch: Vec<&ArgumentInstance> = orders[t][cursors[t]..end].iter().map(|&i| &train_set[i]).collect();
            cursors[t] = end;

            let loss = model.accumulate_gradients(&batch, task, &mut grads, accum_scale)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            loss_sum += loss;
            pending += 1;
            if pending == config.grad_accumulation {
                opt.step(&mut model.params_mut(), &grads);
                grads.clear();
                pending = 0;
            }
        }
        if pending > 0 {
            opt.step(&mut model.params_mut(), &grads);
            grads.clear();
        }

        let scores = dev_scores(model, dev_set, config.metric)?;
        history.push(EpochRecord {
            epoch,
            steps: steps_per_epoch,
            train_loss: loss_sum / steps_per_epoch as f64,
            dev_combined_f1: scores.combined,
            dev_validity_f1: scores.validity,
            dev_novelty_f1: scores.novelty,
        });
        if best.as_ref().is_none_or(|(f1, _)| scores.combined > *f1) {
            best = Some((scores.combined, model.clone()));
        }
    }

    let combined: Vec<f64> = history.iter().map(|r| r.dev_combined_f1).collect();
    let best_epoch = select_best(&combined).unwrap_or(0);
    if let Some((_, snapshot)) = best {
        *model = snapshot;
    }
    Ok(TrainOutcome { history, best_epoch })
}
