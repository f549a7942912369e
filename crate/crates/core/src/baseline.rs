//! TF-IDF features over stemmed tokens and a primal linear SVM.
//!
//! The SVM minimizes `½‖w‖² + C·Σ max(0, 1 − yᵢ(w·xᵢ + b))`. Weights are
//! trained with Pegasos-style projected stochastic subgradient steps on the
//! equivalent `λ = 1/(C·n)` objective and averaged over the second half of
//! the run; the unregularized bias is set by exact line search over the
//! hinge breakpoints after every pass and at the end.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::tokenize;
use crate::error::{Error, Result};
use crate::math;
use crate::predictions::Prediction;
use crate::stem::stem;
use crate::types::{ArgumentInstance, Label, Task};

/// Sorted `(column, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

/// Tokenize then stem.
pub fn analyze(document: &str) -> Vec<String> {
    tokenize(document).iter().map(|t| stem(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Term → column; columns follow sorted term order.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub document_count: usize,
}

/// Smoothed idf: `ln((1 + N) / (1 + df)) + 1`.
pub fn smoothed_idf(document_count: usize, document_frequency: usize) -> f64 {
    math::ln((1.0 + document_count as f64) / (1.0 + document_frequency as f64)) + 1.0
}

pub fn tfidf_fit(documents: &[&str]) -> Result<TfidfModel> {
    if documents.is_empty() {
        return Err(Error::Config("cannot fit TF-IDF on an empty corpus".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in documents {
        let mut terms = analyze(doc);
        terms.sort();
        terms.dedup();
        for t in terms {
            *df.entry(t).or_default() += 1;
        }
    }
    let n = documents.len();
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (col, (term, freq)) in df.into_iter().enumerate() {
        idf.push(smoothed_idf(n, freq));
        vocabulary.insert(term, col);
    }
    Ok(TfidfModel {
        vocabulary,
        idf,
        document_count: n,
    })
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    /// L2-normalized tf·idf vector; unseen terms are dropped and a document
    /// with no known terms maps to the zero vector.
    pub fn transform(&self, document: &str) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in analyze(document) {
            if let Some(&col) = self.vocabulary.get(&term) {
                *counts.entry(col).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = counts.into_iter().map(|(c, tf)| (c, tf * self.idf[c])).collect();
        let norm = math::sqrt(v.iter().map(|(_, x)| x * x).sum());
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }
}

pub fn tfidf_transform(model: &TfidfModel, document: &str) -> SparseVec {
    model.transform(document)
}

pub fn sparse_dot(w: &[f64], x: &SparseVec) -> f64 {
    x.iter().map(|&(i, v)| w.get(i).copied().unwrap_or(0.0) * v).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        sparse_dot(&self.weights, x) + self.bias
    }

    /// Positive only for a strictly positive decision value.
    pub fn classify(&self, x: &SparseVec) -> Label {
        Label::from_bool(self.decision(x) > 0.0)
    }
}

/// `½‖w‖² + C·Σ hinge`.
pub fn primal_objective(weights: &[f64], bias: f64, c: f64, x: &[SparseVec], y: &[Label]) -> f64 {
    let reg = 0.5 * math::dot(weights, weights);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - yi.signed() as f64 * (sparse_dot(weights, xi) + bias)).max(0.0))
        .sum();
    reg + c * hinge
}

/// Bias minimizing the total hinge loss for fixed scores `w·xᵢ`; the
/// midpoint of the optimal interval when it is not unique.
fn refit_bias(scores: &[f64], y: &[Label]) -> f64 {
    let total = |b: f64| -> f64 {
        scores
            .iter()
            .zip(y)
            .map(|(s, yi)| {
                let ys = yi.signed() as f64;
                (1.0 - ys * (s + b)).max(0.0)
            })
            .sum()
    };
    let mut kinks: Vec<f64> = scores.iter().zip(y).map(|(s, yi)| yi.signed() as f64 - s).collect();
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    kinks.dedup();
    let values: Vec<f64> = kinks.iter().map(|&b| total(b)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best.max(1.0);
    let lo = kinks.iter().zip(&values).find(|(_, v)| **v <= best + tol).map(|(b, _)| *b);
    let hi = kinks.iter().zip(&values).rev().find(|(_, v)| **v <= best + tol).map(|(b, _)| *b);
    match (lo, hi) {
        (Some(lo), Some(hi)) => 0.5 * (lo + hi),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmFit {
    pub model: LinearSvm,
    /// Primal objective of the returned model.
    pub objective: f64,
    /// Objective of the running tail average (with refit bias) after 1, 2,
    /// 4, ... passes of averaging, and at the end.
    pub objective_trace: Vec<f64>,
}

/// Default step budget: 50 passes over the data.
pub fn default_steps(n: usize) -> usize {
    50 * n
}

pub fn svm_train(x: &[SparseVec], y: &[Label], dim: usize, c: f64, steps: usize, seed: u64) -> Result<SvmFit> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(alloc::format!("C must be positive, got {c}")));
    }
    if steps == 0 {
        return Err(Error::Config("steps must be >= 1".into()));
    }
    for want in [Label::Positive, Label::Negative] {
        if !y.contains(&want) {
            return Err(Error::Data(alloc::format!("SVM training needs at least one {want} example")));
        }
    }
    let n = x.len();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / math::sqrt(lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();

    let scores_of = |w: &[f64]| -> Vec<f64> { x.iter().map(|xi| sparse_dot(w, xi)).collect() };

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    // Any hinge minimizer lies within the span of the breakpoints.
    let x_max = x.iter().map(|xi| math::sqrt(xi.iter().map(|(_, v)| v * v).sum())).fold(0.0, f64::max);
    let bias_bound = 1.0 + radius * x_max;
    let tail_start = steps / 2;
    let mut avg = vec![0.0; dim];
    let mut avg_count = 0usize;
    // Trace points at geometrically growing windows: 1, 2, 4, ... passes.
    let mut next_trace = n;
    let mut objective_trace = Vec::new();

    for t in 0..steps {
        if t % n == 0 {
            order.shuffle(&mut rng);
        }
        let i = order[t % n];
        let yi = y[i].signed() as f64;
        let eta = 1.0 / (lambda * (t + 1) as f64);
        let margin = yi * (sparse_dot(&w, &x[i]) + b);
        let shrink = 1.0 - eta * lambda;
        w.iter_mut().for_each(|v| *v *= shrink);
        if margin < 1.0 {
            for &(j, v) in &x[i] {
                if j < dim {
                    w[j] += eta * yi * v;
                }
            }
            b = (b + eta * yi).clamp(-bias_bound, bias_bound);
        }
        let norm = math::norm(&w);
        if norm > radius {
            let s = radius / norm;
            w.iter_mut().for_each(|v| *v *= s);
        }
        if t >= tail_start {
            avg_count += 1;
            let k = avg_count as f64;
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += (v - *a) / k;
            }
            if avg_count == next_trace || t + 1 == steps {
                next_trace *= 2;
                let bias = refit_bias(&scores_of(&avg), y);
                objective_trace.push(primal_objective(&avg, bias, c, x, y));
            }
        }
    }

    let bias = refit_bias(&scores_of(&avg), y);
    let objective = primal_objective(&avg, bias, c, x, y);
    Ok(SvmFit {
        model: LinearSvm {
            weights: avg,
            bias,
            c,
        },
        objective,
        objective_trace,
    })
}

/// Text the baseline sees: premise and conclusion joined by one space.
pub fn baseline_document(instance: &ArgumentInstance) -> String {
    alloc::format!("{} {}", instance.premise, instance.conclusion)
}

pub fn baseline_predict(model: &LinearSvm, tfidf: &TfidfModel, instance: &ArgumentInstance, task: Task) -> Prediction {
    let x = tfidf.transform(&baseline_document(instance));
    Prediction::new(instance.id.clone(), task, model.classify(&x), "svm")
}

/// One shared TF-IDF space and a separate SVM per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub tfidf: TfidfModel,
    pub validity: LinearSvm,
    pub novelty: LinearSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub c_validity: f64,
    pub c_novelty: f64,
    /// Subgradient steps; `None` means 50 passes.
    pub steps: Option<usize>,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            c_validity: 0.09,
            c_novelty: 4.7,
            steps: None,
            seed: 0,
        }
    }
}

impl BaselineModel {
    pub fn fit(train: &[ArgumentInstance], config: &BaselineConfig) -> Result<Self> {
        let docs: Vec<String> = train.iter().map(baseline_document).collect();
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        let tfidf = tfidf_fit(&refs)?;
        let x: Vec<SparseVec> = refs.iter().map(|d| tfidf.transform(d)).collect();
        let steps = config.steps.unwrap_or_else(|| default_steps(x.len()));
        let fit_task = |task: Task, c: f64| -> Result<LinearSvm> {
            let mut y = Vec::with_capacity(train.len());
            for inst in train {
                y.push(inst.label(task)?);
            }
            Ok(svm_train(&x, &y, tfidf.dim(), c, steps, config.seed)?.model)
        };
        let validity = fit_task(Task::Validity, config.c_validity)?;
        let novelty = fit_task(Task::Novelty, config.c_novelty)?;
        Ok(BaselineModel {
            tfidf,
            validity,
            novelty,
        })
    }

    pub fn svm(&self, task: Task) -> &LinearSvm {
        match task {
            Task::Validity => &self.validity,
            Task::Novelty => &self.novelty,
        }
    }

    pub fn predict(&self, instance: &ArgumentInstance, task: Task) -> Prediction {
        baseline_predict(self.svm(task), &self.tfidf, instance, task)
    }
}
