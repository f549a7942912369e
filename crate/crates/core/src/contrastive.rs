//! Margin triplet-loss fine-tuning of an encoder.
//!
//! Each triplet pulls a premise towards a conclusion with positive novelty
//! and away from one with negative novelty:
//! `max(0, d(a, p) − d(a, n) + margin)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TripletExample;
use crate::encoder::TrainableEncoder;
use crate::error::{Error, Result};
use crate::math;
use crate::optim::{AdamW, AdamWConfig, GradBuffer};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// `1 − cos(a, b)`, in `[0, 2]`.
    #[default]
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContrastiveConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub distance: Distance,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig {
            margin: 1.0,
            learning_rate: 1e-5,
            epochs: 3,
            batch_size: 16,
            distance: Distance::Cosine,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::Config(alloc::format!("margin must be >= 0, got {}", self.margin)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(alloc::format!("invalid learning rate {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Distance between two vectors plus its gradients w.r.t. both arguments.
fn distance_with_grad(a: &[f64], b: &[f64], kind: Distance) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    match kind {
        Distance::Cosine => {
            let na = math::norm(a);
            let nb = math::norm(b);
            if na == 0.0 || nb == 0.0 {
                return Err(Error::Value("cosine distance of a zero vector".into()));
            }
            let cos = math::dot(a, b) / (na * nb);
            // d = 1 − cos; ∂cos/∂a = b/(|a||b|) − cos·a/|a|².
            let ga = a
                .iter()
                .zip(b)
                .map(|(x, y)| -(y / (na * nb) - cos * x / (na * na)))
                .collect();
            let gb = a
                .iter()
                .zip(b)
                .map(|(x, y)| -(x / (na * nb) - cos * y / (nb * nb)))
                .collect();
            Ok((1.0 - cos, ga, gb))
        }
        Distance::Euclidean => {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let d = math::norm(&diff);
            if d == 0.0 {
                // Subgradient 0 at coincident points.
                return Ok((0.0, vec![0.0; a.len()], vec![0.0; a.len()]));
            }
            let ga: Vec<f64> = diff.iter().map(|x| x / d).collect();
            let gb = ga.iter().map(|x| -x).collect();
            Ok((d, ga, gb))
        }
    }
}

pub fn distance(a: &[f64], b: &[f64], kind: Distance) -> Result<f64> {
    distance_with_grad(a, b, kind).map(|t| t.0)
}

pub fn triplet_loss(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64, kind: Distance) -> Result<f64> {
    let dp = distance(anchor, positive, kind)?;
    let dn = distance(anchor, negative, kind)?;
    Ok((dp - dn + margin).max(0.0))
}

/// Loss and gradients for one triplet: `(loss, ∂a, ∂p, ∂n)`. At the hinge
/// point and beyond it the gradients are zero.
fn triplet_loss_with_grad(
    anchor: &[f64],
    positive: &[f64],
    negative: &[f64],
    margin: f64,
    kind: Distance,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (dp, gap, gp) = distance_with_grad(anchor, positive, kind)?;
    let (dn, gan, gn) = distance_with_grad(anchor, negative, kind)?;
    let raw = dp - dn + margin;
    let d = anchor.len();
    if raw <= 0.0 {
        return Ok((0.0, vec![0.0; d], vec![0.0; d], vec![0.0; d]));
    }
    let ga = gap.iter().zip(&gan).map(|(x, y)| x - y).collect();
    let gn = gn.iter().map(|x| -x).collect();
    Ok((raw, ga, gp, gn))
}

fn triplet_texts<'a>(batch: &[&'a TripletExample]) -> Vec<&'a str> {
    let mut texts = Vec::with_capacity(3 * batch.len());
    for t in batch {
        texts.push(t.anchor.as_str());
        texts.push(t.positive.as_str());
        texts.push(t.negative.as_str());
    }
    texts
}

/// Adds `scale ×` the gradient of the batch-mean triplet loss into `grads`
/// (encoder slots starting at 0) and returns the mean loss.
pub fn accumulate_triplet_gradients<E: TrainableEncoder>(
    encoder: &E,
    batch: &[&TripletExample],
    config: &ContrastiveConfig,
    grads: &mut GradBuffer,
    scale: f64,
) -> Result<f64> {
    let texts = triplet_texts(batch);
    let (emb, cache) = encoder.forward_train(&texts)?;
    let n = batch.len() as f64;
    let mut grad_out: Vec<Vec<f64>> = Vec::with_capacity(emb.len());
    let mut total = 0.0;
    for chunk in emb.chunks(3) {
        let (loss, ga, gp, gn) = triplet_loss_with_grad(
            &chunk[0].values,
            &chunk[1].values,
            &chunk[2].values,
            config.margin,
            config.distance,
        )?;
        total += loss;
        for g in [ga, gp, gn] {
            grad_out.push(g.into_iter().map(|x| x * scale / n).collect());
        }
    }
    encoder.backward(&cache, &grad_out, grads, 0);
    Ok(total / n)
}

/// Mean triplet loss of the current encoder over `triplets`.
pub fn mean_triplet_loss<E: TrainableEncoder>(encoder: &E, triplets: &[TripletExample], config: &ContrastiveConfig) -> Result<f64> {
    if triplets.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<&TripletExample> = triplets.iter().collect();
    let emb = encoder.encode(&triplet_texts(&refs))?;
    let mut total = 0.0;
    for c in emb.chunks(3) {
        total += triplet_loss(&c[0].values, &c[1].values, &c[2].values, config.margin, config.distance)?;
    }
    Ok(total / triplets.len() as f64)
}

/// Fraction of triplets with `d(anchor, positive) < d(anchor, negative)`.
pub fn satisfied_fraction<E: TrainableEncoder>(encoder: &E, triplets: &[TripletExample], kind: Distance) -> Result<f64> {
    if triplets.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<&TripletExample> = triplets.iter().collect();
    let emb = encoder.encode(&triplet_texts(&refs))?;
    let mut ok = 0usize;
    for c in emb.chunks(3) {
        if distance(&c[0].values, &c[1].values, kind)? < distance(&c[0].values, &c[2].values, kind)? {
            ok += 1;
        }
    }
    Ok(ok as f64 / triplets.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveOutcome {
    /// Mean pre-update batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch AdamW on the mean triplet loss, updating `encoder` in place.
pub fn contrastive_train<E: TrainableEncoder>(
    encoder: &mut E,
    triplets: &[TripletExample],
    config: &ContrastiveConfig,
) -> Result<ContrastiveOutcome> {
    config.validate()?;
    if triplets.is_empty() {
        return Err(Error::Config(
            "no triplets to train on; skip the contrastive stage explicitly instead".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let sizes = encoder.param_sizes();
    let mut opt = AdamW::new(AdamWConfig::new(config.learning_rate, config.weight_decay), sizes.len());
    let mut grads = GradBuffer::new(&sizes);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&TripletExample> = chunk.iter().map(|&i| &triplets[i]).collect();
            let loss = accumulate_triplet_gradients(encoder, &batch, config, &mut grads, 1.0)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            weighted += loss * batch.len() as f64;
            opt.step(&mut encoder.params_mut(), &grads);
            grads.clear();
        }
        epoch_losses.push(weighted / triplets.len() as f64);
    }
    Ok(ContrastiveOutcome { epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_zero_when_margin_satisfied() {
        // d(a, p) = 0, d(a, n) = 1 (orthogonal), margin 0.5.
        let a = [1.0, 0.0];
        let n = [0.0, 1.0];
        assert_eq!(triplet_loss(&a, &a, &n, 0.5, Distance::Cosine).unwrap(), 0.0);
    }

    #[test]
    fn loss_equals_margin_when_all_equal() {
        let a = [0.3, -0.4, 0.1];
        assert!((triplet_loss(&a, &a, &a, 0.7, Distance::Cosine).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(triplet_loss(&a, &a, &a, 0.7, Distance::Euclidean).unwrap(), 0.7);
    }

    #[test]
    fn zero_vector_rejected_under_cosine() {
        let z = [0.0, 0.0];
        let a = [1.0, 0.0];
        assert!(matches!(triplet_loss(&a, &z, &a, 1.0, Distance::Cosine), Err(Error::Value(_))));
        assert!(triplet_loss(&a, &z, &a, 1.0, Distance::Euclidean).is_ok());
    }

    #[test]
    fn mismatched_lengths() {
        assert!(matches!(
            triplet_loss(&[1.0], &[1.0, 2.0], &[1.0], 1.0, Distance::Cosine),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn distance_gradients_match_finite_differences() {
        let a = [0.3, -0.7, 0.2];
        let b = [-0.1, 0.5, 0.9];
        for kind in [Distance::Cosine, Distance::Euclidean] {
            let (_, ga, gb) = distance_with_grad(&a, &b, kind).unwrap();
            let h = 1e-6;
            for i in 0..3 {
                let mut ap = a;
                let mut am = a;
                ap[i] += h;
                am[i] -= h;
                let fd = (distance(&ap, &b, kind).unwrap() - distance(&am, &b, kind).unwrap()) / (2.0 * h);
                assert!((fd - ga[i]).abs() < 1e-7, "{kind:?} a[{i}]");
                let mut bp = b;
                let mut bm = b;
                bp[i] += h;
                bm[i] -= h;
                let fd = (distance(&a, &bp, kind).unwrap() - distance(&a, &bm, kind).unwrap()) / (2.0 * h);
                assert!((fd - gb[i]).abs() < 1e-7, "{kind:?} b[{i}]");
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = ContrastiveConfig {
            margin: -0.1,
            ..ContrastiveConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(ContrastiveConfig::default().validate().is_ok());
    }
}
