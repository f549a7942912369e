//! Text-to-vector encoders.
//!
//! [`HashingEncoder`] is the reference trainable encoder: tokens are hashed
//! into a fixed number of buckets, looked up in an embedding table, mean
//! pooled, projected by an affine map and squashed with `tanh`. Any other
//! encoder (for instance one served out of process from an
//! intermediate-task checkpoint) plugs in through [`TextEncoder`] and can be
//! used frozen via [`FrozenEncoder`].

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::optim::GradBuffer;

/// Lowercases, splits on Unicode whitespace and strips non-alphanumeric
/// characters from both ends of each token. Tokens that are punctuation
/// only disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                let mut tok = String::with_capacity(trimmed.len());
                for c in trimmed.chars() {
                    tok.extend(c.to_lowercase());
                }
                Some(tok)
            }
        })
        .collect()
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub vocab_buckets: usize,
    pub embed_dim: usize,
    pub projection_dim: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            vocab_buckets: 4096,
            embed_dim: 32,
            projection_dim: 32,
            seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_buckets == 0 || self.embed_dim == 0 || self.projection_dim == 0 {
            return Err(Error::Config(alloc::format!(
                "encoder dimensions must be >= 1 (vocab_buckets={}, embed_dim={}, projection_dim={})",
                self.vocab_buckets,
                self.embed_dim,
                self.projection_dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Read-only encoding contract. Implementations must be deterministic and
/// return vectors of length [`TextEncoder::dim`].
pub trait TextEncoder {
    fn dim(&self) -> usize;
    fn encode(&self, texts: &[&str]) -> Result<Vec<Embedding>>;
}

/// An encoder whose parameters can be updated by gradient descent.
///
/// Parameters are exposed as flat slots; gradients are accumulated into a
/// [`GradBuffer`] starting at slot `base`.
pub trait TrainableEncoder: TextEncoder {
    type Cache;

    fn param_sizes(&self) -> Vec<usize>;
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
    fn forward_train(&self, texts: &[&str]) -> Result<(Vec<Embedding>, Self::Cache)>;
    fn backward(&self, cache: &Self::Cache, grad_out: &[Vec<f64>], grads: &mut GradBuffer, base: usize);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashingEncoder {
    config: EncoderConfig,
    /// `vocab_buckets × embed_dim`, row-major.
    table: Vec<f64>,
    /// `projection_dim × embed_dim`, row-major.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TextTrace {
    buckets: Vec<usize>,
    pooled: Vec<f64>,
    output: Vec<f64>,
}

impl HashingEncoder {
    pub const TABLE: usize = 0;
    pub const WEIGHT: usize = 1;
    pub const BIAS: usize = 2;

    /// Fresh encoder with seeded uniform initialization: embedding entries
    /// in `[-1, 1]`, projection Xavier-uniform, bias zero.
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let table = (0..config.vocab_buckets * config.embed_dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let limit = math::sqrt(6.0 / (config.embed_dim + config.projection_dim) as f64);
        let weight = (0..config.projection_dim * config.embed_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Ok(HashingEncoder {
            config,
            table,
            weight,
            bias: vec![0.0; config.projection_dim],
        })
    }

    /// Builds an encoder from explicit parameter tensors.
    pub fn from_parameters(config: EncoderConfig, table: Vec<f64>, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let checks = [
            (config.vocab_buckets * config.embed_dim, table.len()),
            (config.projection_dim * config.embed_dim, weight.len()),
            (config.projection_dim, bias.len()),
        ];
        for (expected, actual) in checks {
            if expected != actual {
                return Err(Error::Dimension { expected, actual });
            }
        }
        Ok(HashingEncoder {
            config,
            table,
            weight,
            bias,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.config.vocab_buckets as u64) as usize
    }

    fn trace(&self, text: &str) -> TextTrace {
        let d = self.config.embed_dim;
        let p = self.config.projection_dim;
        let buckets: Vec<usize> = tokenize(text).iter().map(|t| self.bucket(t)).collect();
        let mut pooled = vec![0.0; d];
        if !buckets.is_empty() {
            for &b in &buckets {
                for (acc, v) in pooled.iter_mut().zip(&self.table[b * d..(b + 1) * d]) {
                    *acc += v;
                }
            }
            let n = buckets.len() as f64;
            pooled.iter_mut().for_each(|x| *x /= n);
        }
        let output = (0..p)
            .map(|i| math::tanh(math::dot(&self.weight[i * d..(i + 1) * d], &pooled) + self.bias[i]))
            .collect();
        TextTrace {
            buckets,
            pooled,
            output,
        }
    }
}

impl TextEncoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.config.projection_dim
    }

    fn encode(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        Ok(texts
            .iter()
            .map(|t| Embedding {
                values: self.trace(t).output,
            })
            .collect())
    }
}

impl TrainableEncoder for HashingEncoder {
    type Cache = Vec<TextTrace>;

    fn param_sizes(&self) -> Vec<usize> {
        vec![self.table.len(), self.weight.len(), self.bias.len()]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![&self.table, &self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.table, &mut self.weight, &mut self.bias]
    }

    fn forward_train(&self, texts: &[&str]) -> Result<(Vec<Embedding>, Self::Cache)> {
        let traces: Vec<TextTrace> = texts.iter().map(|t| self.trace(t)).collect();
        let out = traces
            .iter()
            .map(|t| Embedding {
                values: t.output.clone(),
            })
            .collect();
        Ok((out, traces))
    }

    fn backward(&self, cache: &Self::Cache, grad_out: &[Vec<f64>], grads: &mut GradBuffer, base: usize) {
        let d = self.config.embed_dim;
        let p = self.config.projection_dim;
        let mut dz = vec![0.0; p];
        let mut dm = vec![0.0; d];
        for (trace, g) in cache.iter().zip(grad_out) {
            for i in 0..p {
                let y = trace.output[i];
                dz[i] = g[i] * (1.0 - y * y);
            }
            {
                let gw = grads.slot_mut(base + Self::WEIGHT);
                for i in 0..p {
                    for j in 0..d {
                        gw[i * d + j] += dz[i] * trace.pooled[j];
                    }
                }
            }
            {
                let gb = grads.slot_mut(base + Self::BIAS);
                for i in 0..p {
                    gb[i] += dz[i];
                }
            }
            if trace.buckets.is_empty() {
                continue;
            }
            dm.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..p {
                for j in 0..d {
                    dm[j] += self.weight[i * d + j] * dz[i];
                }
            }
            let inv_n = 1.0 / trace.buckets.len() as f64;
            let gt = grads.slot_mut(base + Self::TABLE);
            for &b in &trace.buckets {
                for j in 0..d {
                    gt[b * d + j] += dm[j] * inv_n;
                }
            }
        }
    }
}

/// Adapts any [`TextEncoder`] to the training interface with no trainable
/// parameters; gradients stop at its output.
#[derive(Debug, Clone)]
pub struct FrozenEncoder<E>(pub E);

impl<E: TextEncoder> TextEncoder for FrozenEncoder<E> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn encode(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        self.0.encode(texts)
    }
}

impl<E: TextEncoder> TrainableEncoder for FrozenEncoder<E> {
    type Cache = ();

    fn param_sizes(&self) -> Vec<usize> {
        Vec::new()
    }

    fn params(&self) -> Vec<&[f64]> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        Vec::new()
    }

    fn forward_train(&self, texts: &[&str]) -> Result<(Vec<Embedding>, ())> {
        Ok((self.0.encode(texts)?, ()))
    }

    fn backward(&self, _: &(), _: &[Vec<f64>], _: &mut GradBuffer, _: usize) {}
}

/// Checks that an encoder's output width matches what downstream heads expect.
pub fn check_dim(encoder: &impl TextEncoder, expected: usize) -> Result<()> {
    let actual = encoder.dim();
    if actual != expected {
        return Err(Error::Config(alloc::format!(
            "encoder dimension mismatch: heads expect {expected}, encoder produces {actual}"
        )));
    }
    Ok(())
}
