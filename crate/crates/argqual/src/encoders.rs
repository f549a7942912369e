//! Encoder descriptors and the out-of-process encoder adapter.
//!
//! An external encoder is either a subprocess that reads one text per line
//! on stdin and answers each with one line of space-separated numbers, or an
//! HTTP endpoint that takes a text as the POST body and answers with a JSON
//! array of numbers.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use argqual_core::encoder::{
    check_dim, Embedding, EncoderConfig, FrozenEncoder, HashingEncoder, TextEncoder, TextTrace, TrainableEncoder,
};
use argqual_core::optim::GradBuffer;
use argqual_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderDescriptor {
    /// Fresh in-process hashing encoder.
    Reference {
        #[serde(default)]
        config: EncoderConfig,
    },
    External {
        transport: Transport,
        dim: usize,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    30
}

impl Default for EncoderDescriptor {
    fn default() -> Self {
        EncoderDescriptor::Reference {
            config: EncoderConfig::default(),
        }
    }
}

impl EncoderDescriptor {
    /// Resolves a bare backend name. Only `reference` is complete without
    /// further settings.
    pub fn named(name: &str, config: EncoderConfig) -> argqual_core::Result<Self> {
        match name {
            "reference" => Ok(EncoderDescriptor::Reference { config }),
            "external" => Err(Error::Config(
                "the external encoder needs a transport; set encoder.transport in the run config".into(),
            )),
            other => Err(Error::Config(format!(
                "unknown encoder {other:?} (expected reference or external)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    Subprocess {
        command: String,
        #[serde(default)]
        args: Vec<String>,
    },
    Http {
        url: String,
    },
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for Pipe {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Clone)]
enum Backend {
    Subprocess(Arc<Mutex<Pipe>>),
    Http {
        url: String,
        client: reqwest::blocking::Client,
    },
}

#[derive(Clone)]
pub struct ExternalEncoder {
    backend: Backend,
    dim: usize,
}

impl std::fmt::Debug for ExternalEncoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.backend {
            Backend::Subprocess(_) => "subprocess".to_string(),
            Backend::Http { url, .. } => format!("http {url}"),
        };
        f.debug_struct("ExternalEncoder").field("backend", &kind).field("dim", &self.dim).finish()
    }
}

fn parse_vector(line: &str) -> argqual_core::Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Encoder(format!("bad vector component {t:?}")))
        })
        .collect()
}

impl ExternalEncoder {
    pub fn connect(transport: &Transport, dim: usize, timeout_secs: u64) -> argqual_core::Result<Self> {
        let backend = match transport {
            Transport::Subprocess { command, args } => {
                let mut child = Command::new(command)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::Config(format!("cannot start external encoder {command:?}: {e}")))?;
                let (Some(stdin), Some(stdout)) = (child.stdin.take(), child.stdout.take()) else {
                    return Err(Error::Config("external encoder pipes unavailable".into()));
                };
                Backend::Subprocess(Arc::new(Mutex::new(Pipe {
                    child,
                    stdin,
                    stdout: BufReader::new(stdout),
                })))
            }
            Transport::Http { url } => {
                let client = reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs(timeout_secs))
                    .build()
                    .map_err(|e| Error::Config(format!("http client: {e}")))?;
                Backend::Http { url: url.clone(), client }
            }
        };
        Ok(ExternalEncoder { backend, dim })
    }

    fn encode_one(&self, text: &str) -> argqual_core::Result<Vec<f64>> {
        let line = text.replace(['\n', '\r'], " ");
        let values = match &self.backend {
            Backend::Subprocess(pipe) => {
                let mut pipe = pipe
                    .lock()
                    .map_err(|_| Error::Encoder("external encoder pipe poisoned".into()))?;
                writeln!(pipe.stdin, "{line}")
                    .and_then(|_| pipe.stdin.flush())
                    .map_err(|e| Error::Encoder(format!("writing to external encoder: {e}")))?;
                let mut reply = String::new();
                let n = pipe
                    .stdout
                    .read_line(&mut reply)
                    .map_err(|e| Error::Encoder(format!("reading from external encoder: {e}")))?;
                if n == 0 {
                    return Err(Error::Encoder("external encoder closed its output".into()));
                }
                parse_vector(&reply)?
            }
            Backend::Http { url, client } => {
                let resp = client
                    .post(url)
                    .header("content-type", "text/plain; charset=utf-8")
                    .body(line)
                    .send()
                    .map_err(|e| Error::Encoder(format!("external encoder at {url}: {e}")))?;
                if !resp.status().is_success() {
                    return Err(Error::Encoder(format!("external encoder at {url}: HTTP {}", resp.status())));
                }
                let body = resp
                    .text()
                    .map_err(|e| Error::Encoder(format!("external encoder at {url}: {e}")))?;
                let values: Vec<f64> = serde_json::from_str(&body)
                    .map_err(|e| Error::Encoder(format!("external encoder reply is not a JSON number array: {e}")))?;
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Encoder("external encoder returned a non-finite value".into()));
                }
                values
            }
        };
        if values.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: values.len(),
            });
        }
        Ok(values)
    }
}

impl TextEncoder for ExternalEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, texts: &[&str]) -> argqual_core::Result<Vec<Embedding>> {
        texts
            .iter()
            .map(|t| self.encode_one(t).map(|values| Embedding { values }))
            .collect()
    }
}

/// A ready encoder: the reference one trains end to end, an external one is
/// wrapped as frozen since its weights live in another process.
#[derive(Debug, Clone)]
pub enum LoadedEncoder {
    Reference(HashingEncoder),
    External(FrozenEncoder<ExternalEncoder>),
}

impl LoadedEncoder {
    pub fn is_trainable(&self) -> bool {
        matches!(self, LoadedEncoder::Reference(_))
    }
}

impl TextEncoder for LoadedEncoder {
    fn dim(&self) -> usize {
        match self {
            LoadedEncoder::Reference(e) => e.dim(),
            LoadedEncoder::External(e) => e.dim(),
        }
    }

    fn encode(&self, texts: &[&str]) -> argqual_core::Result<Vec<Embedding>> {
        match self {
            LoadedEncoder::Reference(e) => e.encode(texts),
            LoadedEncoder::External(e) => e.encode(texts),
        }
    }
}

pub enum LoadedCache {
    Reference(Vec<TextTrace>),
    External,
}

impl TrainableEncoder for LoadedEncoder {
    type Cache = LoadedCache;

    fn param_sizes(&self) -> Vec<usize> {
        match self {
            LoadedEncoder::Reference(e) => e.param_sizes(),
            LoadedEncoder::External(e) => e.param_sizes(),
        }
    }

    fn params(&self) -> Vec<&[f64]> {
        match self {
            LoadedEncoder::Reference(e) => e.params(),
            LoadedEncoder::External(e) => e.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            LoadedEncoder::Reference(e) => e.params_mut(),
            LoadedEncoder::External(e) => e.params_mut(),
        }
    }

    fn forward_train(&self, texts: &[&str]) -> argqual_core::Result<(Vec<Embedding>, LoadedCache)> {
        match self {
            LoadedEncoder::Reference(e) => e.forward_train(texts).map(|(emb, c)| (emb, LoadedCache::Reference(c))),
            LoadedEncoder::External(e) => e.forward_train(texts).map(|(emb, _)| (emb, LoadedCache::External)),
        }
    }

    fn backward(&self, cache: &LoadedCache, grad_out: &[Vec<f64>], grads: &mut GradBuffer, base: usize) {
        if let (LoadedEncoder::Reference(e), LoadedCache::Reference(c)) = (self, cache) {
            e.backward(c, grad_out, grads, base);
        }
    }
}

/// Resolves a descriptor and probes external encoders once so that an
/// unreachable endpoint or wrong vector width fails here rather than
/// mid-training. `expected_dim`, when given, must match the encoder width.
pub fn load_pretrained(descriptor: &EncoderDescriptor, expected_dim: Option<usize>) -> argqual_core::Result<LoadedEncoder> {
    let loaded = match descriptor {
        EncoderDescriptor::Reference { config } => LoadedEncoder::Reference(HashingEncoder::new(*config)?),
        EncoderDescriptor::External {
            transport,
            dim,
            timeout_secs,
        } => {
            if *dim == 0 {
                return Err(Error::Config("external encoder dim must be >= 1".into()));
            }
            let enc = ExternalEncoder::connect(transport, *dim, *timeout_secs)?;
            match enc.encode_one("probe") {
                Ok(_) => {}
                Err(Error::Encoder(msg)) => {
                    return Err(Error::Config(format!("external encoder unreachable or unusable: {msg}")))
                }
                Err(e) => return Err(e),
            }
            LoadedEncoder::External(FrozenEncoder(enc))
        }
    };
    if let Some(expected) = expected_dim {
        match &loaded {
            LoadedEncoder::Reference(e) => check_dim(e, expected)?,
            LoadedEncoder::External(e) => check_dim(e, expected)?,
        }
    }
    Ok(loaded)
}
