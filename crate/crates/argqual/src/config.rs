//! Run configuration. Every field has a default, so `{}` is a valid file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use argqual_core::baseline::BaselineConfig;
use argqual_core::contrastive::ContrastiveConfig;
use argqual_core::eval::CombinedMetric;
use argqual_core::mtl::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::completion::{CompletionProvider, MockProvider, OpenAiCompatible, PromptSettings, ReplayCache, ReplayOnly};
use crate::dataset::ColumnMap;
use crate::encoders::EncoderDescriptor;
use crate::error::{CliError, Result};
use crate::fsutil::read_json;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub columns: ColumnMap,
}

/// Per-field overrides applied on top of the named training profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOverrides {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub grad_accumulation: Option<usize>,
    pub batch_size: Option<usize>,
    pub weight_decay: Option<f64>,
    pub task_probabilities: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    /// `mock`, `replay-only` or `http-openai-compatible`.
    pub kind: String,
    pub base_url: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub cache_dir: Option<PathBuf>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub mock: MockProvider,
    pub settings: PromptSettings,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: "replay-only".into(),
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            cache_dir: None,
            timeout_secs: 60,
            max_retries: 3,
            mock: MockProvider::always("no"),
            settings: PromptSettings::default(),
        }
    }
}

impl ProviderConfig {
    pub fn build(&self) -> Result<Box<dyn CompletionProvider>> {
        match self.kind.as_str() {
            "mock" => Ok(Box::new(self.mock.clone())),
            "replay-only" => Ok(Box::new(ReplayOnly)),
            "http-openai-compatible" => {
                let key = std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty());
                if key.is_none() {
                    log::warn!("{} is not set; sending requests without an API key", self.api_key_env);
                }
                Ok(Box::new(OpenAiCompatible::new(
                    &self.base_url,
                    key,
                    Duration::from_secs(self.timeout_secs),
                    self.max_retries,
                )?))
            }
            other => Err(argqual_core::Error::Config(format!(
                "unknown provider {other:?} (expected mock, replay-only or http-openai-compatible)"
            ))
            .into()),
        }
    }

    pub fn cache(&self) -> Option<ReplayCache> {
        self.cache_dir.as_ref().map(ReplayCache::new)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub encoder: EncoderDescriptor,
    /// `clteaml-2` or `clteaml-4`.
    pub profile: String,
    pub train: TrainOverrides,
    pub contrastive: ContrastiveConfig,
    pub prompt: ProviderConfig,
    pub baseline: BaselineConfig,
    pub metric: CombinedMetric,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Number of consecutive seeds for `seed-sweep`.
    pub seeds: usize,
    /// Concurrent trainings during `seed-sweep`.
    pub sweep_parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            encoder: EncoderDescriptor::default(),
            profile: "clteaml-2".into(),
            train: TrainOverrides::default(),
            contrastive: ContrastiveConfig::default(),
            prompt: ProviderConfig::default(),
            baseline: BaselineConfig::default(),
            metric: CombinedMetric::default(),
            output_dir: PathBuf::from("runs/latest"),
            seed: 0,
            seeds: 3,
            sweep_parallelism: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Profile values, then overrides, then the run seed and metric.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::profile(&self.profile)?;
        let o = &self.train;
        if let Some(v) = o.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = o.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = o.grad_accumulation {
            cfg.grad_accumulation = v;
        }
        if let Some(v) = o.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = o.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = o.task_probabilities {
            cfg.task_probabilities = v;
        }
        cfg.seed = self.seed;
        cfg.metric = self.metric;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn contrastive_config(&self) -> Result<ContrastiveConfig> {
        let cfg = ContrastiveConfig {
            seed: self.seed,
            ..self.contrastive.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config()?;
        self.contrastive_config()?;
        for c in [self.baseline.c_validity, self.baseline.c_novelty] {
            if !(c.is_finite() && c > 0.0) {
                return Err(argqual_core::Error::Config(format!("baseline C must be positive, got {c}")).into());
            }
        }
        if self.seeds == 0 {
            return Err(CliError::Usage("seeds must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let t = cfg.train_config().unwrap();
        assert_eq!((t.learning_rate, t.epochs, t.grad_accumulation), (1e-5, 9, 1));
        assert_eq!((cfg.baseline.c_validity, cfg.baseline.c_novelty), (0.09, 4.7));
    }

    #[test]
    fn profile_and_overrides() {
        let cfg: RunConfig = serde_json::from_str(r#"{"profile":"clteaml-4","train":{"epochs":2},"seed":5}"#).unwrap();
        let t = cfg.train_config().unwrap();
        assert_eq!((t.learning_rate, t.epochs, t.grad_accumulation, t.seed), (5e-6, 2, 4, 5));
    }

    #[test]
    fn bad_profile_is_config_error() {
        let cfg = RunConfig {
            profile: "clteaml-9".into(),
            ..RunConfig::default()
        };
        assert_eq!(cfg.train_config().unwrap_err().category(), "config");
    }

    #[test]
    fn unknown_provider_rejected() {
        let p = ProviderConfig {
            kind: "carrier-pigeon".into(),
            ..ProviderConfig::default()
        };
        assert!(p.build().is_err());
    }
}
