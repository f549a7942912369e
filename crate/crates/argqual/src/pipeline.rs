//! Stage compositions shared by the subcommands.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use argqual_core::contrastive::{contrastive_train, ContrastiveConfig, ContrastiveOutcome};
use argqual_core::corpus::extract_triplets;
use argqual_core::eval::{evaluate, seed_summary, EvalReport, SeedRun, SeedSummary};
use argqual_core::mtl::{train, MtlModel, TrainConfig, TrainOutcome};
use argqual_core::{ArgumentInstance, Error};
use serde::{Deserialize, Serialize};

use crate::encoders::{load_pretrained, EncoderDescriptor, LoadedEncoder};
use crate::error::Result;

pub fn build_model(descriptor: &EncoderDescriptor, seed: u64) -> Result<MtlModel<LoadedEncoder>> {
    let encoder = load_pretrained(descriptor, None)?;
    Ok(MtlModel::new("mtl", encoder, seed))
}

/// Contrastive pre-training on triplets mined from `train_set`.
pub fn contrastive_stage(
    model: &mut MtlModel<LoadedEncoder>,
    train_set: &[ArgumentInstance],
    config: &ContrastiveConfig,
) -> Result<ContrastiveOutcome> {
    if !model.encoder.is_trainable() {
        return Err(Error::Config(
            "contrastive training needs a trainable encoder; external encoders are frozen".into(),
        )
        .into());
    }
    let triplets = extract_triplets(train_set);
    log::info!("contrastive stage on {} triplets", triplets.len());
    Ok(contrastive_train(&mut model.encoder, &triplets, config)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedRun {
    pub seed: u64,
    pub contrastive: Option<ContrastiveOutcome>,
    pub outcome: TrainOutcome,
    pub dev_report: EvalReport,
}

/// Optional contrastive stage, multi-task training with best-epoch
/// restore, then a dev evaluation of the restored model.
pub fn train_pipeline(
    model: &mut MtlModel<LoadedEncoder>,
    train_set: &[ArgumentInstance],
    dev_set: &[ArgumentInstance],
    config: &TrainConfig,
    contrastive: Option<&ContrastiveConfig>,
) -> Result<TrainedRun> {
    let contrastive = contrastive
        .map(|c| contrastive_stage(model, train_set, c))
        .transpose()?;
    let outcome = train(model, train_set, dev_set, config)?;
    let preds = model.predict_all(dev_set)?;
    let dev_report = evaluate(&preds, dev_set, config.metric)?;
    Ok(TrainedRun {
        seed: config.seed,
        contrastive,
        outcome,
        dev_report,
    })
}

pub type SweepRun = (MtlModel<LoadedEncoder>, TrainedRun);

pub struct SweepSpec<'a> {
    pub descriptor: &'a EncoderDescriptor,
    pub train: &'a TrainConfig,
    pub contrastive: Option<&'a ContrastiveConfig>,
    pub first_seed: u64,
    pub runs: usize,
    pub parallelism: usize,
}

/// Trains seeds `first_seed..first_seed + runs` with at most
/// `parallelism` trainings in flight. Results come back in seed order.
pub fn seed_sweep(
    spec: &SweepSpec<'_>,
    train_set: &[ArgumentInstance],
    dev_set: &[ArgumentInstance],
) -> Result<Vec<SweepRun>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<SweepRun>>>> = (0..spec.runs).map(|_| Mutex::new(None)).collect();
    let one = |i: usize| -> Result<SweepRun> {
        let seed = spec.first_seed + i as u64;
        let mut model = build_model(spec.descriptor, seed)?;
        let cfg = TrainConfig {
            seed,
            ..spec.train.clone()
        };
        let con = spec.contrastive.map(|c| ContrastiveConfig { seed, ..c.clone() });
        let run = train_pipeline(&mut model, train_set, dev_set, &cfg, con.as_ref())?;
        log::info!("seed {seed}: best epoch {}", run.outcome.best_epoch);
        Ok((model, run))
    };
    std::thread::scope(|s| {
        for _ in 0..spec.parallelism.clamp(1, spec.runs.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= spec.runs {
                    break;
                }
                let r = one(i);
                if let Ok(mut slot) = slots[i].lock() {
                    *slot = Some(r);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .ok()
                .flatten()
                .unwrap_or_else(|| Err(Error::Data("a sweep worker did not report".into()).into()))
        })
        .collect()
}

/// Aggregates sweep runs; a single run yields no summary.
pub fn summarize(runs: &[TrainedRun]) -> Result<Option<SeedSummary>> {
    if runs.len() < 2 {
        return Ok(None);
    }
    let seed_runs: Vec<SeedRun> = runs
        .iter()
        .map(|r| SeedRun {
            seed: r.seed,
            epoch_losses: r.outcome.history.iter().map(|h| h.train_loss).collect(),
            combined_f1: r.dev_report.combined.unwrap_or(f64::NAN),
        })
        .collect();
    Ok(Some(seed_summary(&seed_runs)?))
}
