//! Subcommand definitions and dispatch for the `argqual` binary.

use std::path::{Path, PathBuf};

use argqual_core::baseline::BaselineModel;
use argqual_core::contrastive::contrastive_train;
use argqual_core::corpus::{class_distribution, extract_triplets, topic_overlap, topics};
use argqual_core::eval::{evaluate, CombinedMetric, EvalReport, SeedSummary};
use argqual_core::mtl::{EpochRecord, MtlModel};
use argqual_core::predictions::{mix, PredictionSet};
use argqual_core::{ArgumentInstance, Error, Split, Task};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::completion::prompt_predict;
use crate::config::RunConfig;
use crate::dataset::{load_corpus, write_corpus, ColumnMap};
use crate::encoders::LoadedEncoder;
use crate::error::{CliError, Result};
use crate::fixture::write_shared_task_fixture;
use crate::fsutil::read_json;
use crate::pipeline::{build_model, seed_sweep, summarize, train_pipeline, SweepSpec, TrainedRun};
use crate::predio::{load_predictions, to_csv};
use crate::report::{render_summary, render_text, write_envelope_plots, write_history_plots};
use crate::rundir::RunDir;

#[derive(Debug, Parser)]
#[command(name = "argqual", version, about = "Argument validity and novelty prediction pipeline")]
pub struct Cli {
    /// JSON run configuration; every field is optional.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run seed, overriding `seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Training corpus (CSV or TSV).
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,
    /// Development corpus.
    #[arg(long, value_name = "FILE")]
    pub dev: Option<PathBuf>,
    /// Test corpus.
    #[arg(long, value_name = "FILE")]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Validity,
    Novelty,
    Both,
}

impl TaskArg {
    fn tasks(self) -> Vec<Task> {
        match self {
            TaskArg::Validity => vec![Task::Validity],
            TaskArg::Novelty => vec![Task::Novelty],
            TaskArg::Both => Task::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    JointMacroF1,
    MeanTaskMacroF1,
}

impl From<MetricArg> for CombinedMetric {
    fn from(m: MetricArg) -> CombinedMetric {
        match m {
            MetricArg::JointMacroF1 => CombinedMetric::JointMacroF1,
            MetricArg::MeanTaskMacroF1 => CombinedMetric::MeanTaskMacroF1,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate corpora, write normalized copies and corpus statistics.
    PrepareData {
        #[command(flatten)]
        data: DataArgs,
        /// Write the synthetic shared-task fixture instead of reading corpora.
        #[arg(long, value_name = "SEED")]
        synthetic: Option<u64>,
    },
    /// Multi-task training with dev-based checkpoint selection.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Start from this checkpoint instead of a fresh model.
        #[arg(long, value_name = "FILE")]
        init: Option<PathBuf>,
        /// Run the contrastive stage before multi-task training.
        #[arg(long)]
        contrastive: bool,
    },
    /// Triplet-loss training of the encoder alone.
    ContrastiveTrain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        init: Option<PathBuf>,
    },
    /// Label a corpus with a trained checkpoint.
    Predict {
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Few-shot prompt a completion provider for one task.
    PromptPredict {
        #[arg(long, value_name = "FILE")]
        train: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        /// Provider kind: mock, replay-only or http-openai-compatible.
        #[arg(long)]
        provider: Option<String>,
        #[arg(long, value_name = "DIR")]
        cache_dir: Option<PathBuf>,
    },
    /// TF-IDF + linear SVM per task.
    Baseline {
        #[arg(long, value_name = "FILE")]
        train: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Validity labels from one prediction file, novelty from another.
    Mix {
        #[arg(long, value_name = "FILE")]
        validity: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        novelty: Option<PathBuf>,
    },
    /// Score predictions against gold labels.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        predictions: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        gold: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
    },
    /// Render tables and plot data from earlier run directories.
    Report {
        #[arg(required = true, value_name = "RUN_DIR")]
        runs: Vec<PathBuf>,
    },
    /// Train with consecutive seeds and summarize the spread.
    SeedSweep {
        #[command(flatten)]
        data: DataArgs,
        /// Number of seeds, overriding `seeds` from the configuration.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        contrastive: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::PrepareData { .. } => "prepare-data",
            Command::Train { .. } => "train",
            Command::ContrastiveTrain { .. } => "contrastive-train",
            Command::Predict { .. } => "predict",
            Command::PromptPredict { .. } => "prompt-predict",
            Command::Baseline { .. } => "baseline",
            Command::Mix { .. } => "mix",
            Command::Evaluate { .. } => "evaluate",
            Command::Report { .. } => "report",
            Command::SeedSweep { .. } => "seed-sweep",
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Errors are printed to stderr as a single `error[category]: message` line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::Usage(msg.to_string()).one_line());
            return CliError::Usage(String::new()).exit_code();
        }
    };
    match execute(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.one_line());
            e.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(&require_file(Some(p), "--config")?)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Missing or absent inputs are usage errors.
fn require_file(path: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    match path {
        None => Err(CliError::Usage(format!("{what} is required"))),
        Some(p) if !p.is_file() => Err(CliError::Usage(format!("{what}: {} does not exist", p.display()))),
        Some(p) => Ok(p.clone()),
    }
}

fn pick<'a>(flag: &'a Option<PathBuf>, config: &'a Option<PathBuf>) -> Option<&'a PathBuf> {
    flag.as_ref().or(config.as_ref())
}

struct Ctx {
    cfg: RunConfig,
    run: RunDir,
}

impl Ctx {
    fn corpus(&mut self, role: &str, path: &Path, split: Split) -> Result<Vec<ArgumentInstance>> {
        self.run.add_input(role, path)?;
        load_corpus(path, &self.cfg.data.columns, split)
    }

    fn predictions(&mut self, role: &str, path: &Path) -> Result<PredictionSet> {
        self.run.add_input(role, path)?;
        load_predictions(path)
    }

    fn checkpoint(&mut self, path: &Path) -> Result<Checkpoint> {
        self.run.add_input("checkpoint", path)?;
        load_checkpoint(path)
    }

    fn report(&mut self, stem: &str, report: &EvalReport) -> Result<String> {
        let text = render_text(report);
        self.run.write_json(&format!("{stem}.json"), report)?;
        self.run.write(&format!("{stem}.txt"), text.as_bytes())?;
        Ok(text)
    }

    fn history_plots(&mut self, prefix: &str, history: &[EpochRecord]) -> Result<()> {
        let dir = self.run.path(prefix);
        write_history_plots(&dir, history)?;
        for f in ["loss.dat", "dev_f1.dat"] {
            self.run.add_output(&format!("{prefix}{f}"))?;
        }
        Ok(())
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    cfg.validate()?;
    let run = RunDir::create(&cfg.output_dir, cli.command.name(), argv, &cfg)?;
    let mut ctx = Ctx { cfg, run };
    match cli.command {
        Command::PrepareData { data, synthetic } => prepare_data(&mut ctx, &data, synthetic)?,
        Command::Train { data, init, contrastive } => train_cmd(&mut ctx, &data, init.as_ref(), contrastive)?,
        Command::ContrastiveTrain { data, init } => contrastive_cmd(&mut ctx, &data, init.as_ref())?,
        Command::Predict {
            checkpoint,
            input,
            task,
            split,
        } => {
            let ckpt = ctx.checkpoint(&require_file(checkpoint.as_ref(), "--checkpoint")?)?;
            let input = require_file(input.as_ref(), "--input")?;
            let rows = ctx.corpus("input", &input, split.into())?;
            let model = ckpt.into_model()?;
            let mut preds = Vec::new();
            for t in task.tasks() {
                preds.extend(model.predict(&rows, t)?);
            }
            let set = PredictionSet::new(preds)?;
            ctx.run.write("predictions.csv", &to_csv(&set))?;
            println!("{} predictions written to {}", set.len(), ctx.run.path("predictions.csv").display());
        }
        Command::PromptPredict {
            train,
            input,
            task,
            split,
            provider,
            cache_dir,
        } => {
            let tasks = task.tasks();
            let [task] = tasks.as_slice() else {
                return Err(CliError::Usage("prompt-predict takes --task validity or --task novelty".into()));
            };
            let train = require_file(pick(&train, &ctx.cfg.data.train), "--train")?;
            let input = require_file(input.as_ref(), "--input")?;
            let train_rows = ctx.corpus("train", &train, Split::Train)?;
            let rows = ctx.corpus("input", &input, split.into())?;
            let mut pcfg = ctx.cfg.prompt.clone();
            if let Some(kind) = provider {
                pcfg.kind = kind;
            }
            if cache_dir.is_some() {
                pcfg.cache_dir = cache_dir;
            }
            let provider = pcfg.build()?;
            let cache = pcfg.cache();
            let set = prompt_predict(&train_rows, &rows, *task, provider.as_ref(), cache.as_ref(), &pcfg.settings)?;
            let flagged = set.rows().iter().filter(|p| p.flagged).count();
            ctx.run.write("predictions.csv", &to_csv(&set))?;
            println!("{} {task} predictions ({flagged} flagged)", set.len());
        }
        Command::Baseline { train, input, split } => {
            let train = require_file(pick(&train, &ctx.cfg.data.train), "--train")?;
            let input = require_file(input.as_ref(), "--input")?;
            let train_rows = ctx.corpus("train", &train, Split::Train)?;
            let rows = ctx.corpus("input", &input, split.into())?;
            let model = BaselineModel::fit(&train_rows, &ctx.cfg.baseline)?;
            let preds: Vec<_> = Task::ALL
                .iter()
                .flat_map(|&t| rows.iter().map(move |r| (r, t)))
                .map(|(r, t)| model.predict(r, t))
                .collect();
            let set = PredictionSet::new(preds)?;
            ctx.run.write_json("baseline.json", &model)?;
            ctx.run.write("predictions.csv", &to_csv(&set))?;
            println!("{} predictions written to {}", set.len(), ctx.run.path("predictions.csv").display());
        }
        Command::Mix { validity, novelty } => {
            let a = ctx.predictions("validity", &require_file(validity.as_ref(), "--validity")?)?;
            let b = ctx.predictions("novelty", &require_file(novelty.as_ref(), "--novelty")?)?;
            let mixed = mix(&a, &b)?;
            ctx.run.write("predictions.csv", &to_csv(&mixed.set))?;
            ctx.run.write_json("mix.json", &serde_json::json!({ "tag": mixed.tag }))?;
            println!("{}: {} predictions", mixed.tag, mixed.set.len());
        }
        Command::Evaluate {
            predictions,
            gold,
            split,
            metric,
        } => {
            let preds = ctx.predictions("predictions", &require_file(predictions.as_ref(), "--predictions")?)?;
            let gold = ctx.corpus("gold", &require_file(gold.as_ref(), "--gold")?, split.into())?;
            let metric = metric.map(Into::into).unwrap_or(ctx.cfg.metric);
            let report = evaluate(&preds, &gold, metric)?;
            print!("{}", ctx.report("report", &report)?);
        }
        Command::Report { runs } => report_cmd(&mut ctx, &runs)?,
        Command::SeedSweep {
            data,
            runs,
            parallelism,
            contrastive,
        } => sweep_cmd(&mut ctx, &data, runs, parallelism, contrastive)?,
    }
    ctx.run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct SplitStats {
    split: Split,
    instances: usize,
    distribution: [usize; 4],
    topics: usize,
}

#[derive(Serialize)]
struct DataStats {
    splits: Vec<SplitStats>,
    /// `[a, b, overlap]` for every pair of loaded splits.
    topic_overlap: Vec<(Split, Split, usize)>,
}

fn prepare_data(ctx: &mut Ctx, data: &DataArgs, synthetic: Option<u64>) -> Result<()> {
    let columns = ctx.cfg.data.columns.clone();
    let mut loaded: Vec<(Split, Vec<ArgumentInstance>)> = Vec::new();
    if let Some(seed) = synthetic {
        let paths = write_shared_task_fixture(ctx.run.root(), seed)?;
        for (split, path) in [Split::Train, Split::Dev, Split::Test].into_iter().zip(&paths) {
            let name = format!("{}.csv", split.as_str());
            ctx.run.add_output(&name)?;
            loaded.push((split, load_corpus(path, &ColumnMap::default(), split)?));
        }
    } else {
        let cfg_data = ctx.cfg.data.clone();
        let choices = [
            (Split::Train, pick(&data.train, &cfg_data.train)),
            (Split::Dev, pick(&data.dev, &cfg_data.dev)),
            (Split::Test, pick(&data.test, &cfg_data.test)),
        ];
        if choices.iter().all(|(_, p)| p.is_none()) {
            return Err(CliError::Usage("give at least one of --train, --dev, --test or --synthetic".into()));
        }
        for (split, path) in choices {
            let Some(path) = path else { continue };
            let path = require_file(Some(path), &format!("--{}", split.as_str()))?;
            let rows = ctx.corpus(split.as_str(), &path, split)?;
            let name = format!("{}.csv", split.as_str());
            write_corpus(&ctx.run.path(&name), &rows, &columns)?;
            ctx.run.add_output(&name)?;
            loaded.push((split, rows));
        }
    }
    let mut stats = DataStats {
        splits: Vec::new(),
        topic_overlap: Vec::new(),
    };
    let mut text = format!("{:<8}{:>10}{:>24}{:>8}\n", "split", "size", "distribution", "topics");
    for (split, rows) in &loaded {
        let d = class_distribution(rows).counts;
        let t = topics(rows).len();
        text.push_str(&format!(
            "{:<8}{:>10}{:>24}{:>8}\n",
            split.as_str(),
            rows.len(),
            format!("{}/{}/{}/{}", d[0], d[1], d[2], d[3]),
            t
        ));
        stats.splits.push(SplitStats {
            split: *split,
            instances: rows.len(),
            distribution: d,
            topics: t,
        });
    }
    for i in 0..loaded.len() {
        for j in i + 1..loaded.len() {
            let o = topic_overlap(&loaded[i].1, &loaded[j].1);
            text.push_str(&format!("topic overlap {}/{}: {o}\n", loaded[i].0.as_str(), loaded[j].0.as_str()));
            stats.topic_overlap.push((loaded[i].0, loaded[j].0, o));
        }
    }
    ctx.run.write_json("stats.json", &stats)?;
    ctx.run.write("stats.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn train_dev(ctx: &mut Ctx, data: &DataArgs) -> Result<(Vec<ArgumentInstance>, Vec<ArgumentInstance>)> {
    let cfg_data = ctx.cfg.data.clone();
    let train = require_file(pick(&data.train, &cfg_data.train), "--train")?;
    let dev = require_file(pick(&data.dev, &cfg_data.dev), "--dev")?;
    Ok((ctx.corpus("train", &train, Split::Train)?, ctx.corpus("dev", &dev, Split::Dev)?))
}

fn initial_model(ctx: &mut Ctx, init: Option<&PathBuf>) -> Result<(MtlModel<LoadedEncoder>, Option<Checkpoint>)> {
    match init {
        Some(p) => {
            let ckpt = ctx.checkpoint(&require_file(Some(p), "--init")?)?;
            Ok((ckpt.clone().into_model()?, Some(ckpt)))
        }
        None => Ok((build_model(&ctx.cfg.encoder, ctx.cfg.seed)?, None)),
    }
}

fn descriptor_of(ctx: &Ctx, init: &Option<Checkpoint>) -> crate::encoders::EncoderDescriptor {
    init.as_ref().map_or_else(|| ctx.cfg.encoder.clone(), |c| c.encoder.clone())
}

fn write_trained(ctx: &mut Ctx, prefix: &str, model: &MtlModel<LoadedEncoder>, run: &TrainedRun, base: Checkpoint) -> Result<()> {
    let mut ckpt = Checkpoint::from_model(model, &base.encoder);
    ckpt.train_config = Some(ctx.cfg.train_config()?.clone());
    if let Some(tc) = &mut ckpt.train_config {
        tc.seed = run.seed;
    }
    ckpt.contrastive_config = base.contrastive_config.clone();
    ckpt.best_epoch = Some(run.outcome.best_epoch);
    ckpt.history = run.outcome.history.clone();
    let name = format!("{prefix}checkpoint.json");
    save_checkpoint(&ctx.run.path(&name), &ckpt)?;
    ctx.run.add_output(&name)?;
    ctx.run.write_json(&format!("{prefix}history.json"), &run.outcome)?;
    ctx.history_plots(prefix, &run.outcome.history)?;
    ctx.report(&format!("{prefix}dev_report"), &run.dev_report)?;
    Ok(())
}

fn train_cmd(ctx: &mut Ctx, data: &DataArgs, init: Option<&PathBuf>, contrastive: bool) -> Result<()> {
    let (train, dev) = train_dev(ctx, data)?;
    let (mut model, init_ckpt) = initial_model(ctx, init)?;
    let tcfg = ctx.cfg.train_config()?;
    let ccfg = ctx.cfg.contrastive_config()?;
    let run = train_pipeline(&mut model, &train, &dev, &tcfg, contrastive.then_some(&ccfg))?;
    let mut base = Checkpoint::from_model(&model, &descriptor_of(ctx, &init_ckpt));
    base.contrastive_config = if contrastive {
        Some(ccfg)
    } else {
        init_ckpt.and_then(|c| c.contrastive_config)
    };
    write_trained(ctx, "", &model, &run, base)?;
    println!(
        "best epoch {} of {}: dev combined {:.4}",
        run.outcome.best_epoch,
        run.outcome.history.len(),
        run.dev_report.combined.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn contrastive_cmd(ctx: &mut Ctx, data: &DataArgs, init: Option<&PathBuf>) -> Result<()> {
    let cfg_data = ctx.cfg.data.clone();
    let train = require_file(pick(&data.train, &cfg_data.train), "--train")?;
    let rows = ctx.corpus("train", &train, Split::Train)?;
    let (mut model, init_ckpt) = initial_model(ctx, init)?;
    if !model.encoder.is_trainable() {
        return Err(Error::Config(
            "contrastive training needs a trainable encoder; external encoders are frozen".into(),
        )
        .into());
    }
    let ccfg = ctx.cfg.contrastive_config()?;
    let triplets = extract_triplets(&rows);
    let outcome = contrastive_train(&mut model.encoder, &triplets, &ccfg)?;
    let mut ckpt = Checkpoint::from_model(&model, &descriptor_of(ctx, &init_ckpt));
    ckpt.contrastive_config = Some(ccfg);
    save_checkpoint(&ctx.run.path("checkpoint.json"), &ckpt)?;
    ctx.run.add_output("checkpoint.json")?;
    ctx.run.write_json("contrastive.json", &outcome)?;
    let points: Vec<(f64, f64)> = outcome
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(i, l)| (i as f64, *l))
        .collect();
    ctx.run.write("contrastive_loss.dat", crate::report::plot_data(&points).as_bytes())?;
    println!(
        "{} triplets, final loss {:.4}",
        triplets.len(),
        outcome.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn report_cmd(ctx: &mut Ctx, runs: &[PathBuf]) -> Result<()> {
    let mut text = String::new();
    for (i, dir) in runs.iter().enumerate() {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{} is not a run directory", dir.display())));
        }
        let mut found = false;
        text.push_str(&format!("== {}\n", dir.display()));
        for stem in ["report", "dev_report"] {
            let p = dir.join(format!("{stem}.json"));
            if p.is_file() {
                ctx.run.add_input(&format!("{i}/{stem}"), &p)?;
                let r: EvalReport = read_json(&p)?;
                text.push_str(&render_text(&r));
                found = true;
            }
        }
        let history = dir.join("history.json");
        if history.is_file() {
            ctx.run.add_input(&format!("{i}/history"), &history)?;
            let outcome: argqual_core::mtl::TrainOutcome = read_json(&history)?;
            ctx.history_plots(&format!("run-{i}/"), &outcome.history)?;
            found = true;
        }
        let summary = dir.join("seed_summary.json");
        if summary.is_file() {
            ctx.run.add_input(&format!("{i}/seed_summary"), &summary)?;
            let s: SeedSummary = read_json(&summary)?;
            text.push_str(&render_summary(&s));
            write_envelope_plots(&ctx.run.path(&format!("run-{i}")), &s)?;
            for f in ["loss_min.dat", "loss_mean.dat", "loss_max.dat"] {
                ctx.run.add_output(&format!("run-{i}/{f}"))?;
            }
            found = true;
        }
        if !found {
            return Err(CliError::Usage(format!(
                "{}: no report.json, dev_report.json, history.json or seed_summary.json",
                dir.display()
            )));
        }
    }
    ctx.run.write("report.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn sweep_cmd(
    ctx: &mut Ctx,
    data: &DataArgs,
    runs: Option<usize>,
    parallelism: Option<usize>,
    contrastive: bool,
) -> Result<()> {
    let (train, dev) = train_dev(ctx, data)?;
    let n = runs.unwrap_or(ctx.cfg.seeds);
    if n == 0 {
        return Err(CliError::Usage("--runs must be >= 1".into()));
    }
    let tcfg = ctx.cfg.train_config()?;
    let ccfg = ctx.cfg.contrastive_config()?;
    let spec = SweepSpec {
        descriptor: &ctx.cfg.encoder,
        train: &tcfg,
        contrastive: contrastive.then_some(&ccfg),
        first_seed: ctx.cfg.seed,
        runs: n,
        parallelism: parallelism.unwrap_or(ctx.cfg.sweep_parallelism),
    };
    let results = seed_sweep(&spec, &train, &dev)?;
    let descriptor = ctx.cfg.encoder.clone();
    let mut trained = Vec::with_capacity(results.len());
    for (model, run) in &results {
        let mut base = Checkpoint::from_model(model, &descriptor);
        if contrastive {
            base.contrastive_config = Some(argqual_core::contrastive::ContrastiveConfig {
                seed: run.seed,
                ..ccfg.clone()
            });
        }
        write_trained(ctx, &format!("seed-{}/", run.seed), model, run, base)?;
        trained.push(run.clone());
    }
    let summary = summarize(&trained)?;
    ctx.run.write_json("seed_summary.json", &summary)?;
    let mut text = String::new();
    for r in &trained {
        text.push_str(&format!(
            "seed {}: best epoch {}, dev combined {:.4}\n",
            r.seed,
            r.outcome.best_epoch,
            r.dev_report.combined.unwrap_or(f64::NAN)
        ));
    }
    match &summary {
        Some(s) => {
            text.push_str(&render_summary(s));
            write_envelope_plots(ctx.run.root(), s)?;
            for f in ["loss_min.dat", "loss_mean.dat", "loss_max.dat"] {
                ctx.run.add_output(f)?;
            }
        }
        None => text.push_str("single run: no spread to summarize\n"),
    }
    ctx.run.write("summary.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}
