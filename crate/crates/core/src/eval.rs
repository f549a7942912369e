//! Scoring and error analysis.
//!
//! Confusion matrices are oriented with rows = true label and columns =
//! predicted label, negative class first. Precision, recall and F1 use the
//! zero-division-is-zero convention. Macro averages run over the classes
//! that occur in either the gold labels or the predictions, so a perfect
//! prediction always scores 1.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{joint_class, map_label};
use crate::error::{Error, Result};
use crate::math;
use crate::predictions::{Prediction, PredictionSet};
use crate::types::{ArgumentInstance, Confidence, Label, Task};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[true][predicted]`, negative first.
    pub counts: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[usize; 2]; 2]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    fn rows(&self) -> Vec<Vec<usize>> {
        self.counts.iter().map(|r| r.to_vec()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold instances of the class (row sum).
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class statistics of a square confusion matrix.
pub fn class_stats(counts: &[Vec<usize>]) -> Vec<ClassStats> {
    let k = counts.len();
    (0..k)
        .map(|c| {
            let tp = counts[c][c];
            let row: usize = counts[c].iter().sum();
            let col: usize = counts.iter().map(|r| r[c]).sum();
            let precision = ratio(tp, col);
            let recall = ratio(tp, row);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassStats {
                precision,
                recall,
                f1,
                support: row,
            }
        })
        .collect()
}

/// Unweighted mean F1 over classes that appear as a gold or predicted label.
pub fn macro_f1_of(counts: &[Vec<usize>]) -> f64 {
    let stats = class_stats(counts);
    let mut sum = 0.0;
    let mut present = 0usize;
    for (c, s) in stats.iter().enumerate() {
        let col: usize = counts.iter().map(|r| r[c]).sum();
        if s.support + col > 0 {
            sum += s.f1;
            present += 1;
        }
    }
    if present == 0 {
        0.0
    } else {
        sum / present as f64
    }
}

/// Per-class (negative, positive) precision, recall, F1 and support.
pub fn prf(matrix: &ConfusionMatrix) -> [ClassStats; 2] {
    let s = class_stats(&matrix.rows());
    [s[0], s[1]]
}

pub fn macro_f1(matrix: &ConfusionMatrix) -> f64 {
    macro_f1_of(&matrix.rows())
}

fn gold_pairs<'a>(
    predictions: &'a PredictionSet,
    golds: &'a [ArgumentInstance],
    task: Task,
) -> Result<Vec<(&'a ArgumentInstance, &'a Prediction)>> {
    let by_id = predictions.by_id(task)?;
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(golds.len());
    for g in golds {
        match by_id.get(g.id.as_str()) {
            Some(p) => out.push((g, *p)),
            None => missing.push(g.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Coverage { task, missing });
    }
    Ok(out)
}

fn gold_label(g: &ArgumentInstance, task: Task) -> Result<Label> {
    map_label(g.raw(task), task).map(|l| l.value)
}

pub fn confusion(predictions: &PredictionSet, golds: &[ArgumentInstance], task: Task) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold_pairs(predictions, golds, task)? {
        m.record(gold_label(g, task)?, p.value);
    }
    Ok(m)
}

/// How the two tasks are folded into one score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CombinedMetric {
    /// Macro F1 over the four joint (validity × novelty) classes.
    #[default]
    #[serde(rename = "joint-macro-f1")]
    JointMacroF1,
    /// Mean of the two per-task macro F1 scores.
    #[serde(rename = "mean-task-macro-f1")]
    MeanTaskMacroF1,
}

impl CombinedMetric {
    pub fn key(self) -> &'static str {
        match self {
            CombinedMetric::JointMacroF1 => "joint-macro-f1",
            CombinedMetric::MeanTaskMacroF1 => "mean-task-macro-f1",
        }
    }
}

impl fmt::Display for CombinedMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for CombinedMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint-macro-f1" => Ok(CombinedMetric::JointMacroF1),
            "mean-task-macro-f1" => Ok(CombinedMetric::MeanTaskMacroF1),
            other => Err(Error::Config(alloc::format!("unknown combined metric {other:?}"))),
        }
    }
}

/// 4×4 confusion over joint classes in class-distribution order.
pub fn joint_confusion(predictions: &PredictionSet, golds: &[ArgumentInstance]) -> Result<Vec<Vec<usize>>> {
    let validity = gold_pairs(predictions, golds, Task::Validity)?;
    let novelty = gold_pairs(predictions, golds, Task::Novelty)?;
    let mut counts = vec![vec![0usize; 4]; 4];
    for ((g, pv), (_, pn)) in validity.iter().zip(&novelty) {
        let truth = joint_class(gold_label(g, Task::Validity)?, gold_label(g, Task::Novelty)?);
        let pred = joint_class(pv.value, pn.value);
        counts[truth][pred] += 1;
    }
    Ok(counts)
}

pub fn combined_score(predictions: &PredictionSet, golds: &[ArgumentInstance], metric: CombinedMetric) -> Result<f64> {
    match metric {
        CombinedMetric::JointMacroF1 => Ok(macro_f1_of(&joint_confusion(predictions, golds)?)),
        CombinedMetric::MeanTaskMacroF1 => {
            let v = macro_f1(&confusion(predictions, golds, Task::Validity)?);
            let n = macro_f1(&confusion(predictions, golds, Task::Novelty)?);
            Ok((v + n) / 2.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStat {
    pub confidence: Confidence,
    pub correct_fraction: f64,
    pub error_fraction: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBuckets {
    /// Tagged buckets in the order very-confident, majority, confident,
    /// defeasible; empty buckets are omitted.
    pub buckets: Vec<BucketStat>,
    /// Instances without a confidence tag.
    pub unknown: Option<BucketStat>,
}

pub fn confidence_buckets(predictions: &PredictionSet, golds: &[ArgumentInstance], task: Task) -> Result<ConfidenceBuckets> {
    const ORDER: [Confidence; 5] = [
        Confidence::VeryConfident,
        Confidence::Majority,
        Confidence::Confident,
        Confidence::Defeasible,
        Confidence::Unknown,
    ];
    let mut tally = [(0usize, 0usize); 5];
    for (g, p) in gold_pairs(predictions, golds, task)? {
        let slot = ORDER.iter().position(|c| *c == g.confidence(task)).unwrap_or(4);
        tally[slot].1 += 1;
        if gold_label(g, task)? == p.value {
            tally[slot].0 += 1;
        }
    }
    let stat = |i: usize| {
        let (correct, count) = tally[i];
        (count > 0).then(|| BucketStat {
            confidence: ORDER[i],
            correct_fraction: ratio(correct, count),
            error_fraction: ratio(count - correct, count),
            count,
        })
    };
    Ok(ConfidenceBuckets {
        buckets: (0..4).filter_map(stat).collect(),
        unknown: stat(4),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicError {
    pub topic: String,
    pub error_rate: f64,
    pub count: usize,
}

/// Per-topic error rates, highest first, ties broken by topic name.
pub fn topic_error_rates(
    predictions: &PredictionSet,
    golds: &[ArgumentInstance],
    task: Task,
    top_k: Option<usize>,
) -> Result<Vec<TopicError>> {
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (g, p) in gold_pairs(predictions, golds, task)? {
        let entry = tally.entry(g.topic.trim()).or_default();
        entry.1 += 1;
        if gold_label(g, task)? != p.value {
            entry.0 += 1;
        }
    }
    let mut out: Vec<TopicError> = tally
        .into_iter()
        .map(|(topic, (wrong, count))| TopicError {
            topic: topic.to_string(),
            error_rate: ratio(wrong, count),
            count,
        })
        .collect();
    out.sort_by(|a, b| {
        b.error_rate
            .partial_cmp(&a.error_rate)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.topic.cmp(&b.topic))
    });
    if let Some(k) = top_k {
        out.truncate(k);
    }
    Ok(out)
}

/// One training run of a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub combined_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBand {
    pub epoch: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub runs: usize,
    pub mean_combined_f1: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_combined_f1: f64,
    pub loss_envelope: Vec<LossBand>,
}

pub fn seed_summary(runs: &[SeedRun]) -> Result<SeedSummary> {
    if runs.len() < 2 {
        return Err(Error::Config(alloc::format!(
            "seed summary needs at least 2 runs, got {}",
            runs.len()
        )));
    }
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.combined_f1).sum::<f64>() / n;
    let var = runs.iter().map(|r| (r.combined_f1 - mean) * (r.combined_f1 - mean)).sum::<f64>() / (n - 1.0);

    let epochs = runs.iter().map(|r| r.epoch_losses.len()).max().unwrap_or(0);
    let loss_envelope = (0..epochs)
        .filter_map(|e| {
            let vals: Vec<f64> = runs.iter().filter_map(|r| r.epoch_losses.get(e).copied()).collect();
            if vals.is_empty() {
                return None;
            }
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            Some(LossBand { epoch: e, min, mean, max })
        })
        .collect();

    Ok(SeedSummary {
        runs: runs.len(),
        mean_combined_f1: mean,
        std_combined_f1: math::sqrt(var),
        loss_envelope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: Task,
    /// Sources that produced this task's labels.
    pub sources: Vec<String>,
    /// `[negative, positive]`.
    pub labels: [ClassStats; 2],
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
    pub confidence: ConfidenceBuckets,
    /// All topics, highest error rate first.
    pub topics: Vec<TopicError>,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: CombinedMetric,
    pub instances: usize,
    pub tasks: Vec<TaskReport>,
    /// Present only when both tasks are covered.
    pub combined: Option<f64>,
}

impl EvalReport {
    pub fn task(&self, task: Task) -> Option<&TaskReport> {
        self.tasks.iter().find(|t| t.task == task)
    }
}

pub fn task_report(predictions: &PredictionSet, golds: &[ArgumentInstance], task: Task) -> Result<TaskReport> {
    let confusion = confusion(predictions, golds, task)?;
    let by_id = predictions.by_id(task)?;
    let flagged = golds
        .iter()
        .filter(|g| by_id.get(g.id.as_str()).is_some_and(|p| p.flagged))
        .count();
    Ok(TaskReport {
        task,
        sources: predictions.sources(task).into_iter().map(String::from).collect(),
        labels: prf(&confusion),
        macro_f1: macro_f1(&confusion),
        confusion,
        confidence: confidence_buckets(predictions, golds, task)?,
        topics: topic_error_rates(predictions, golds, task, None)?,
        flagged,
    })
}

/// Full report for every task present in `predictions`.
pub fn evaluate(predictions: &PredictionSet, golds: &[ArgumentInstance], metric: CombinedMetric) -> Result<EvalReport> {
    let mut tasks = Vec::new();
    for task in Task::ALL {
        if predictions.has_task(task) {
            tasks.push(task_report(predictions, golds, task)?);
        }
    }
    if tasks.is_empty() {
        return Err(Error::Data("prediction set is empty".into()));
    }
    let combined = if tasks.len() == 2 {
        Some(combined_score(predictions, golds, metric)?)
    } else {
        None
    };
    Ok(EvalReport {
        metric,
        instances: golds.len(),
        tasks,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Split;

    fn gold(id: &str, topic: &str, v: i8, n: i8, conf: Confidence) -> ArgumentInstance {
        ArgumentInstance {
            id: id.into(),
            topic: topic.into(),
            premise: "p".into(),
            conclusion: "c".into(),
            validity_raw: v,
            novelty_raw: n,
            validity_confidence: conf,
            novelty_confidence: conf,
            split: Split::Test,
        }
    }

    fn preds(task: Task, labels: &[(&str, Label)]) -> PredictionSet {
        PredictionSet::new(labels.iter().map(|(id, l)| Prediction::new(*id, task, *l, "sys")).collect()).unwrap()
    }

    fn five() -> Vec<ArgumentInstance> {
        [(-1, "0"), (-1, "1"), (0, "2"), (1, "3"), (1, "4")]
            .iter()
            .map(|(v, id)| gold(id, "t", *v, *v, Confidence::Unknown))
            .collect()
    }

    #[test]
    fn confusion_all_correct_and_flipped() {
        use Label::*;
        let g = five();
        let right = preds(
            Task::Validity,
            &[("0", Negative), ("1", Negative), ("2", Negative), ("3", Positive), ("4", Positive)],
        );
        assert_eq!(confusion(&right, &g, Task::Validity).unwrap().counts, [[3, 0], [0, 2]]);
        let wrong = preds(
            Task::Validity,
            &[("0", Positive), ("1", Positive), ("2", Positive), ("3", Negative), ("4", Negative)],
        );
        assert_eq!(confusion(&wrong, &g, Task::Validity).unwrap().counts, [[0, 3], [2, 0]]);
    }

    #[test]
    fn confusion_requires_coverage() {
        let g = five();
        let partial = preds(Task::Validity, &[("0", Label::Negative)]);
        match confusion(&partial, &g, Task::Validity).unwrap_err() {
            Error::Coverage { missing, .. } => assert_eq!(missing, ["1", "2", "3", "4"]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn zero_division_is_zero() {
        let m = ConfusionMatrix::from_counts([[5, 0], [3, 0]]);
        let s = prf(&m);
        assert_eq!(s[1].precision, 0.0);
        assert_eq!(s[1].recall, 0.0);
        assert_eq!(s[1].f1, 0.0);
        assert_eq!(s[1].support, 3);
    }

    #[test]
    fn perfect_diagonal_is_one() {
        assert_eq!(macro_f1(&ConfusionMatrix::from_counts([[4, 0], [0, 9]])), 1.0);
        assert_eq!(macro_f1(&ConfusionMatrix::from_counts([[4, 0], [0, 0]])), 1.0);
        assert_eq!(macro_f1(&ConfusionMatrix::default()), 0.0);
    }

    #[test]
    fn mtl_macro_scores() {
        let v = macro_f1(&ConfusionMatrix::from_counts([[75, 131], [18, 296]]));
        let n = macro_f1(&ConfusionMatrix::from_counts([[265, 29], [145, 81]]));
        assert!((v - 0.65).abs() <= 0.005, "{v}");
        assert!((n - 0.62).abs() <= 0.005, "{n}");
    }

    #[test]
    fn buckets_by_confidence() {
        use Label::*;
        let g = vec![
            gold("0", "t", 1, 1, Confidence::VeryConfident),
            gold("1", "t", 1, 1, Confidence::VeryConfident),
            gold("2", "t", -1, 1, Confidence::Majority),
            gold("3", "t", -1, 1, Confidence::Unknown),
        ];
        let p = preds(Task::Validity, &[("0", Positive), ("1", Negative), ("2", Negative), ("3", Positive)]);
        let b = confidence_buckets(&p, &g, Task::Validity).unwrap();
        assert_eq!(b.buckets.len(), 2);
        assert_eq!(
            b.buckets[0],
            BucketStat {
                confidence: Confidence::VeryConfident,
                correct_fraction: 0.5,
                error_fraction: 0.5,
                count: 2
            }
        );
        assert_eq!(b.buckets[1].confidence, Confidence::Majority);
        assert_eq!(b.buckets[1].correct_fraction, 1.0);
        let u = b.unknown.unwrap();
        assert_eq!((u.correct_fraction, u.count), (0.0, 1));
    }

    #[test]
    fn topic_ranking() {
        use Label::*;
        let mut g = Vec::new();
        for i in 0..4 {
            g.push(gold(&alloc::format!("a{i}"), "Alpha", 1, 1, Confidence::Unknown));
            g.push(gold(&alloc::format!("b{i}"), "Beta", 1, 1, Confidence::Unknown));
        }
        let mut rows = Vec::new();
        for i in 0..4 {
            rows.push((alloc::format!("a{i}"), if i == 0 { Negative } else { Positive }));
            rows.push((alloc::format!("b{i}"), if i == 0 { Positive } else { Negative }));
        }
        let p = PredictionSet::new(
            rows.iter()
                .map(|(id, l)| Prediction::new(id.clone(), Task::Novelty, *l, "s"))
                .collect(),
        )
        .unwrap();
        let t = topic_error_rates(&p, &g, Task::Novelty, None).unwrap();
        assert_eq!(t[0].topic, "Beta");
        assert_eq!(t[0].error_rate, 0.75);
        assert_eq!(t[1].error_rate, 0.25);
        assert_eq!(topic_error_rates(&p, &g, Task::Novelty, Some(1)).unwrap().len(), 1);
    }

    #[test]
    fn seed_summary_arithmetic() {
        let run = |seed, f1| SeedRun {
            seed,
            epoch_losses: vec![1.0, 0.5],
            combined_f1: f1,
        };
        let s = seed_summary(&[run(0, 0.4), run(1, 0.6)]).unwrap();
        assert!((s.mean_combined_f1 - 0.5).abs() < 1e-12);
        assert!((s.std_combined_f1 - 0.141_421_356_237_309_5).abs() < 1e-12);
        let same = seed_summary(&[run(0, 0.4), run(0, 0.4)]).unwrap();
        assert_eq!(same.std_combined_f1, 0.0);
        assert!(matches!(seed_summary(&[run(0, 0.4)]), Err(Error::Config(_))));
    }

    #[test]
    fn metric_keys_round_trip() {
        for m in [CombinedMetric::JointMacroF1, CombinedMetric::MeanTaskMacroF1] {
            assert_eq!(m.key().parse::<CombinedMetric>().unwrap(), m);
        }
        assert!("accuracy".parse::<CombinedMetric>().is_err());
    }
}
