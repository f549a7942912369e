//! Human-readable tables and plot-data files.

use std::fmt::Write as _;
use std::path::Path;

use argqual_core::eval::{EvalReport, SeedSummary, TaskReport};
use argqual_core::mtl::EpochRecord;

use crate::error::Result;
use crate::fsutil::{atomic_write, write_json};

fn task_section(out: &mut String, t: &TaskReport) {
    let _ = writeln!(out, "{:<10}{:<10}{:>10}{:>10}{:>10}{:>9}", "task", "label", "precision", "recall", "f1", "support");
    for (name, s) in ["negative", "positive"].iter().zip(&t.labels) {
        let _ = writeln!(
            out,
            "{:<10}{:<10}{:>10.4}{:>10.4}{:>10.4}{:>9}",
            t.task.as_str(),
            name,
            s.precision,
            s.recall,
            s.f1,
            s.support
        );
    }
    let _ = writeln!(out, "{:<10}{:<10}{:>30.4}", t.task.as_str(), "macro", t.macro_f1);
    let _ = writeln!(out, "sources: {}   flagged: {}", t.sources.join(", "), t.flagged);
    let c = &t.confusion.counts;
    let _ = writeln!(out, "confusion (rows true, columns predicted)");
    let _ = writeln!(out, "{:<12}{:>10}{:>10}", "", "negative", "positive");
    let _ = writeln!(out, "{:<12}{:>10}{:>10}", "negative", c[0][0], c[0][1]);
    let _ = writeln!(out, "{:<12}{:>10}{:>10}", "positive", c[1][0], c[1][1]);
    let _ = writeln!(out, "{:<16}{:>10}{:>10}{:>8}", "confidence", "correct", "error", "count");
    for b in t.confidence.buckets.iter().chain(&t.confidence.unknown) {
        let _ = writeln!(
            out,
            "{:<16}{:>10.4}{:>10.4}{:>8}",
            b.confidence.as_str(),
            b.correct_fraction,
            b.error_fraction,
            b.count
        );
    }
    let _ = writeln!(out, "{:<40}{:>8}{:>8}", "topic (worst 5)", "error", "count");
    for topic in t.topics.iter().take(5) {
        let name: String = topic.topic.chars().take(38).collect();
        let _ = writeln!(out, "{:<40}{:>8.4}{:>8}", name, topic.error_rate, topic.count);
    }
}

pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "metric: {}   instances: {}", report.metric, report.instances);
    match report.combined {
        Some(c) => {
            let _ = writeln!(out, "combined: {c:.4}");
        }
        None => {
            let _ = writeln!(out, "combined: n/a (single task)");
        }
    }
    for t in &report.tasks {
        out.push('\n');
        task_section(&mut out, t);
    }
    out
}

/// `report.json` and `report.txt` in `dir`.
pub fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    atomic_write(&dir.join("report.txt"), render_text(report).as_bytes())
}

/// Two whitespace-separated columns, one point per line.
pub fn plot_data(points: &[(f64, f64)]) -> String {
    points.iter().map(|(x, y)| format!("{x} {y}\n")).collect()
}

pub fn write_plot(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    atomic_write(path, plot_data(points).as_bytes())
}

/// `loss.dat` and `dev_f1.dat` from a training history.
pub fn write_history_plots(dir: &Path, history: &[EpochRecord]) -> Result<()> {
    let loss: Vec<(f64, f64)> = history.iter().map(|r| (r.epoch as f64, r.train_loss)).collect();
    let f1: Vec<(f64, f64)> = history.iter().map(|r| (r.epoch as f64, r.dev_combined_f1)).collect();
    write_plot(&dir.join("loss.dat"), &loss)?;
    write_plot(&dir.join("dev_f1.dat"), &f1)
}

/// `loss_min.dat`, `loss_mean.dat` and `loss_max.dat`.
pub fn write_envelope_plots(dir: &Path, summary: &SeedSummary) -> Result<()> {
    let series = |f: fn(&argqual_core::eval::LossBand) -> f64| -> Vec<(f64, f64)> {
        summary.loss_envelope.iter().map(|b| (b.epoch as f64, f(b))).collect()
    };
    write_plot(&dir.join("loss_min.dat"), &series(|b| b.min))?;
    write_plot(&dir.join("loss_mean.dat"), &series(|b| b.mean))?;
    write_plot(&dir.join("loss_max.dat"), &series(|b| b.max))
}

pub fn render_summary(summary: &SeedSummary) -> String {
    let mut out = format!(
        "runs: {}   combined f1: {:.4} ± {:.4}\n{:<8}{:>10}{:>10}{:>10}\n",
        summary.runs, summary.mean_combined_f1, summary.std_combined_f1, "epoch", "min", "mean", "max"
    );
    for b in &summary.loss_envelope {
        let _ = writeln!(out, "{:<8}{:>10.4}{:>10.4}{:>10.4}", b.epoch, b.min, b.mean, b.max);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_lines() {
        assert_eq!(plot_data(&[(0.0, 1.5), (1.0, 0.25)]), "0 1.5\n1 0.25\n");
    }
}
