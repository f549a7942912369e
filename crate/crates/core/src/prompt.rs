//! Few-shot prompt construction and completion parsing.
//!
//! A prompt is four answered example blocks followed by the unanswered
//! target block:
//!
//! ```text
//! topic: {topic}
//! premise: {premise}
//! conclusion: {conclusion}
//! valid: yes
//!
//! ...
//! topic: {topic}
//! premise: {premise}
//! conclusion: {conclusion}
//! valid:
//! ```
//!
//! The task word is `valid` or `novel`; answers are `yes` / `no`. Any change
//! to this layout must bump [`TEMPLATE_VERSION`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{ArgumentInstance, Label, Task};

pub const TEMPLATE_VERSION: u32 = 1;
pub const FEW_SHOT_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptRequest {
    pub model_id: String,
    pub prompt: String,
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl Default for PromptRequest {
    fn default() -> Self {
        PromptRequest {
            model_id: "text-davinci-002".into(),
            prompt: String::new(),
            temperature: 0.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            max_tokens: 4,
        }
    }
}

impl PromptRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        PromptRequest {
            prompt: prompt.into(),
            ..PromptRequest::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt.is_empty() {
            return Err(Error::Value("prompt must be non-empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::Value("max_tokens must be >= 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 over a length-prefixed encoding of every field that
    /// influences the completion.
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        for field in [self.model_id.as_bytes(), self.prompt.as_bytes()] {
            h.update((field.len() as u64).to_le_bytes());
            h.update(field);
        }
        for x in [self.temperature, self.frequency_penalty, self.presence_penalty] {
            h.update(x.to_bits().to_le_bytes());
        }
        h.update(self.max_tokens.to_le_bytes());
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptResponse {
    pub raw_text: String,
    pub provider: String,
    pub cached: bool,
}

/// Four static demonstration examples for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotSet {
    pub task: Task,
    pub examples: Vec<ArgumentInstance>,
}

impl FewShotSet {
    pub fn ids(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.examples.len() != FEW_SHOT_SIZE {
            return Err(Error::Data(alloc::format!(
                "few-shot set must hold {FEW_SHOT_SIZE} examples, got {}",
                self.examples.len()
            )));
        }
        for want in [Label::Positive, Label::Negative] {
            let mut found = false;
            for e in &self.examples {
                if e.label(self.task)? == want {
                    found = true;
                }
            }
            if !found {
                return Err(Error::Data(alloc::format!(
                    "few-shot set for {} has no {want} example",
                    self.task
                )));
            }
        }
        Ok(())
    }
}

fn rank_key(inst: &ArgumentInstance, task: Task) -> (u8, usize, &str) {
    (
        inst.confidence(task).agreement_rank(),
        inst.premise.chars().count() + inst.conclusion.chars().count(),
        inst.id.as_str(),
    )
}

/// Picks the four lowest-agreement, shortest training examples, forcing at
/// least one of each label into the set.
pub fn select_few_shot(train: &[ArgumentInstance], task: Task) -> Result<FewShotSet> {
    let mut labeled = Vec::with_capacity(train.len());
    for inst in train {
        labeled.push((inst, inst.label(task)?));
    }
    for want in [Label::Positive, Label::Negative] {
        let count = labeled.iter().filter(|(_, l)| *l == want).count();
        if count < 2 {
            return Err(Error::Data(alloc::format!(
                "need at least 2 {want} {task} examples for few-shot selection, found {count}"
            )));
        }
    }
    labeled.sort_by(|a, b| rank_key(a.0, task).cmp(&rank_key(b.0, task)));

    let mut chosen: Vec<(&ArgumentInstance, Label)> = labeled[..FEW_SHOT_SIZE].to_vec();
    let first = chosen[0].1;
    if chosen.iter().all(|(_, l)| *l == first) {
        let missing = first.flip();
        let replacement = labeled
            .iter()
            .find(|(_, l)| *l == missing)
            .copied()
            .ok_or_else(|| Error::Data(alloc::format!("no {missing} {task} example available")))?;
        chosen[FEW_SHOT_SIZE - 1] = replacement;
    }
    Ok(FewShotSet {
        task,
        examples: chosen.into_iter().map(|(i, _)| i.clone()).collect(),
    })
}

pub fn task_word(task: Task) -> &'static str {
    match task {
        Task::Validity => "valid",
        Task::Novelty => "novel",
    }
}

fn push_block(out: &mut String, inst: &ArgumentInstance, task: Task, answer: Option<Label>) {
    let _ = write!(
        out,
        "topic: {}\npremise: {}\nconclusion: {}\n{}:",
        inst.topic,
        inst.premise,
        inst.conclusion,
        task_word(task)
    );
    if let Some(label) = answer {
        out.push_str(if label.is_positive() { " yes" } else { " no" });
        out.push_str("\n\n");
    }
}

pub fn build_prompt(few_shot: &FewShotSet, target: &ArgumentInstance, task: Task) -> Result<String> {
    if few_shot.task != task {
        return Err(Error::Config(alloc::format!(
            "few-shot set is for {}, prompt requested for {task}",
            few_shot.task
        )));
    }
    let mut out = String::new();
    for ex in &few_shot.examples {
        push_block(&mut out, ex, task, Some(ex.label(task)?));
    }
    push_block(&mut out, target, task, None);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsedLabel {
    Label(Label),
    Unparseable,
}

impl ParsedLabel {
    /// Label plus the audit flag; unparseable completions fall back to
    /// negative and are flagged.
    pub fn or_fallback(self) -> (Label, bool) {
        match self {
            ParsedLabel::Label(l) => (l, false),
            ParsedLabel::Unparseable => (Label::Negative, true),
        }
    }
}

pub fn parse_response(raw_text: &str, task: Task) -> ParsedLabel {
    let edge = |c: char| !c.is_alphanumeric();
    let mut lowered = String::with_capacity(raw_text.len());
    for c in raw_text.chars() {
        lowered.extend(c.to_lowercase());
    }
    let trimmed = lowered.trim_matches(edge);
    let Some(first) = trimmed.split_whitespace().next() else {
        return ParsedLabel::Unparseable;
    };
    let word = first.trim_matches(edge);
    let label = match (word, task) {
        ("yes" | "true", _) => Label::Positive,
        ("no" | "false" | "not", _) => Label::Negative,
        ("valid", Task::Validity) | ("novel", Task::Novelty) => Label::Positive,
        ("invalid" | "non-valid" | "nonvalid", Task::Validity) => Label::Negative,
        ("non-novel" | "nonnovel", Task::Novelty) => Label::Negative,
        _ => return ParsedLabel::Unparseable,
    };
    ParsedLabel::Label(label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Confidence, Split};

    #[test]
    fn parse_rules() {
        assert_eq!(parse_response(" Yes.", Task::Validity), ParsedLabel::Label(Label::Positive));
        assert_eq!(parse_response("no", Task::Novelty), ParsedLabel::Label(Label::Negative));
        assert_eq!(parse_response("perhaps", Task::Novelty), ParsedLabel::Unparseable);
        assert_eq!(ParsedLabel::Unparseable.or_fallback(), (Label::Negative, true));
        assert_eq!(parse_response("\nNovel", Task::Novelty), ParsedLabel::Label(Label::Positive));
        assert_eq!(parse_response("not novel", Task::Novelty), ParsedLabel::Label(Label::Negative));
        assert_eq!(parse_response("Invalid!", Task::Validity), ParsedLabel::Label(Label::Negative));
        assert_eq!(parse_response("valid", Task::Novelty), ParsedLabel::Unparseable);
        assert_eq!(parse_response("   ", Task::Validity), ParsedLabel::Unparseable);
        assert_eq!(parse_response("yesterday", Task::Validity), ParsedLabel::Unparseable);
    }

    #[test]
    fn request_defaults() {
        let r = PromptRequest::default();
        assert_eq!(r.model_id, "text-davinci-002");
        assert_eq!(
            (r.temperature, r.frequency_penalty, r.presence_penalty, r.max_tokens),
            (0.0, 0.0, 0.0, 4)
        );
        assert!(r.validate().is_err());
        assert!(PromptRequest::new("x").validate().is_ok());
    }

    #[test]
    fn cache_key_depends_on_every_field() {
        let base = PromptRequest::new("abc");
        let k = base.cache_key();
        assert_eq!(k.len(), 64);
        assert_eq!(k, base.clone().cache_key());
        let variants = [
            PromptRequest { model_id: "other".into(), ..base.clone() },
            PromptRequest { prompt: "abd".into(), ..base.clone() },
            PromptRequest { temperature: 0.5, ..base.clone() },
            PromptRequest { frequency_penalty: 0.1, ..base.clone() },
            PromptRequest { presence_penalty: 0.1, ..base.clone() },
            PromptRequest { max_tokens: 5, ..base.clone() },
        ];
        for v in variants {
            assert_ne!(v.cache_key(), k);
        }
        // Field boundaries are unambiguous.
        let a = PromptRequest { model_id: "ab".into(), prompt: "c".into(), ..base.clone() };
        let b = PromptRequest { model_id: "a".into(), prompt: "bc".into(), ..base };
        assert_ne!(a.cache_key(), b.cache_key());
    }

    fn inst(id: &str, v: i8, conf: Confidence, premise: &str) -> ArgumentInstance {
        ArgumentInstance {
            id: id.into(),
            topic: "Veal".into(),
            premise: premise.into(),
            conclusion: "c".into(),
            validity_raw: v,
            novelty_raw: v,
            validity_confidence: conf,
            novelty_confidence: conf,
            split: Split::Train,
        }
    }

    #[test]
    fn block_count_and_suffix() {
        let train = [
            inst("a", 1, Confidence::Majority, "p1"),
            inst("b", -1, Confidence::Majority, "p2"),
            inst("c", 1, Confidence::Confident, "p3"),
            inst("d", -1, Confidence::Confident, "p4"),
        ];
        let fs = select_few_shot(&train, Task::Validity).unwrap();
        let p = build_prompt(&fs, &train[0], Task::Validity).unwrap();
        assert!(p.ends_with("\nvalid:"));
        assert_eq!(p.matches("topic: ").count(), 5);
        assert_eq!(p.matches("\nvalid: yes\n\n").count() + p.matches("\nvalid: no\n\n").count(), 4);
        assert!(build_prompt(&fs, &train[0], Task::Novelty).is_err());
    }

    #[test]
    fn missing_label_is_a_data_error() {
        let train = [
            inst("a", 1, Confidence::Majority, "p"),
            inst("b", 1, Confidence::Majority, "p"),
            inst("c", 1, Confidence::Majority, "p"),
            inst("d", 1, Confidence::Majority, "p"),
            inst("e", -1, Confidence::Majority, "p"),
        ];
        match select_few_shot(&train, Task::Novelty).unwrap_err() {
            Error::Data(msg) => assert!(msg.contains("negative"), "{msg}"),
            e => panic!("{e:?}"),
        }
    }
}
