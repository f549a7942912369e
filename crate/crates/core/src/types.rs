//! Domain types shared by every stage of the pipeline.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The two binary prediction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Validity,
    Novelty,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Validity, Task::Novelty];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Validity => "validity",
            Task::Novelty => "novelty",
        }
    }

    /// Position of the task in `[validity, novelty]` arrays.
    pub fn index(self) -> usize {
        match self {
            Task::Validity => 0,
            Task::Novelty => 1,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "validity" => Ok(Task::Validity),
            "novelty" => Ok(Task::Novelty),
            other => Err(Error::Value(alloc::format!("unknown task {other:?}"))),
        }
    }
}

/// A mapped binary label. `Negative` sorts first, matching the row and
/// column order of confusion matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negative => "negative",
            Label::Positive => "positive",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// `+1` / `-1` encoding, as used by the SVM and by raw label columns.
    pub fn signed(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(Error::Value(alloc::format!("unknown label value {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskLabel {
    pub task: Task,
    pub value: Label,
}

/// Annotator agreement tag attached to each raw label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    VeryConfident,
    Confident,
    Majority,
    Defeasible,
    Unknown,
}

impl Confidence {
    pub const ALL: [Confidence; 5] = [
        Confidence::VeryConfident,
        Confidence::Confident,
        Confidence::Majority,
        Confidence::Defeasible,
        Confidence::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::VeryConfident => "very-confident",
            Confidence::Confident => "confident",
            Confidence::Majority => "majority",
            Confidence::Defeasible => "defeasible",
            Confidence::Unknown => "unknown",
        }
    }

    /// Lenient parse: case-insensitive, spaces and underscores read as `-`.
    /// An empty cell is `Unknown`.
    pub fn parse(raw: &str) -> Option<Self> {
        let mut norm = String::with_capacity(raw.len());
        for c in raw.trim().chars() {
            match c {
                ' ' | '_' => norm.push('-'),
                c => norm.extend(c.to_lowercase()),
            }
        }
        match norm.as_str() {
            "" | "unknown" => Some(Confidence::Unknown),
            "very-confident" => Some(Confidence::VeryConfident),
            "confident" => Some(Confidence::Confident),
            "majority" => Some(Confidence::Majority),
            "defeasible" => Some(Confidence::Defeasible),
            _ => None,
        }
    }

    /// Agreement rank used when picking hard few-shot examples; lower means
    /// less annotator agreement. `Defeasible` ranks with `Majority`,
    /// `Unknown` carries no agreement signal and ranks last.
    pub fn agreement_rank(self) -> u8 {
        match self {
            Confidence::Majority | Confidence::Defeasible => 0,
            Confidence::Confident => 1,
            Confidence::VeryConfident => 2,
            Confidence::Unknown => 3,
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Value(alloc::format!("unknown split {other:?}"))),
        }
    }
}

/// One labeled (topic, premise, conclusion) row.
///
/// Raw labels keep the file's tri-valued encoding: `1` positive, `-1`
/// negative, `0` the defeasibly-valid / somewhat-novel middle class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentInstance {
    pub id: String,
    pub topic: String,
    pub premise: String,
    pub conclusion: String,
    pub validity_raw: i8,
    pub novelty_raw: i8,
    pub validity_confidence: Confidence,
    pub novelty_confidence: Confidence,
    pub split: Split,
}

impl ArgumentInstance {
    pub fn raw(&self, task: Task) -> i8 {
        match task {
            Task::Validity => self.validity_raw,
            Task::Novelty => self.novelty_raw,
        }
    }

    pub fn confidence(&self, task: Task) -> Confidence {
        match task {
            Task::Validity => self.validity_confidence,
            Task::Novelty => self.novelty_confidence,
        }
    }

    /// Mapped binary label for `task`.
    pub fn label(&self, task: Task) -> Result<Label, Error> {
        crate::corpus::map_label(self.raw(task), task).map(|l| l.value)
    }

    /// Checks the row-level invariants: non-empty texts and raw labels in
    /// `{-1, 0, 1}`.
    pub fn validate(&self) -> Result<(), Error> {
        if self.premise.trim().is_empty() {
            return Err(Error::Value(alloc::format!("instance {}: empty premise", self.id)));
        }
        if self.conclusion.trim().is_empty() {
            return Err(Error::Value(alloc::format!("instance {}: empty conclusion", self.id)));
        }
        for task in Task::ALL {
            crate::corpus::map_label(self.raw(task), task)?;
        }
        Ok(())
    }
}
