//! Per-instance predictions and the per-task mixing operator.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Label, Task};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub task: Task,
    pub value: Label,
    /// System that produced the label, e.g. `gpt3`, `mtl`, `svm`.
    pub source: String,
    /// Set when the label is a fallback for an unparseable completion.
    pub flagged: bool,
}

impl Prediction {
    pub fn new(instance_id: impl Into<String>, task: Task, value: Label, source: impl Into<String>) -> Self {
        Prediction {
            instance_id: instance_id.into(),
            task,
            value,
            source: source.into(),
            flagged: false,
        }
    }

    fn key(&self) -> (&str, Task, &str) {
        (&self.instance_id, self.task, &self.source)
    }
}

/// A set of predictions, unique on `(instance_id, task, source)` and kept
/// sorted by that key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    rows: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(mut rows: Vec<Prediction>) -> Result<Self> {
        rows.sort_by(|a, b| a.key().cmp(&b.key()));
        for w in rows.windows(2) {
            if w[0].key() == w[1].key() {
                return Err(Error::Data(alloc::format!(
                    "duplicate prediction for ({}, {}, {})",
                    w[0].instance_id,
                    w[0].task,
                    w[0].source
                )));
            }
        }
        Ok(PredictionSet { rows })
    }

    pub fn rows(&self) -> &[Prediction] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn into_rows(self) -> Vec<Prediction> {
        self.rows
    }

    pub fn for_task(&self, task: Task) -> impl Iterator<Item = &Prediction> {
        self.rows.iter().filter(move |p| p.task == task)
    }

    pub fn has_task(&self, task: Task) -> bool {
        self.for_task(task).next().is_some()
    }

    /// The subset of rows for one task.
    pub fn restrict(&self, task: Task) -> PredictionSet {
        PredictionSet {
            rows: self.for_task(task).cloned().collect(),
        }
    }

    /// Distinct sources contributing to one task.
    pub fn sources(&self, task: Task) -> BTreeSet<&str> {
        self.for_task(task).map(|p| p.source.as_str()).collect()
    }

    /// Id → prediction for one task. Fails if an id has predictions from
    /// more than one source, since the label would be ambiguous.
    pub fn by_id(&self, task: Task) -> Result<BTreeMap<&str, &Prediction>> {
        let mut map = BTreeMap::new();
        for p in self.for_task(task) {
            if map.insert(p.instance_id.as_str(), p).is_some() {
                return Err(Error::Data(alloc::format!(
                    "instance {} has more than one {} prediction",
                    p.instance_id,
                    task
                )));
            }
        }
        Ok(map)
    }

    /// Union of two sets; fails on a shared `(instance_id, task, source)`.
    pub fn merge(self, other: PredictionSet) -> Result<PredictionSet> {
        let mut rows = self.rows;
        rows.extend(other.rows);
        PredictionSet::new(rows)
    }
}

/// Output of [`mix`]: the merged rows plus a set-level tag naming both
/// inputs. Rows keep their original sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedPredictions {
    pub tag: String,
    pub set: PredictionSet,
}

fn source_tag(sources: BTreeSet<&str>) -> String {
    let parts: Vec<&str> = sources.into_iter().collect();
    parts.join("+")
}

/// Takes validity labels from `validity_set` and novelty labels from
/// `novelty_set`. Both must cover the same instance ids.
pub fn mix(validity_set: &PredictionSet, novelty_set: &PredictionSet) -> Result<MixedPredictions> {
    let validity = validity_set.by_id(Task::Validity)?;
    let novelty = novelty_set.by_id(Task::Novelty)?;

    let missing_validity: Vec<String> = novelty
        .keys()
        .filter(|id| !validity.contains_key(*id))
        .map(|id| id.to_string())
        .collect();
    if !missing_validity.is_empty() {
        return Err(Error::Coverage {
            task: Task::Validity,
            missing: missing_validity,
        });
    }
    let missing_novelty: Vec<String> = validity
        .keys()
        .filter(|id| !novelty.contains_key(*id))
        .map(|id| id.to_string())
        .collect();
    if !missing_novelty.is_empty() {
        return Err(Error::Coverage {
            task: Task::Novelty,
            missing: missing_novelty,
        });
    }

    let tag = alloc::format!(
        "mix({},{})",
        source_tag(validity_set.sources(Task::Validity)),
        source_tag(novelty_set.sources(Task::Novelty))
    );
    let rows = validity.values().chain(novelty.values()).map(|p| (*p).clone()).collect();
    Ok(MixedPredictions {
        tag,
        set: PredictionSet::new(rows)?,
    })
}
