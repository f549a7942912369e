//! Label mapping, dataset statistics and contrastive triplet extraction.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ArgumentInstance, Label, Task, TaskLabel};

/// Maps a raw tri-valued label onto the binary task label.
///
/// The middle class (`0`, "defeasibly" valid / "somewhat" novel) only
/// occurs in training data and is folded into the negative class.
pub fn map_label(raw: i8, task: Task) -> Result<TaskLabel> {
    let value = match raw {
        1 => Label::Positive,
        0 | -1 => Label::Negative,
        other => {
            return Err(Error::Value(alloc::format!(
                "raw {task} label {other} outside {{-1, 0, 1}}"
            )))
        }
    };
    Ok(TaskLabel { task, value })
}

/// Joint class counts in the order
/// (non-valid & non-novel, non-valid & novel, valid & non-novel, valid & novel).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; 4],
}

impl ClassDistribution {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Index of the joint (validity, novelty) class in [`ClassDistribution`] order.
pub fn joint_class(validity: Label, novelty: Label) -> usize {
    2 * validity.index() + novelty.index()
}

fn mapped(raw: i8) -> Label {
    Label::from_bool(raw == 1)
}

pub fn class_distribution(instances: &[ArgumentInstance]) -> ClassDistribution {
    let mut counts = [0usize; 4];
    for inst in instances {
        counts[joint_class(mapped(inst.validity_raw), mapped(inst.novelty_raw))] += 1;
    }
    ClassDistribution { counts }
}

/// Unique topics after whitespace trimming.
pub fn topics(instances: &[ArgumentInstance]) -> BTreeSet<&str> {
    instances.iter().map(|i| i.topic.trim()).collect()
}

/// Number of topics shared by `a` and `b`.
pub fn topic_overlap(a: &[ArgumentInstance], b: &[ArgumentInstance]) -> usize {
    let ta = topics(a);
    topics(b).iter().filter(|t| ta.contains(*t)).count()
}

/// An (anchor premise, novel conclusion, non-novel conclusion) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletExample {
    pub anchor: String,
    pub positive: String,
    pub negative: String,
    pub topic: String,
}

/// Groups instances by `(topic, premise)` and emits every
/// (novel, non-novel) conclusion pair within each group.
///
/// Groups appear in order of first occurrence; within a group, pairs follow
/// the encounter order of the positive, then the negative conclusion.
pub fn extract_triplets(instances: &[ArgumentInstance]) -> Vec<TripletExample> {
    struct Group<'a> {
        topic: &'a str,
        premise: &'a str,
        positives: Vec<&'a str>,
        negatives: Vec<&'a str>,
    }

    let mut groups: Vec<Group<'_>> = Vec::new();
    let mut index: alloc::collections::BTreeMap<(&str, &str), usize> = Default::default();
    for inst in instances {
        let key = (inst.topic.as_str(), inst.premise.as_str());
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push(Group {
                topic: key.0,
                premise: key.1,
                positives: Vec::new(),
                negatives: Vec::new(),
            });
            groups.len() - 1
        });
        let group = &mut groups[slot];
        match mapped(inst.novelty_raw) {
            Label::Positive => group.positives.push(&inst.conclusion),
            Label::Negative => group.negatives.push(&inst.conclusion),
        }
    }

    let mut out = Vec::new();
    for g in &groups {
        for pos in &g.positives {
            for neg in &g.negatives {
                // Conflicting annotations of one conclusion cannot form a triplet.
                if pos == neg {
                    continue;
                }
                out.push(TripletExample {
                    anchor: g.premise.into(),
                    positive: (*pos).into(),
                    negative: (*neg).into(),
                    topic: g.topic.into(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Confidence, Split};
    use alloc::string::ToString;

    fn inst(id: &str, topic: &str, premise: &str, conclusion: &str, v: i8, n: i8) -> ArgumentInstance {
        ArgumentInstance {
            id: id.to_string(),
            topic: topic.to_string(),
            premise: premise.to_string(),
            conclusion: conclusion.to_string(),
            validity_raw: v,
            novelty_raw: n,
            validity_confidence: Confidence::Unknown,
            novelty_confidence: Confidence::Unknown,
            split: Split::Train,
        }
    }

    #[test]
    fn label_mapping() {
        assert_eq!(map_label(1, Task::Validity).unwrap().value, Label::Positive);
        assert_eq!(map_label(0, Task::Novelty).unwrap().value, Label::Negative);
        assert_eq!(map_label(-1, Task::Validity).unwrap().value, Label::Negative);
        assert!(matches!(map_label(2, Task::Validity), Err(Error::Value(_))));
        assert!(matches!(map_label(-2, Task::Novelty), Err(Error::Value(_))));
    }

    #[test]
    fn distribution_order_and_empty() {
        assert_eq!(class_distribution(&[]).counts, [0, 0, 0, 0]);
        let rows = [
            inst("0", "t", "p", "c", -1, -1),
            inst("1", "t", "p", "c", -1, 1),
            inst("2", "t", "p", "c", 0, 1),
            inst("3", "t", "p", "c", 1, 0),
            inst("4", "t", "p", "c", 1, 1),
        ];
        assert_eq!(class_distribution(&rows).counts, [1, 2, 1, 1]);
    }

    #[test]
    fn overlap_trims_whitespace() {
        let a = [inst("0", "Veal ", "p", "c", 1, 1), inst("1", "Video games", "p", "c", 1, 1)];
        let b = [inst("0", " Veal", "p", "c", 1, 1), inst("1", "Zoos", "p", "c", 1, 1)];
        assert_eq!(topic_overlap(&a, &b), 1);
        assert_eq!(topic_overlap(&a, &a), 2);
    }

    #[test]
    fn single_pair_triplet() {
        let rows = [inst("0", "t", "p", "c1", 1, 1), inst("1", "t", "p", "c2", 1, -1)];
        let t = extract_triplets(&rows);
        assert_eq!(
            t,
            [TripletExample {
                anchor: "p".into(),
                positive: "c1".into(),
                negative: "c2".into(),
                topic: "t".into()
            }]
        );
    }

    #[test]
    fn cartesian_product_in_encounter_order() {
        let rows = [
            inst("0", "t", "p", "c1", 1, 1),
            inst("1", "t", "p", "c3", 1, -1),
            inst("2", "t", "p", "c2", 1, 1),
            inst("3", "t", "p", "c4", 1, 0),
        ];
        let pairs: Vec<(String, String)> = extract_triplets(&rows)
            .into_iter()
            .map(|t| (t.positive, t.negative))
            .collect();
        let expect = [("c1", "c3"), ("c1", "c4"), ("c2", "c3"), ("c2", "c4")];
        assert_eq!(pairs.len(), 4);
        for (got, want) in pairs.iter().zip(expect) {
            assert_eq!((got.0.as_str(), got.1.as_str()), want);
        }
    }

    #[test]
    fn no_triplets_without_shared_premise() {
        let rows = [inst("0", "t", "p1", "c1", 1, 1), inst("1", "t", "p2", "c2", 1, -1)];
        assert!(extract_triplets(&rows).is_empty());
        // Same premise under different topics does not group either.
        let rows = [inst("0", "a", "p", "c1", 1, 1), inst("1", "b", "p", "c2", 1, -1)];
        assert!(extract_triplets(&rows).is_empty());
    }
}
