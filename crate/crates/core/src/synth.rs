//! Seeded synthetic corpora for tests, demos and the bundled fixture.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TripletExample;
use crate::types::{ArgumentInstance, Confidence, Split};

const FILLER: [&str; 64] = [
    "people", "should", "because", "many", "cities", "public", "money", "schools", "children", "health", "rules",
    "market", "energy", "workers", "history", "science", "freedom", "society", "family", "policy", "research",
    "water", "online", "privacy", "safety", "culture", "growth", "taxes", "voters", "courts", "police", "prices",
    "nature", "animals", "farmers", "housing", "transit", "youth", "elders", "sports", "music", "media", "budget",
    "doctors", "teachers", "borders", "trade", "climate", "ocean", "forest", "design", "labor", "justice", "access",
    "reform", "choice", "duty", "harm", "benefit", "cost", "risk", "value", "trust", "change",
];

const CONFIDENCES: [Confidence; 4] = [
    Confidence::VeryConfident,
    Confidence::Confident,
    Confidence::Majority,
    Confidence::Defeasible,
];

/// Marker tokens injected into conclusions of [`marker_corpus`].
pub const VALID_MARKER: &str = "therefore";
pub const INVALID_MARKER: &str = "unrelatedly";
pub const NOVEL_MARKER: &str = "moreover";
pub const STALE_MARKER: &str = "restating";

fn words(rng: &mut impl Rng, n: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(FILLER.choose(rng).copied().unwrap_or("people"));
    }
    out
}

/// `n` instances with balanced, independent labels; each conclusion carries
/// one validity marker and one novelty marker among random filler words.
pub fn marker_corpus(n: usize, split: Split, seed: u64) -> Vec<ArgumentInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let valid = rng.gen_bool(0.5);
            let novel = rng.gen_bool(0.5);
            let len = rng.gen_range(6..10);
            let premise = words(&mut rng, len);
            let mut tokens: Vec<String> = (0..rng.gen_range(4..7)).map(|_| words(&mut rng, 1)).collect();
            tokens.push(if valid { VALID_MARKER } else { INVALID_MARKER }.into());
            tokens.push(if novel { NOVEL_MARKER } else { STALE_MARKER }.into());
            tokens.shuffle(&mut rng);
            ArgumentInstance {
                id: format!("{}-{i:04}", split.as_str()),
                topic: format!("topic {}", i % 8),
                premise,
                conclusion: tokens.join(" "),
                validity_raw: if valid { 1 } else { -1 },
                novelty_raw: if novel { 1 } else { -1 },
                validity_confidence: *CONFIDENCES.choose(&mut rng).unwrap_or(&Confidence::Majority),
                novelty_confidence: *CONFIDENCES.choose(&mut rng).unwrap_or(&Confidence::Majority),
                split,
            }
        })
        .collect()
}

/// Triplets whose anchor and positive share a marker token that the
/// negative lacks; everything else is random filler.
pub fn marker_triplets(n: usize, seed: u64) -> Vec<TripletExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const MARKERS: [(&str, &str); 4] = [
        ("alpha", "omega"),
        ("north", "south"),
        ("solar", "lunar"),
        ("ember", "frost"),
    ];
    (0..n)
        .map(|i| {
            let (shared, other) = MARKERS[i % MARKERS.len()];
            let mut with = |marker: &str| {
                let mut t: Vec<String> = (0..6).map(|_| words(&mut rng, 1)).collect();
                t.push(marker.into());
                t.shuffle(&mut rng);
                t.join(" ")
            };
            TripletExample {
                anchor: with(shared),
                positive: with(shared),
                negative: with(other),
                topic: format!("topic {}", i % 4),
            }
        })
        .collect()
}

/// Layout of one split of a fixture corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub split: Split,
    /// Joint class counts in class-distribution order.
    pub counts: [usize; 4],
    pub topics: Vec<String>,
    /// How many negative labels per task use the raw middle value `0`.
    pub middle_labels: usize,
}

/// Instances realizing `plan` exactly; instances are spread over topics
/// round-robin and share premises in groups of three within a topic.
pub fn planned_split(plan: &SplitPlan, seed: u64) -> Vec<ArgumentInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joint: Vec<usize> = Vec::new();
    for (class, &count) in plan.counts.iter().enumerate() {
        joint.extend(core::iter::repeat_n(class, count));
    }
    joint.shuffle(&mut rng);
    let topic_count = plan.topics.len().max(1);
    let mut middle = [plan.middle_labels; 2];
    let mut premise_of: Vec<(usize, String)> = Vec::new();

    joint
        .iter()
        .enumerate()
        .map(|(i, &class)| {
            let valid = class >= 2;
            let novel = class % 2 == 1;
            let topic_idx = i % topic_count;
            let group = i / (3 * topic_count);
            let premise = match premise_of.iter().find(|(k, _)| *k == group * topic_count + topic_idx) {
                Some((_, p)) => p.clone(),
                None => {
                    let len = rng.gen_range(8..14);
                    let p = words(&mut rng, len);
                    premise_of.push((group * topic_count + topic_idx, p.clone()));
                    p
                }
            };
            let mut raw = |positive: bool, t: usize| -> i8 {
                if positive {
                    1
                } else if middle[t] > 0 {
                    middle[t] -= 1;
                    0
                } else {
                    -1
                }
            };
            let validity_raw = raw(valid, 0);
            let novelty_raw = raw(novel, 1);
            let len = rng.gen_range(5..10);
            ArgumentInstance {
                id: format!("{}-{i:04}", plan.split.as_str()),
                topic: plan.topics.get(topic_idx).cloned().unwrap_or_default(),
                premise,
                conclusion: words(&mut rng, len),
                validity_raw,
                novelty_raw,
                validity_confidence: *CONFIDENCES.choose(&mut rng).unwrap_or(&Confidence::Majority),
                novelty_confidence: *CONFIDENCES.choose(&mut rng).unwrap_or(&Confidence::Majority),
                split: plan.split,
            }
        })
        .collect()
}
