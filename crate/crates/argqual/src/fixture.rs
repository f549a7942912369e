//! Synthetic stand-in for the shared-task files, plus discovery of the
//! official files when they are available locally.

use std::path::{Path, PathBuf};

use argqual_core::synth::{planned_split, SplitPlan};
use argqual_core::{ArgumentInstance, Split};

use crate::dataset::{load_corpus, write_corpus, ColumnMap};
use crate::error::{CliError, Result};

/// Directory holding the official train/dev/test files.
pub const OFFICIAL_DATA_ENV: &str = "ARGQUAL_OFFICIAL_DATA";

/// Joint class counts per split: non-valid/non-novel, non-valid/novel,
/// valid/non-novel, valid/novel.
pub const SHARED_TASK_COUNTS: [[usize; 4]; 3] = [[331, 18, 296, 105], [33, 44, 87, 38], [110, 96, 184, 130]];
pub const SHARED_TASK_TOPICS: [usize; 3] = [22, 8, 15];
/// Topic overlaps train/dev, train/test and dev/test.
pub const SHARED_TASK_OVERLAPS: [usize; 3] = [0, 0, 8];

const SPLITS: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

fn topic_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix} topic {i:02}")).collect()
}

/// Train topics are disjoint from the rest; every dev topic reappears in
/// test, which adds seven of its own.
pub fn shared_task_plans() -> [SplitPlan; 3] {
    let train = topic_names("train", SHARED_TASK_TOPICS[0]);
    let dev = topic_names("heldout", SHARED_TASK_TOPICS[1]);
    let mut test = dev.clone();
    test.extend(topic_names("unseen", SHARED_TASK_TOPICS[2] - SHARED_TASK_TOPICS[1]));
    let middle = [20, 0, 0];
    let mut topics = [train, dev, test].into_iter();
    std::array::from_fn(|i| SplitPlan {
        split: SPLITS[i],
        counts: SHARED_TASK_COUNTS[i],
        topics: topics.next().unwrap_or_default(),
        middle_labels: middle[i],
    })
}

pub fn shared_task_fixture(seed: u64) -> [Vec<ArgumentInstance>; 3] {
    let plans = shared_task_plans();
    std::array::from_fn(|i| planned_split(&plans[i], seed.wrapping_add(i as u64)))
}

pub fn write_shared_task_fixture(dir: &Path, seed: u64) -> Result<[PathBuf; 3]> {
    let splits = shared_task_fixture(seed);
    let columns = ColumnMap::default();
    let mut paths = Vec::with_capacity(3);
    for (split, rows) in SPLITS.iter().zip(&splits) {
        let path = dir.join(format!("{}.csv", split.as_str()));
        write_corpus(&path, rows, &columns)?;
        paths.push(path);
    }
    paths
        .try_into()
        .map_err(|_| CliError::Usage("fixture splits incomplete".into()))
}

/// Finds one file per split whose name contains `train`, `dev` or `test`.
pub fn find_split_files(dir: &Path) -> Result<[PathBuf; 3]> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    let mut found = Vec::with_capacity(3);
    for split in SPLITS {
        let key = split.as_str();
        let hits: Vec<&PathBuf> = names
            .iter()
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.to_ascii_lowercase().contains(key))
            })
            .collect();
        match hits.as_slice() {
            [one] => found.push((*one).clone()),
            [] => return Err(CliError::Usage(format!("{}: no {key} file found", dir.display()))),
            _ => {
                return Err(CliError::Usage(format!(
                    "{}: several files match {key}: {hits:?}",
                    dir.display()
                )))
            }
        }
    }
    found
        .try_into()
        .map_err(|_| CliError::Usage("split files incomplete".into()))
}

pub fn load_splits(paths: &[PathBuf; 3], columns: &ColumnMap) -> Result<[Vec<ArgumentInstance>; 3]> {
    let mut out = Vec::with_capacity(3);
    for (split, path) in SPLITS.iter().zip(paths) {
        out.push(load_corpus(path, columns, *split)?);
    }
    out.try_into()
        .map_err(|_| CliError::Usage("splits incomplete".into()))
}

/// The official directory from the environment, if set and non-empty.
pub fn official_data_dir() -> Option<PathBuf> {
    std::env::var_os(OFFICIAL_DATA_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}
