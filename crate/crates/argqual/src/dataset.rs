//! Delimited corpus files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use argqual_core::{ArgumentInstance, Confidence, Error, Split, Task};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fsutil::atomic_write;

/// Header names for each field. Confidence columns may be missing from a
/// file; their values then default to `unknown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub topic: String,
    pub premise: String,
    pub conclusion: String,
    pub validity: String,
    pub validity_confidence: String,
    pub novelty: String,
    pub novelty_confidence: String,
    /// Explicit id column; row indices are used when unset.
    pub id: Option<String>,
    /// Cell text → raw label. Cells not listed here must parse as integers.
    pub label_values: BTreeMap<String, i8>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            topic: "topic".into(),
            premise: "Premise".into(),
            conclusion: "Conclusion".into(),
            validity: "Validity".into(),
            validity_confidence: "Validity-Confidence".into(),
            novelty: "Novelty".into(),
            novelty_confidence: "Novelty-Confidence".into(),
            id: None,
            label_values: BTreeMap::new(),
        }
    }
}

impl ColumnMap {
    fn label_column(&self, task: Task) -> &str {
        match task {
            Task::Validity => &self.validity,
            Task::Novelty => &self.novelty,
        }
    }

    fn confidence_column(&self, task: Task) -> &str {
        match task {
            Task::Validity => &self.validity_confidence,
            Task::Novelty => &self.novelty_confidence,
        }
    }

    fn raw_label(&self, cell: &str) -> Option<i8> {
        let cell = cell.trim();
        self.label_values.get(cell).copied().or_else(|| cell.parse().ok())
    }
}

/// Tab if the header line contains one, comma otherwise.
pub fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub fn load_corpus(path: &Path, columns: &ColumnMap, split: Split) -> Result<Vec<ArgumentInstance>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_corpus(&text, path, columns, split)
}

pub fn parse_corpus(text: &str, path: &Path, columns: &ColumnMap, split: Split) -> Result<Vec<ArgumentInstance>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(text))
        .from_reader(text.as_bytes());
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.into(),
        line,
        message,
    };
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| CliError::Schema {
            path: path.into(),
            column: name.into(),
        })
    };
    let topic = require(&columns.topic)?;
    let premise = require(&columns.premise)?;
    let conclusion = require(&columns.conclusion)?;
    let labels = [require(columns.label_column(Task::Validity))?, require(columns.label_column(Task::Novelty))?];
    let confidences = [
        find(columns.confidence_column(Task::Validity)),
        find(columns.confidence_column(Task::Novelty)),
    ];
    let id_col = match &columns.id {
        Some(name) => Some(require(name)?),
        None => None,
    };

    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or("").to_string();
        let row_err = |e: Error| -> CliError {
            let msg = e.to_string();
            Error::Value(format!("row {row} (line {line}): {msg}")).into()
        };

        let mut raw = [0i8; 2];
        for task in Task::ALL {
            let text = cell(labels[task.index()]);
            raw[task.index()] = match columns.raw_label(&text) {
                Some(v) if (-1..=1).contains(&v) => v,
                _ => {
                    return Err(row_err(Error::Value(format!(
                        "{task} label {:?} outside {{-1, 0, 1}}",
                        text.trim()
                    ))))
                }
            };
        }
        let mut conf = [Confidence::Unknown; 2];
        for task in Task::ALL {
            if let Some(col) = confidences[task.index()] {
                let text = cell(col);
                conf[task.index()] = Confidence::parse(&text)
                    .ok_or_else(|| row_err(Error::Value(format!("unknown {task} confidence {:?}", text.trim()))))?;
            }
        }
        let id = match id_col {
            Some(c) => cell(c).trim().to_string(),
            None => row.to_string(),
        };
        if !seen.insert(id.clone()) {
            return Err(row_err(Error::Data(format!("duplicate id {id:?}"))));
        }
        let inst = ArgumentInstance {
            id,
            topic: cell(topic),
            premise: cell(premise),
            conclusion: cell(conclusion),
            validity_raw: raw[0],
            novelty_raw: raw[1],
            validity_confidence: conf[0],
            novelty_confidence: conf[1],
            split,
        };
        inst.validate().map_err(row_err)?;
        out.push(inst);
    }
    Ok(out)
}

/// Comma-separated with the mapped header; the id column is written only
/// when the map names one.
pub fn write_corpus(path: &Path, instances: &[ArgumentInstance], columns: &ColumnMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = Vec::new();
    if let Some(id) = &columns.id {
        header.push(id.as_str());
    }
    header.extend([
        columns.topic.as_str(),
        &columns.premise,
        &columns.conclusion,
        &columns.validity,
        &columns.validity_confidence,
        &columns.novelty,
        &columns.novelty_confidence,
    ]);
    let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for inst in instances {
        let mut row = Vec::new();
        if columns.id.is_some() {
            row.push(inst.id.clone());
        }
        row.extend([
            inst.topic.clone(),
            inst.premise.clone(),
            inst.conclusion.clone(),
            inst.validity_raw.to_string(),
            inst.validity_confidence.as_str().replace('-', " "),
            inst.novelty_raw.to_string(),
            inst.novelty_confidence.as_str().replace('-', " "),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "topic,Premise,Conclusion,Validity,Validity-Confidence,Novelty,Novelty-Confidence";

    fn parse(text: &str) -> Result<Vec<ArgumentInstance>> {
        parse_corpus(text, Path::new("mem.csv"), &ColumnMap::default(), Split::Train)
    }

    #[test]
    fn three_rows_get_index_ids() {
        let text = format!(
            "{HEADER}\nT,p one,c one,1,confident,-1,majority\nT,p two,c two,0,very confident,1,\nU,p3,c3,-1,Majority,0,defeasible\n"
        );
        let rows = parse(&text).unwrap();
        let ids: Vec<&str> = rows.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["0", "1", "2"]);
        assert_eq!(rows[1].validity_confidence, Confidence::VeryConfident);
        assert_eq!(rows[1].novelty_confidence, Confidence::Unknown);
        assert_eq!(rows[2].novelty_raw, 0);
    }

    #[test]
    fn tab_delimited_without_confidence_columns() {
        let text = "topic\tPremise\tConclusion\tValidity\tNovelty\nT\tp\tc\t1\t-1\n";
        let rows = parse(text).unwrap();
        assert_eq!(rows[0].validity_confidence, Confidence::Unknown);
        assert_eq!(rows[0].premise, "p");
    }

    #[test]
    fn missing_column_is_named() {
        let text = "topic,Premise,Validity,Novelty\nT,p,1,1\n";
        match parse(text).unwrap_err() {
            CliError::Schema { column, .. } => assert_eq!(column, "Conclusion"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn out_of_range_label_cites_row() {
        let text = format!("{HEADER}\nT,p,c,1,,1,\nT,p,c,2,,1,\n");
        let err = parse(&text).unwrap_err();
        assert_eq!(err.category(), "value");
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn empty_premise_rejected() {
        let text = format!("{HEADER}\nT, ,c,1,,1,\n");
        assert_eq!(parse(&text).unwrap_err().category(), "value");
    }

    #[test]
    fn value_map_and_id_column() {
        let columns = ColumnMap {
            id: Some("uid".into()),
            label_values: [("yes".to_string(), 1), ("no".to_string(), -1)].into_iter().collect(),
            ..ColumnMap::default()
        };
        let text = "uid,topic,Premise,Conclusion,Validity,Novelty\na7,T,p,c,yes,no\n";
        let rows = parse_corpus(text, Path::new("m"), &columns, Split::Dev).unwrap();
        assert_eq!(rows[0].id, "a7");
        assert_eq!((rows[0].validity_raw, rows[0].novelty_raw), (1, -1));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let text = format!("{HEADER}\n\"T, with comma\",\"p \"\"q\"\"\",c,1,confident,0,very confident\n");
        let rows = parse(&text).unwrap();
        write_corpus(&p, &rows, &ColumnMap::default()).unwrap();
        assert_eq!(load_corpus(&p, &ColumnMap::default(), Split::Train).unwrap(), rows);
    }
}
