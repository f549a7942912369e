//! Prediction files: `instance_id,task,value,source,flagged`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use argqual_core::predictions::{Prediction, PredictionSet};
use argqual_core::{Label, Task};

use crate::error::{CliError, Result};
use crate::fsutil::atomic_write;

pub const HEADER: [&str; 5] = ["instance_id", "task", "value", "source", "flagged"];

pub fn to_csv(set: &PredictionSet) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    let _ = w.write_record(HEADER);
    for p in set.rows() {
        let _ = w.write_record([
            p.instance_id.as_str(),
            p.task.as_str(),
            p.value.as_str(),
            p.source.as_str(),
            if p.flagged { "true" } else { "false" },
        ]);
    }
    w.into_inner().unwrap_or_default()
}

pub fn save_predictions(path: &Path, set: &PredictionSet) -> Result<()> {
    atomic_write(path, &to_csv(set))
}

pub fn load_predictions(path: &Path) -> Result<PredictionSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_predictions(&text, path)
}

pub fn parse_predictions(text: &str, path: &Path) -> Result<PredictionSet> {
    let err = |line: u64, message: String| CliError::Parse {
        path: path.into(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(err(1, format!("expected header {}", HEADER.join(","))));
    }
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(err(line, format!("expected {} fields, found {}", HEADER.len(), record.len())));
        }
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let id = field(0);
        if id.is_empty() {
            return Err(err(line, "empty instance_id".into()));
        }
        let task: Task = field(1).parse().map_err(|_| err(line, format!("unknown task {:?}", field(1))))?;
        let value: Label = field(2).parse().map_err(|_| err(line, format!("unknown value {:?}", field(2))))?;
        let flagged = match field(4) {
            "true" => true,
            "false" | "" => false,
            other => return Err(err(line, format!("flagged must be true or false, got {other:?}"))),
        };
        if !seen.insert((id.to_string(), task, field(3).to_string())) {
            return Err(err(line, format!("duplicate row for ({id}, {task}, {})", field(3))));
        }
        let mut p = Prediction::new(id, task, value, field(3));
        p.flagged = flagged;
        rows.push(p);
    }
    Ok(PredictionSet::new(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PredictionSet> {
        parse_predictions(text, Path::new("p.csv"))
    }

    #[test]
    fn round_trip_is_identity_and_sorted() {
        let mut flagged = Prediction::new("b", Task::Novelty, Label::Negative, "gpt3");
        flagged.flagged = true;
        let set = PredictionSet::new(vec![
            flagged,
            Prediction::new("a", Task::Novelty, Label::Positive, "mtl"),
            Prediction::new("a", Task::Validity, Label::Negative, "mtl"),
        ])
        .unwrap();
        let text = String::from_utf8(to_csv(&set)).unwrap();
        assert_eq!(
            text,
            "instance_id,task,value,source,flagged\n\
             a,validity,negative,mtl,false\n\
             a,novelty,positive,mtl,false\n\
             b,novelty,negative,gpt3,true\n"
        );
        assert_eq!(parse(&text).unwrap(), set);
    }

    #[test]
    fn duplicate_row_reports_line() {
        let text = "instance_id,task,value,source,flagged\nx,validity,positive,s,false\nx,validity,negative,s,false\n";
        match parse(text).unwrap_err() {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_task_reports_line() {
        let text = "instance_id,task,value,source,flagged\nx,clarity,positive,s,false\n";
        let e = parse(text).unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse("id,task,value\n").is_err());
    }
}
