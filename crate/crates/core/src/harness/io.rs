//! Score tables (CSV) and labeled instances (JSON lines).

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabelGraph, Spin};
use crate::learning::{Target, TrainingInstance};

/// Reads one score row per instance. Columns are matched to graph labels by
/// header name and may come in any order; every label must be present.
pub fn read_scores_csv(graph: &LabelGraph, path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut column_of = vec![usize::MAX; graph.n()];
    for (col, name) in headers.iter().enumerate() {
        let id = graph.require_label(name)?;
        if column_of[id] != usize::MAX {
            return Err(Error::Parse(format!("label {name:?} appears twice in the header")));
        }
        column_of[id] = col;
    }
    if let Some(missing) = column_of.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Parse(format!("no score column for label {:?}", graph.labels[missing])));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = column_of
            .iter()
            .map(|&c| {
                record[c].parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {:?}: {e}", line + 1, &record[c])))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_scores_csv(graph: &LabelGraph, rows: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&graph.labels)?;
    for row in rows {
        if row.len() != graph.n() {
            return Err(Error::DimensionMismatch { expected: graph.n(), got: row.len() });
        }
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TargetLine {
    label: String,
    state: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceLine {
    x: Vec<f64>,
    targets: Vec<TargetLine>,
}

/// One `{"x": [...], "targets": [{"label": name, "state": 1 | -1}]}` per line.
/// Blank lines are skipped.
pub fn read_instances(graph: &LabelGraph, path: impl AsRef<Path>) -> Result<Vec<TrainingInstance>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: InstanceLine =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        let targets = parsed
            .targets
            .iter()
            .map(|t| {
                let state = Spin::from_sign(t.state)
                    .ok_or_else(|| Error::Parse(format!("line {}: state must be 1 or -1", i + 1)))?;
                Ok(Target { label: graph.require_label(&t.label)?, state })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(TrainingInstance::new(parsed.x, targets)?);
    }
    Ok(out)
}

pub fn write_instances(graph: &LabelGraph, data: &[TrainingInstance], path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for inst in data {
        let line = InstanceLine {
            x: inst.x.clone(),
            targets: inst
                .targets
                .iter()
                .map(|t| {
                    let label = graph
                        .labels
                        .get(t.label)
                        .ok_or_else(|| Error::InvalidArgument(format!("label {} out of range", t.label)))?;
                    Ok(TargetLine { label: label.clone(), state: t.state.value() as i64 })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
