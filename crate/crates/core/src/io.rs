//! Reading sequences, schedules, bit strings, pair lists and function tables
//! from CSV / JSONL files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::Pair;
use crate::probe::{FunctionSpec, ProbeError};
use crate::schedules::{LambdaSchedule, ScheduleError};
use crate::summability::{SequencePrefix, SummabilityError};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed input at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("index at line {0} breaks the 1..N sequence")]
    NonContiguousIndex(usize),
    #[error("input holds no values")]
    EmptyFile,
    #[error(transparent)]
    Sequence(#[from] SummabilityError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" | "ndjson" => Ok(InputFormat::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Csv => "csv",
            InputFormat::Jsonl => "jsonl",
        })
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn malformed(line: usize, reason: impl Into<String>) -> InputError {
    InputError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// Non-empty CSV rows with their 1-based line numbers; `#` starts a comment.
fn csv_rows(text: &str, skip_header: bool) -> Result<Vec<(usize, Vec<String>)>, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn parse_f64(field: &str, line: usize) -> Result<f64, InputError> {
    let v: f64 = field
        .parse()
        .map_err(|_| malformed(line, format!("`{field}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(malformed(line, format!("`{field}` is not finite")))
    }
}

fn check_index(index: &str, expected: usize, line: usize) -> Result<(), InputError> {
    let idx: usize = index
        .parse()
        .map_err(|_| malformed(line, format!("`{index}` is not an index")))?;
    if idx == expected {
        Ok(())
    } else {
        Err(InputError::NonContiguousIndex(line))
    }
}

/// Parses a sequence in file order. CSV rows are either `value` or
/// `index,value` (indices then run 1..N); JSONL lines are numbers or objects
/// with a `value` and optional `index`.
pub fn parse_sequence_str(text: &str, format: InputFormat) -> Result<SequencePrefix, InputError> {
    let values = match format {
        InputFormat::Csv => {
            let rows = csv_rows(text, false)?;
            let width = rows.first().map_or(1, |(_, r)| r.len());
            let mut values = Vec::with_capacity(rows.len());
            for (line, row) in &rows {
                if row.len() != width || !(1..=2).contains(&row.len()) {
                    return Err(malformed(*line, "expected `value` or `index,value`"));
                }
                if width == 2 {
                    check_index(&row[0], values.len() + 1, *line)?;
                }
                values.push(parse_f64(&row[width - 1], *line)?);
            }
            values
        }
        InputFormat::Jsonl => {
            let mut values = Vec::new();
            for (i, raw) in text.lines().enumerate() {
                let line = i + 1;
                if raw.trim().is_empty() {
                    continue;
                }
                let v: serde_json::Value =
                    serde_json::from_str(raw).map_err(|e| malformed(line, e.to_string()))?;
                let value = match &v {
                    serde_json::Value::Number(n) => n.as_f64(),
                    serde_json::Value::Object(map) => {
                        if let Some(idx) = map.get("index") {
                            if idx.as_u64() != Some(values.len() as u64 + 1) {
                                return Err(InputError::NonContiguousIndex(line));
                            }
                        }
                        map.get("value").and_then(serde_json::Value::as_f64)
                    }
                    _ => None,
                }
                .filter(|x| x.is_finite())
                .ok_or_else(|| malformed(line, "expected a number or {\"value\": number}"))?;
                values.push(value);
            }
            values
        }
    };
    if values.is_empty() {
        return Err(InputError::EmptyFile);
    }
    Ok(SequencePrefix::new(values)?)
}

pub fn parse_sequence_file(
    path: impl AsRef<Path>,
    format: InputFormat,
) -> Result<SequencePrefix, InputError> {
    parse_sequence_str(&read(path.as_ref())?, format)
}

/// One λ value per line; the first line is skipped when `has_header`.
pub fn parse_schedule_str(
    text: &str,
    name: &str,
    has_header: bool,
) -> Result<LambdaSchedule, InputError> {
    let rows = csv_rows(text, has_header)?;
    if rows.is_empty() {
        return Err(InputError::EmptyFile);
    }
    let values = rows
        .iter()
        .map(|(line, row)| match row.as_slice() {
            [v] => parse_f64(v, *line),
            _ => Err(malformed(*line, "expected one value per line")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LambdaSchedule::validate(name, values)?)
}

pub fn parse_schedule_file(
    path: impl AsRef<Path>,
    has_header: bool,
) -> Result<LambdaSchedule, InputError> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned());
    parse_schedule_str(&read(path)?, &name, has_header)
}

/// 0/1 values, one per line (or `index,bit`).
pub fn parse_bits_str(text: &str) -> Result<Vec<u8>, InputError> {
    let seq = parse_sequence_str(text, InputFormat::Csv)?;
    seq.values()
        .iter()
        .enumerate()
        .map(|(i, &v)| match v {
            0.0 => Ok(0),
            1.0 => Ok(1),
            _ => Err(malformed(i + 1, format!("`{v}` is not a bit"))),
        })
        .collect()
}

/// Two-column `x,y` rows with no header.
fn parse_two_columns(text: &str) -> Result<Vec<(f64, f64)>, InputError> {
    let rows = csv_rows(text, false)?;
    if rows.is_empty() {
        return Err(InputError::EmptyFile);
    }
    rows.iter()
        .map(|(line, row)| match row.as_slice() {
            [a, b] => Ok((parse_f64(a, *line)?, parse_f64(b, *line)?)),
            _ => Err(malformed(*line, "expected two columns")),
        })
        .collect()
}

/// `xi,eta` rows.
pub fn parse_pairs_str(text: &str) -> Result<Vec<Pair>, InputError> {
    Ok(parse_two_columns(text)?
        .into_iter()
        .map(|(xi, eta)| Pair { xi, eta })
        .collect())
}

/// `x,y` samples for a linearly interpolated function over [x_min, x_max].
pub fn parse_table_str(text: &str) -> Result<FunctionSpec, InputError> {
    Ok(FunctionSpec::table(parse_two_columns(text)?)?)
}

pub fn parse_table_file(path: impl AsRef<Path>) -> Result<FunctionSpec, InputError> {
    parse_table_str(&read(path.as_ref())?)
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String, InputError> {
    read(path.as_ref())
}
