//! Byte-stable CSV and JSON renderings of a report envelope.

use std::str::FromStr;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::value::RawValue;

use super::{Cell, ReportEnvelope, ReportError};
use crate::stats::fmt2;

pub const NA: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            ExportFormat::Csv => "text/csv; charset=utf-8",
            ExportFormat::Json => "application/json",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(ReportError::Validation(format!("unsupported export format `{other}` (csv or json)"))),
        }
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Text(s) => s.clone(),
        Cell::Int(i) => i.to_string(),
        Cell::Num(Some(x)) => fmt2(*x),
        Cell::Num(None) => NA.to_string(),
    }
}

/// One row as a JSON object in column order. Numbers are written verbatim
/// from their 2-decimal text so `65.00` stays `65.00`.
struct JsonRow<'a> {
    columns: &'a [&'static str],
    cells: &'a [Cell],
}

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len()))?;
        for (col, cell) in self.columns.iter().zip(self.cells) {
            match cell {
                Cell::Text(t) => map.serialize_entry(col, t)?,
                Cell::Int(i) => map.serialize_entry(col, i)?,
                Cell::Num(Some(x)) => {
                    let raw = RawValue::from_string(fmt2(*x)).expect("fmt2 yields a JSON number");
                    map.serialize_entry(col, &raw)?
                }
                Cell::Num(None) => map.serialize_entry(col, NA)?,
            }
        }
        map.end()
    }
}

#[derive(serde::Serialize)]
struct JsonDoc<'a> {
    study_id: &'a str,
    kind: &'static str,
    generated_at: String,
    columns: &'a [&'static str],
    rows: Vec<JsonRow<'a>>,
    footnotes: &'a [String],
}

/// Serializes an envelope. CSV carries the header row and data rows only;
/// JSON carries the whole envelope with rows keyed by column name.
pub fn export(envelope: &ReportEnvelope, format: ExportFormat) -> Result<Vec<u8>, ReportError> {
    if envelope.rows.iter().any(|r| r.len() != envelope.columns.len()) {
        return Err(ReportError::Validation(format!("{} rows do not match its columns", envelope.kind)));
    }
    match format {
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            let io = |e: csv::Error| ReportError::Validation(e.to_string());
            w.write_record(&envelope.columns).map_err(io)?;
            for row in &envelope.rows {
                w.write_record(row.iter().map(cell_text)).map_err(io)?;
            }
            w.into_inner().map_err(|e| ReportError::Validation(e.to_string()))
        }
        ExportFormat::Json => {
            let doc = JsonDoc {
                study_id: &envelope.study_id,
                kind: envelope.kind.label(),
                generated_at: envelope.generated_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                columns: &envelope.columns,
                rows: envelope.rows.iter().map(|cells| JsonRow { columns: &envelope.columns, cells }).collect(),
                footnotes: &envelope.footnotes,
            };
            let mut out = serde_json::to_vec_pretty(&doc).expect("report serializes");
            out.push(b'\n');
            Ok(out)
        }
    }
}
