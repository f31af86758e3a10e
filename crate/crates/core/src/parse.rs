//! Export ingestion: CSV (RFC 4180, header required) and JSONL.
//!
//! Malformed rows never abort a parse; they are collected as [`RowError`]s so
//! a single bad export line does not hide the rest of the data. The parse
//! only fails outright when the stream is unreadable, the header is unusable,
//! or more than half of the rows are malformed (which signals the wrong file
//! rather than a dirty one).

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArchivalState, CalendarEvent, RecordEntry, RecordKind, RowError};
use crate::time::Timestamp;

/// Supported input encodings for record and calendar exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// Picks a format from a file extension, defaulting to CSV.
    pub fn from_path(path: &str) -> InputFormat {
        let lower = path.to_ascii_lowercase();
        if lower.ends_with(".jsonl") || lower.ends_with(".ndjson") || lower.ends_with(".json") {
            InputFormat::Jsonl
        } else {
            InputFormat::Csv
        }
    }
}

/// Result of parsing one input stream.
#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<RecordEntry>,
    pub errors: Vec<RowError>,
}

impl ParseOutcome {
    pub fn merge(&mut self, other: ParseOutcome) {
        self.records.extend(other.records);
        self.errors.extend(other.errors);
    }
}

const RECORD_FIELDS: [&str; 12] = [
    "record_id",
    "kind",
    "parent_id",
    "name",
    "doc_type",
    "created_at",
    "last_updated_at",
    "creator_id",
    "org_unit",
    "revision_count",
    "archival_state",
    "archived_at",
];

// Columns that must be present in a CSV header for the file to be usable.
const REQUIRED_COLUMNS: [&str; 7] = [
    "record_id",
    "kind",
    "created_at",
    "last_updated_at",
    "creator_id",
    "org_unit",
    "archival_state",
];

/// Parses a record export. Well-formed rows become [`RecordEntry`] values;
/// malformed rows become [`RowError`]s. Fails with [`Error::Format`] when more
/// than half of the data rows are malformed.
pub fn parse_records<R: Read>(reader: R, format: InputFormat) -> Result<ParseOutcome> {
    let outcome = match format {
        InputFormat::Csv => parse_records_csv(reader)?,
        InputFormat::Jsonl => parse_records_jsonl(reader)?,
    };
    check_malformed_ratio(&outcome)?;
    Ok(outcome)
}

fn check_malformed_ratio(outcome: &ParseOutcome) -> Result<()> {
    let total = outcome.records.len() + outcome.errors.len();
    if total > 0 && outcome.errors.len() * 2 > total {
        return Err(Error::Format(format!(
            "{} of {} rows malformed; this does not look like a record export",
            outcome.errors.len(),
            total
        )));
    }
    Ok(())
}

fn parse_records_csv<R: Read>(reader: R) -> Result<ParseOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable CSV header: {e}")))?
        .clone();
    let columns: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, name)| (name.trim(), i))
        .collect();
    for required in REQUIRED_COLUMNS {
        if !columns.contains_key(required) {
            return Err(Error::Format(format!("CSV header misses column {required:?}")));
        }
    }
    let col = |name: &str| columns.get(name).copied();
    let idx: Vec<Option<usize>> = RECORD_FIELDS.iter().map(|f| col(f)).collect();

    let mut outcome = ParseOutcome::default();
    // Line 1 is the header.
    let mut line: u64 = 1;
    for row in csv_reader.into_records() {
        line += 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                if is_io_error(&e) {
                    return Err(Error::Io(std::io::Error::other(e)));
                }
                outcome.errors.push(RowError {
                    line,
                    reason: format!("unparseable row: {e}"),
                });
                continue;
            }
        };
        let field = |slot: usize| -> &str {
            idx[slot].and_then(|i| row.get(i)).unwrap_or("").trim()
        };
        match record_from_fields(
            field(0),
            field(1),
            field(2),
            field(3),
            field(4),
            field(5),
            field(6),
            field(7),
            field(8),
            field(9),
            field(10),
            field(11),
        ) {
            Ok(entry) => outcome.records.push(entry),
            Err(reason) => outcome.errors.push(RowError { line, reason }),
        }
    }
    Ok(outcome)
}

fn is_io_error(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::Io(_))
}

#[allow(clippy::too_many_arguments)]
fn record_from_fields(
    record_id: &str,
    kind: &str,
    parent_id: &str,
    name: &str,
    doc_type: &str,
    created_at: &str,
    last_updated_at: &str,
    creator_id: &str,
    org_unit: &str,
    revision_count: &str,
    archival_state: &str,
    archived_at: &str,
) -> std::result::Result<RecordEntry, String> {
    let kind = RecordKind::parse(kind)?;
    let revision_count = if revision_count.is_empty() {
        None
    } else {
        Some(
            revision_count
                .parse::<u32>()
                .map_err(|_| format!("invalid revision_count {revision_count:?}"))?,
        )
    };
    let entry = RecordEntry {
        record_id: record_id.to_owned(),
        kind,
        parent_id: if parent_id.is_empty() {
            None
        } else {
            Some(parent_id.to_owned())
        },
        name: name.to_owned(),
        // Document types do not apply to folders.
        doc_type: if kind == RecordKind::Folder {
            String::new()
        } else {
            doc_type.to_owned()
        },
        created_at: Timestamp::parse(created_at).map_err(|e| format!("created_at: {e}"))?,
        last_updated_at: Timestamp::parse(last_updated_at)
            .map_err(|e| format!("last_updated_at: {e}"))?,
        creator_id: creator_id.to_owned(),
        org_unit: org_unit.to_owned(),
        revision_count,
        archival_state: ArchivalState::parse(archival_state)?,
        archived_at: if archived_at.is_empty() {
            None
        } else {
            Some(Timestamp::parse(archived_at).map_err(|e| format!("archived_at: {e}"))?)
        },
    };
    entry.validate()?;
    Ok(entry)
}

fn parse_records_jsonl<R: Read>(reader: R) -> Result<ParseOutcome> {
    let mut outcome = ParseOutcome::default();
    for (number, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = number as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RecordEntry>(&line) {
            Ok(mut entry) => {
                if entry.kind == RecordKind::Folder {
                    entry.doc_type.clear();
                }
                match entry.validate() {
                    Ok(()) => outcome.records.push(entry),
                    Err(reason) => outcome.errors.push(RowError { line: line_no, reason }),
                }
            }
            Err(e) => outcome.errors.push(RowError {
                line: line_no,
                reason: format!("invalid object: {e}"),
            }),
        }
    }
    Ok(outcome)
}

/// Writes records as canonical CSV: fixed column order, RFC 3339 timestamps.
pub fn write_records_csv<W: Write>(records: &[RecordEntry], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(RECORD_FIELDS)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for r in records {
        out.write_record([
            r.record_id.as_str(),
            &r.kind.to_string(),
            r.parent_id.as_deref().unwrap_or(""),
            r.name.as_str(),
            r.doc_type.as_str(),
            &r.created_at.to_string(),
            &r.last_updated_at.to_string(),
            r.creator_id.as_str(),
            r.org_unit.as_str(),
            &r.revision_count.map(|v| v.to_string()).unwrap_or_default(),
            &r.archival_state.to_string(),
            &r.archived_at.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes records as JSONL, one object per line, canonical field order.
pub fn write_records_jsonl<W: Write>(records: &[RecordEntry], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

const CALENDAR_FIELDS: [&str; 6] = [
    "event_id",
    "starts_at",
    "event_type",
    "organizer_id",
    "org_unit",
    "requires_documentation",
];

/// Parses a calendar export. `bounds`, when given, rejects events outside the
/// record time range extended by `slack_secs` on both sides.
pub fn parse_calendar<R: Read>(
    reader: R,
    format: InputFormat,
    bounds: Option<(Timestamp, Timestamp)>,
    slack_secs: i64,
) -> Result<(Vec<CalendarEvent>, Vec<RowError>)> {
    let (mut events, mut errors) = match format {
        InputFormat::Csv => parse_calendar_csv(reader)?,
        InputFormat::Jsonl => parse_calendar_jsonl(reader)?,
    };
    if let Some((start, end)) = bounds {
        let lo = start.plus_secs(-slack_secs);
        let hi = end.plus_secs(slack_secs);
        let mut kept = Vec::with_capacity(events.len());
        for (position, event) in events.drain(..).enumerate() {
            if event.starts_at < lo || event.starts_at > hi {
                errors.push(RowError {
                    line: position as u64 + 1,
                    reason: format!(
                        "event {} starts at {} outside the record time range",
                        event.event_id, event.starts_at
                    ),
                });
            } else {
                kept.push(event);
            }
        }
        events = kept;
    }
    Ok((events, errors))
}

fn parse_calendar_csv<R: Read>(reader: R) -> Result<(Vec<CalendarEvent>, Vec<RowError>)> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable CSV header: {e}")))?
        .clone();
    let columns: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, name)| (name.trim(), i))
        .collect();
    for required in ["event_id", "starts_at", "organizer_id", "org_unit"] {
        if !columns.contains_key(required) {
            return Err(Error::Format(format!("calendar header misses column {required:?}")));
        }
    }
    let idx: Vec<Option<usize>> = CALENDAR_FIELDS.iter().map(|f| columns.get(f).copied()).collect();

    let mut events = Vec::new();
    let mut errors = Vec::new();
    let mut line: u64 = 1;
    for row in csv_reader.into_records() {
        line += 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                errors.push(RowError {
                    line,
                    reason: format!("unparseable row: {e}"),
                });
                continue;
            }
        };
        let field = |slot: usize| -> &str {
            idx[slot].and_then(|i| row.get(i)).unwrap_or("").trim()
        };
        let event_id = field(0);
        if event_id.is_empty() {
            errors.push(RowError {
                line,
                reason: "missing event_id".to_owned(),
            });
            continue;
        }
        let starts_at = match Timestamp::parse(field(1)) {
            Ok(t) => t,
            Err(e) => {
                errors.push(RowError {
                    line,
                    reason: format!("starts_at: {e}"),
                });
                continue;
            }
        };
        let requires = matches!(
            field(5).to_ascii_lowercase().as_str(),
            "true" | "yes" | "1"
        );
        events.push(CalendarEvent {
            event_id: event_id.to_owned(),
            starts_at,
            event_type: field(2).to_owned(),
            organizer_id: field(3).to_owned(),
            org_unit: field(4).to_owned(),
            requires_documentation: requires,
        });
    }
    Ok((events, errors))
}

fn parse_calendar_jsonl<R: Read>(reader: R) -> Result<(Vec<CalendarEvent>, Vec<RowError>)> {
    let mut events = Vec::new();
    let mut errors = Vec::new();
    for (number, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = number as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CalendarEvent>(&line) {
            Ok(event) if event.event_id.is_empty() => errors.push(RowError {
                line: line_no,
                reason: "missing event_id".to_owned(),
            }),
            Ok(event) => events.push(event),
            Err(e) => errors.push(RowError {
                line: line_no,
                reason: format!("invalid object: {e}"),
            }),
        }
    }
    Ok((events, errors))
}

/// Writes a calendar export as canonical CSV.
pub fn write_calendar_csv<W: Write>(events: &[CalendarEvent], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CALENDAR_FIELDS)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for e in events {
        out.write_record([
            e.event_id.as_str(),
            &e.starts_at.to_string(),
            e.event_type.as_str(),
            e.organizer_id.as_str(),
            e.org_unit.as_str(),
            if e.requires_documentation { "true" } else { "false" },
        ])
        .map_err(|err| Error::Io(std::io::Error::other(err)))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TextRow {
    record_id: String,
    text: String,
}

/// Parses a JSONL file of `{"record_id": ..., "text": ...}` objects, used to
/// feed full document texts into the language checks.
pub fn parse_texts<R: Read>(reader: R) -> Result<std::collections::BTreeMap<String, String>> {
    let mut texts = std::collections::BTreeMap::new();
    for (number, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: TextRow = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("texts line {}: {e}", number + 1)))?;
        texts.insert(row.record_id, row.text);
    }
    Ok(texts)
}
