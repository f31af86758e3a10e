//! The metadata data model.
//!
//! One [`RecordEntry`] describes a single document or folder as exported from
//! a document-management system. Entries are the unit of analysis for every
//! detection rule and indicator; they carry no content, only lifecycle
//! metadata.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

/// Whether an entry is a document or a container for other entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RecordKind {
    Document,
    Folder,
}

impl<'de> Deserialize<'de> for RecordKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        RecordKind::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl RecordKind {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.trim().to_ascii_lowercase().as_str() {
            "document" | "doc" | "file" => Ok(RecordKind::Document),
            "folder" | "dossier" => Ok(RecordKind::Folder),
            other => Err(format!("unknown kind {other:?}")),
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordKind::Document => f.write_str("Document"),
            RecordKind::Folder => f.write_str("Folder"),
        }
    }
}

/// Archival lifecycle state as recorded in the export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ArchivalState {
    Active,
    Archived,
    MarkedForDestruction,
}

impl<'de> Deserialize<'de> for ArchivalState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ArchivalState::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl ArchivalState {
    pub fn parse(text: &str) -> Result<Self, String> {
        let normalized: String = text
            .trim()
            .chars()
            .filter(|c| *c != '_' && *c != '-' && !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        match normalized.as_str() {
            "active" | "" => Ok(ArchivalState::Active),
            "archived" => Ok(ArchivalState::Archived),
            "markedfordestruction" | "todestroy" | "destruction" => {
                Ok(ArchivalState::MarkedForDestruction)
            }
            other => Err(format!("unknown archival state {other:?}")),
        }
    }
}

impl fmt::Display for ArchivalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchivalState::Active => f.write_str("Active"),
            ArchivalState::Archived => f.write_str("Archived"),
            ArchivalState::MarkedForDestruction => f.write_str("MarkedForDestruction"),
        }
    }
}

/// One document or folder with its full metadata.
///
/// Invariants (enforced at parse time, see [`RecordEntry::validate`]):
/// - `created_at <= last_updated_at`
/// - documents carry `revision_count >= 1`
/// - `archived_at`, when present, requires a non-`Active` state and
///   `created_at <= archived_at`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub record_id: String,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub doc_type: String,
    pub created_at: Timestamp,
    pub last_updated_at: Timestamp,
    pub creator_id: String,
    pub org_unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision_count: Option<u32>,
    pub archival_state: ArchivalState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archived_at: Option<Timestamp>,
}

impl RecordEntry {
    /// Checks the per-record invariants, returning the reason of the first
    /// violation. Folders may carry revision counts and archival states; the
    /// export decides (absence means "not applicable").
    pub fn validate(&self) -> Result<(), String> {
        if self.record_id.is_empty() {
            return Err("missing record_id".to_owned());
        }
        if self.created_at > self.last_updated_at {
            return Err("timestamp order: created_at > last_updated_at".to_owned());
        }
        if self.kind == RecordKind::Document && self.revision_count.is_none() {
            return Err("document without revision_count".to_owned());
        }
        if let Some(rev) = self.revision_count {
            if rev < 1 {
                return Err("revision_count must be >= 1".to_owned());
            }
        }
        if let Some(archived) = self.archived_at {
            if self.archival_state == ArchivalState::Active {
                return Err("archived_at present on Active record".to_owned());
            }
            if archived < self.created_at {
                return Err("archived_at precedes created_at".to_owned());
            }
        }
        Ok(())
    }

    pub fn is_document(&self) -> bool {
        self.kind == RecordKind::Document
    }

    pub fn is_folder(&self) -> bool {
        self.kind == RecordKind::Folder
    }

    /// The instant from which the record counts as archived, or `None` while
    /// it is active. When the export lacks an explicit `archived_at`, the
    /// archive time is approximated by `last_updated_at`; ingest reports flag
    /// that approximation.
    pub fn archival_effective_at(&self) -> Option<Timestamp> {
        match self.archival_state {
            ArchivalState::Active => None,
            _ => Some(self.archived_at.unwrap_or(self.last_updated_at)),
        }
    }

    /// Whether the record is in an archived state as observed at time `t`.
    pub fn archived_at_time(&self, t: Timestamp) -> bool {
        matches!(self.archival_effective_at(), Some(eff) if eff <= t)
    }
}

/// One calendar entry from an optional meetings/appointments export. Used by
/// the documentation-avoidance rule and the per-event documentation
/// indicator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub event_id: String,
    pub starts_at: Timestamp,
    #[serde(default)]
    pub event_type: String,
    pub organizer_id: String,
    pub org_unit: String,
    pub requires_documentation: bool,
}

/// A malformed input row: recorded and skipped, never fatal on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the input (header line counts in CSV).
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(created: i64, updated: i64) -> RecordEntry {
        RecordEntry {
            record_id: "d1".into(),
            kind: RecordKind::Document,
            parent_id: None,
            name: "a doc".into(),
            doc_type: "note".into(),
            created_at: Timestamp::from_secs(created),
            last_updated_at: Timestamp::from_secs(updated),
            creator_id: "u1".into(),
            org_unit: "A".into(),
            revision_count: Some(1),
            archival_state: ArchivalState::Active,
            archived_at: None,
        }
    }

    #[test]
    fn timestamp_order_is_enforced() {
        assert!(doc(10, 10).validate().is_ok());
        assert!(doc(10, 9).validate().unwrap_err().contains("timestamp order"));
    }

    #[test]
    fn documents_need_revisions() {
        let mut d = doc(0, 0);
        d.revision_count = None;
        assert!(d.validate().is_err());
        d.revision_count = Some(0);
        assert!(d.validate().is_err());
    }

    #[test]
    fn archived_at_requires_non_active_state() {
        let mut d = doc(100, 200);
        d.archived_at = Some(Timestamp::from_secs(150));
        assert!(d.validate().is_err());
        d.archival_state = ArchivalState::Archived;
        assert!(d.validate().is_ok());
        d.archived_at = Some(Timestamp::from_secs(50));
        assert!(d.validate().is_err());
    }

    #[test]
    fn archival_effective_time_falls_back_to_last_update() {
        let mut d = doc(100, 200);
        assert_eq!(d.archival_effective_at(), None);
        d.archival_state = ArchivalState::Archived;
        assert_eq!(d.archival_effective_at(), Some(Timestamp::from_secs(200)));
        d.archived_at = Some(Timestamp::from_secs(250));
        assert_eq!(d.archival_effective_at(), Some(Timestamp::from_secs(250)));
        assert!(!d.archived_at_time(Timestamp::from_secs(249)));
        assert!(d.archived_at_time(Timestamp::from_secs(250)));
    }

    #[test]
    fn state_parsing_accepts_loose_spellings() {
        assert_eq!(
            ArchivalState::parse("marked_for_destruction").unwrap(),
            ArchivalState::MarkedForDestruction
        );
        assert_eq!(ArchivalState::parse("ARCHIVED").unwrap(), ArchivalState::Archived);
        assert!(ArchivalState::parse("gone").is_err());
    }
}
