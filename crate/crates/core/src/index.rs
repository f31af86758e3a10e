//! The immutable repository index.
//!
//! [`RepositoryIndex::build`] validates a record set once and materializes the
//! lookup structures every detector and indicator needs: the folder tree,
//! per-creator document timelines, per-unit membership and a global
//! creation-ordered view for existence queries. After construction the index
//! never changes, so downstream passes can share it freely across threads.
//!
//! Determinism: records are stored sorted by `record_id`, and every derived
//! list is ordered by `(created_at, record_id)`. Two builds from the same
//! record set (in any input order) produce identical indexes.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{RecordEntry, RecordKind, RowError};
use crate::parse::ParseOutcome;
use crate::time::Timestamp;

/// Id of the synthetic root folder that adopts records whose `parent_id`
/// cannot be resolved. It is not a record itself; it only exists as a query
/// target and in build reports.
pub const ORPHAN_ROOT_ID: &str = "_orphans";

/// Immutable, query-oriented view over a validated record set.
#[derive(Debug, Clone, PartialEq)]
pub struct RepositoryIndex {
    /// All records, sorted by `record_id`.
    records: Vec<RecordEntry>,
    id_to_idx: HashMap<String, u32>,
    /// Resolved parent (folder) of each record.
    parent: Vec<Option<u32>>,
    /// Child lists per record (non-empty only for folders), ordered by
    /// `(created_at, record_id)`.
    children: Vec<Vec<u32>>,
    /// Number of ancestors; roots and orphans sit at depth 0.
    depth: Vec<u32>,
    /// Records whose parent reference could not be resolved, ordered by id.
    orphans: Vec<u32>,
    /// Document indices per creator, ordered by `(created_at, record_id)`.
    user_docs: BTreeMap<String, Vec<u32>>,
    /// Record indices per exact org unit, ordered by `(created_at, record_id)`.
    unit_members: BTreeMap<String, Vec<u32>>,
    /// All record indices ordered by `(created_at, record_id)`.
    created_order: Vec<u32>,
    /// `(min created_at, max last_updated_at)`; `None` for an empty set.
    time_bounds: Option<(Timestamp, Timestamp)>,
}

/// Ingest summary: what was parsed, what was dropped, and which
/// approximations are in effect for the archived-time semantics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildReport {
    pub parsed: usize,
    pub rejected: usize,
    pub orphaned: usize,
    /// Records in a non-active state without an explicit `archived_at`; their
    /// archive time is approximated by `last_updated_at`.
    pub archived_at_approximated: usize,
    /// First few orphaned record ids, for triage.
    pub orphaned_sample: Vec<String>,
    /// First few row errors from the parse stage.
    pub row_errors: Vec<RowError>,
}

const REPORT_SAMPLE_LIMIT: usize = 50;

/// Existence query result: the records created on or before the query time.
#[derive(Debug)]
pub struct ExistingAt<'a> {
    pub records: Vec<&'a RecordEntry>,
    /// Set when the requested unit matches nothing in the index; the result
    /// is empty but this is a warning, not an error.
    pub unknown_unit: bool,
}

impl ExistingAt<'_> {
    pub fn count(&self) -> usize {
        self.records.len()
    }
}

impl RepositoryIndex {
    /// Validates and indexes a record set.
    ///
    /// Fatal conditions: duplicate record ids and parent cycles. Dangling or
    /// non-folder parent references are tolerated: those records join the
    /// synthetic [`ORPHAN_ROOT_ID`] root and are counted in the report.
    pub fn build(mut records: Vec<RecordEntry>) -> Result<(Self, BuildReport)> {
        records.sort_by(|a, b| a.record_id.cmp(&b.record_id));

        let duplicates: Vec<&str> = records
            .windows(2)
            .filter(|w| w[0].record_id == w[1].record_id)
            .map(|w| w[0].record_id.as_str())
            .collect();
        if !duplicates.is_empty() {
            let mut sample: Vec<&str> = duplicates;
            sample.dedup();
            let shown = sample.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
            return Err(Error::Validation(format!(
                "{} duplicate record id(s): {shown}",
                sample.len()
            )));
        }

        let n = records.len();
        let id_to_idx: HashMap<String, u32> = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.record_id.clone(), i as u32))
            .collect();

        // Resolve raw parent pointers; kind checks come after cycle detection
        // so that a self-referencing document still reports as a cycle.
        let raw_parent: Vec<Option<u32>> = records
            .iter()
            .map(|r| r.parent_id.as_deref().and_then(|p| id_to_idx.get(p).copied()))
            .collect();
        detect_cycles(&records, &raw_parent)?;

        let mut parent = vec![None; n];
        let mut orphans = Vec::new();
        for i in 0..n {
            match raw_parent[i] {
                Some(p) if records[p as usize].kind == RecordKind::Folder => {
                    parent[i] = Some(p);
                }
                Some(_) => orphans.push(i as u32), // parent exists but is not a folder
                None if records[i].parent_id.is_some() => orphans.push(i as u32),
                None => {} // proper root
            }
        }

        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        for i in 0..n {
            if let Some(p) = parent[i] {
                children[p as usize].push(i as u32);
            }
        }
        let by_creation = |records: &[RecordEntry], a: u32, b: u32| {
            let ra = &records[a as usize];
            let rb = &records[b as usize];
            (ra.created_at, &ra.record_id).cmp(&(rb.created_at, &rb.record_id))
        };
        for list in &mut children {
            list.sort_by(|&a, &b| by_creation(&records, a, b));
        }

        let mut depth = vec![0u32; n];
        for i in 0..n {
            let mut d = 0;
            let mut cursor = parent[i];
            while let Some(p) = cursor {
                d += 1;
                cursor = parent[p as usize];
            }
            depth[i] = d;
        }

        let mut user_docs: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        let mut unit_members: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.is_document() {
                user_docs.entry(r.creator_id.clone()).or_default().push(i as u32);
            }
            unit_members.entry(r.org_unit.clone()).or_default().push(i as u32);
        }
        for list in user_docs.values_mut().chain(unit_members.values_mut()) {
            list.sort_by(|&a, &b| by_creation(&records, a, b));
        }

        let mut created_order: Vec<u32> = (0..n as u32).collect();
        created_order.sort_by(|&a, &b| by_creation(&records, a, b));

        let time_bounds = if records.is_empty() {
            None
        } else {
            let min_created = records.iter().map(|r| r.created_at).min().unwrap();
            let max_updated = records.iter().map(|r| r.last_updated_at).max().unwrap();
            Some((min_created, max_updated))
        };

        let archived_at_approximated = records
            .iter()
            .filter(|r| r.archival_state != crate::model::ArchivalState::Active && r.archived_at.is_none())
            .count();

        let report = BuildReport {
            parsed: n,
            rejected: 0,
            orphaned: orphans.len(),
            archived_at_approximated,
            orphaned_sample: orphans
                .iter()
                .take(REPORT_SAMPLE_LIMIT)
                .map(|&i| records[i as usize].record_id.clone())
                .collect(),
            row_errors: Vec::new(),
        };

        Ok((
            RepositoryIndex {
                records,
                id_to_idx,
                parent,
                children,
                depth,
                orphans,
                user_docs,
                unit_members,
                created_order,
                time_bounds,
            },
            report,
        ))
    }

    /// Parse outcome in, index plus combined report out.
    pub fn from_parse(outcome: ParseOutcome) -> Result<(Self, BuildReport)> {
        let rejected = outcome.errors.len();
        let (index, mut report) = Self::build(outcome.records)?;
        report.rejected = rejected;
        report.row_errors = outcome.errors.into_iter().take(REPORT_SAMPLE_LIMIT).collect();
        Ok((index, report))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// All records, sorted by `record_id`.
    pub fn records(&self) -> &[RecordEntry] {
        &self.records
    }

    pub fn get(&self, record_id: &str) -> Option<&RecordEntry> {
        self.id_to_idx.get(record_id).map(|&i| &self.records[i as usize])
    }

    pub(crate) fn idx_of(&self, record_id: &str) -> Option<u32> {
        self.id_to_idx.get(record_id).copied()
    }

    pub(crate) fn entry(&self, idx: u32) -> &RecordEntry {
        &self.records[idx as usize]
    }

    pub(crate) fn parent_idx(&self, idx: u32) -> Option<u32> {
        self.parent[idx as usize]
    }

    pub(crate) fn children_idx(&self, idx: u32) -> &[u32] {
        &self.children[idx as usize]
    }

    pub(crate) fn depth_of(&self, idx: u32) -> u32 {
        self.depth[idx as usize]
    }

    /// Child records of a folder, ordered by creation time. The synthetic
    /// [`ORPHAN_ROOT_ID`] yields the orphan list.
    pub fn children_of(&self, folder_id: &str) -> Option<Vec<&RecordEntry>> {
        if folder_id == ORPHAN_ROOT_ID {
            return Some(self.orphans.iter().map(|&i| self.entry(i)).collect());
        }
        let idx = self.idx_of(folder_id)?;
        Some(self.children_idx(idx).iter().map(|&i| self.entry(i)).collect())
    }

    /// Ancestor chain of a record, nearest parent first.
    pub fn ancestors(&self, record_id: &str) -> Vec<&RecordEntry> {
        let Some(mut idx) = self.idx_of(record_id) else {
            return Vec::new();
        };
        let mut chain = Vec::new();
        while let Some(p) = self.parent_idx(idx) {
            chain.push(self.entry(p));
            idx = p;
        }
        chain
    }

    pub fn orphan_ids(&self) -> Vec<&str> {
        self.orphans.iter().map(|&i| self.entry(i).record_id.as_str()).collect()
    }

    /// Creators that authored at least one document, sorted.
    pub fn creators(&self) -> impl Iterator<Item = &str> {
        self.user_docs.keys().map(String::as_str)
    }

    /// A creator's documents ordered by creation time.
    pub fn docs_by_creator(&self, creator_id: &str) -> &[u32] {
        self.user_docs.get(creator_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn user_doc_lists(&self) -> impl Iterator<Item = (&str, &[u32])> {
        self.user_docs.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Exact org units present in the data, sorted.
    pub fn units(&self) -> impl Iterator<Item = &str> {
        self.unit_members.keys().map(String::as_str)
    }

    pub fn has_unit(&self, unit: &str) -> bool {
        let prefix = format!("{unit}/");
        self.unit_members
            .keys()
            .any(|k| k == unit || k.starts_with(&prefix))
    }

    /// Member lists of the unit subtree (`unit` itself plus `unit/...`), or
    /// every unit when `unit` is `None`. Each list is creation-ordered.
    pub(crate) fn subtree_member_lists(&self, unit: Option<&str>) -> Vec<&[u32]> {
        match unit {
            None => self.unit_members.values().map(Vec::as_slice).collect(),
            Some(u) => {
                let prefix = format!("{u}/");
                self.unit_members
                    .iter()
                    .filter(|(k, _)| k.as_str() == u || k.starts_with(&prefix))
                    .map(|(_, v)| v.as_slice())
                    .collect()
            }
        }
    }

    /// Whether `unit` (or the whole index for `None`) contains the unit of a
    /// given record, with subtree semantics.
    pub fn unit_covers(containing: Option<&str>, record_unit: &str) -> bool {
        match containing {
            None => true,
            Some(u) => record_unit == u || record_unit.strip_prefix(u).is_some_and(|rest| rest.starts_with('/')),
        }
    }

    /// `(min created_at, max last_updated_at)` over all records.
    pub fn time_bounds(&self) -> Option<(Timestamp, Timestamp)> {
        self.time_bounds
    }

    /// Count of records with `created_at <= t`, optionally restricted to a
    /// unit subtree. Runs on the precomputed creation orders.
    pub fn count_existing_at(&self, t: Timestamp, unit: Option<&str>) -> usize {
        match unit {
            None => self.count_in_creation_order(&self.created_order, t),
            Some(_) => self
                .subtree_member_lists(unit)
                .iter()
                .map(|list| self.count_in_creation_order(list, t))
                .sum(),
        }
    }

    fn count_in_creation_order(&self, list: &[u32], t: Timestamp) -> usize {
        list.partition_point(|&i| self.entry(i).created_at <= t)
    }

    /// The records with `created_at <= t`, in creation order.
    pub fn existing_at(&self, t: Timestamp, unit: Option<&str>) -> ExistingAt<'_> {
        let unknown_unit = matches!(unit, Some(u) if !self.has_unit(u));
        let mut indices: Vec<u32> = Vec::new();
        match unit {
            None => {
                let count = self.count_in_creation_order(&self.created_order, t);
                indices.extend_from_slice(&self.created_order[..count]);
            }
            Some(_) => {
                for list in self.subtree_member_lists(unit) {
                    let count = self.count_in_creation_order(list, t);
                    indices.extend_from_slice(&list[..count]);
                }
                indices.sort_by(|&a, &b| {
                    let ra = self.entry(a);
                    let rb = self.entry(b);
                    (ra.created_at, &ra.record_id).cmp(&(rb.created_at, &rb.record_id))
                });
            }
        }
        ExistingAt {
            records: indices.iter().map(|&i| self.entry(i)).collect(),
            unknown_unit,
        }
    }
}

fn detect_cycles(records: &[RecordEntry], raw_parent: &[Option<u32>]) -> Result<()> {
    // Parent pointers form a functional graph; walk each chain once with
    // three-state marking.
    const WHITE: u8 = 0;
    const IN_PROGRESS: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![WHITE; records.len()];
    for start in 0..records.len() as u32 {
        if state[start as usize] != WHITE {
            continue;
        }
        let mut path = Vec::new();
        let mut cursor = Some(start);
        while let Some(node) = cursor {
            match state[node as usize] {
                DONE => break,
                IN_PROGRESS => {
                    let cycle_start = path.iter().position(|&p| p == node).unwrap_or(0);
                    let ids: Vec<&str> = path[cycle_start..]
                        .iter()
                        .map(|&i: &u32| records[i as usize].record_id.as_str())
                        .collect();
                    return Err(Error::Validation(format!(
                        "parent cycle: {}",
                        ids.join(" -> ")
                    )));
                }
                _ => {
                    state[node as usize] = IN_PROGRESS;
                    path.push(node);
                    cursor = raw_parent[node as usize];
                }
            }
        }
        for visited in path {
            state[visited as usize] = DONE;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArchivalState;

    pub(crate) fn record(id: &str, kind: RecordKind, parent: Option<&str>, created: i64) -> RecordEntry {
        RecordEntry {
            record_id: id.to_owned(),
            kind,
            parent_id: parent.map(str::to_owned),
            name: format!("record {id}"),
            doc_type: if kind == RecordKind::Document { "note".into() } else { String::new() },
            created_at: Timestamp::from_secs(created),
            last_updated_at: Timestamp::from_secs(created),
            creator_id: "u1".to_owned(),
            org_unit: "A".to_owned(),
            revision_count: (kind == RecordKind::Document).then_some(1),
            archival_state: ArchivalState::Active,
            archived_at: None,
        }
    }

    #[test]
    fn folder_and_child() {
        let records = vec![
            record("f1", RecordKind::Folder, None, 0),
            record("d1", RecordKind::Document, Some("f1"), 10),
        ];
        let (index, report) = RepositoryIndex::build(records).unwrap();
        let children = index.children_of("f1").unwrap();
        assert_eq!(children.len(), 1);
        assert_eq!(children[0].record_id, "d1");
        assert_eq!(report.orphaned, 0);
        assert_eq!(index.depth_of(index.idx_of("d1").unwrap()), 1);
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let records = vec![record("d1", RecordKind::Document, Some("d1"), 0)];
        let err = RepositoryIndex::build(records).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("cycle")), "{err}");
    }

    #[test]
    fn two_folder_cycle_is_reported_with_ids() {
        let records = vec![
            record("f1", RecordKind::Folder, Some("f2"), 0),
            record("f2", RecordKind::Folder, Some("f1"), 0),
        ];
        let err = RepositoryIndex::build(records).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("f1") && message.contains("f2"), "{message}");
    }

    #[test]
    fn duplicate_ids_are_fatal() {
        let records = vec![
            record("d1", RecordKind::Document, None, 0),
            record("d1", RecordKind::Document, None, 5),
        ];
        let err = RepositoryIndex::build(records).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("d1")));
    }

    #[test]
    fn user_timeline_is_sorted() {
        let mut records = vec![
            record("d2", RecordKind::Document, None, 20),
            record("d1", RecordKind::Document, None, 10),
        ];
        records[0].creator_id = "u9".into();
        records[1].creator_id = "u9".into();
        let (index, _) = RepositoryIndex::build(records).unwrap();
        let times: Vec<i64> = index
            .docs_by_creator("u9")
            .iter()
            .map(|&i| index.entry(i).created_at.secs())
            .collect();
        assert_eq!(times, vec![10, 20]);
    }

    #[test]
    fn dangling_parent_goes_to_orphan_root() {
        let records = vec![record("d1", RecordKind::Document, Some("missing"), 0)];
        let (index, report) = RepositoryIndex::build(records).unwrap();
        assert_eq!(report.orphaned, 1);
        assert_eq!(index.orphan_ids(), vec!["d1"]);
        assert_eq!(index.children_of(ORPHAN_ROOT_ID).unwrap().len(), 1);
        assert_eq!(index.depth_of(index.idx_of("d1").unwrap()), 0);
    }

    #[test]
    fn document_parent_is_orphaned_not_fatal() {
        let records = vec![
            record("d1", RecordKind::Document, None, 0),
            record("d2", RecordKind::Document, Some("d1"), 5),
        ];
        let (index, report) = RepositoryIndex::build(records).unwrap();
        assert_eq!(report.orphaned, 1);
        assert_eq!(index.orphan_ids(), vec!["d2"]);
    }

    #[test]
    fn existence_counts_match_linear_scan() {
        let mut records = Vec::new();
        for i in 0..40 {
            let mut r = record(&format!("d{i:02}"), RecordKind::Document, None, (i * 7) % 100);
            r.org_unit = if i % 3 == 0 { "A/A1".into() } else { "B".into() };
            records.push(r);
        }
        let (index, _) = RepositoryIndex::build(records.clone()).unwrap();
        for t in [-1i64, 0, 13, 50, 99, 100, 200] {
            let t = Timestamp::from_secs(t);
            for unit in [None, Some("A"), Some("A/A1"), Some("B"), Some("nope")] {
                let expected = records
                    .iter()
                    .filter(|r| r.created_at <= t && RepositoryIndex::unit_covers(unit, &r.org_unit))
                    .count();
                assert_eq!(index.count_existing_at(t, unit), expected, "t={t} unit={unit:?}");
                assert_eq!(index.existing_at(t, unit).count(), expected);
            }
        }
        assert!(index.existing_at(Timestamp::from_secs(0), Some("nope")).unknown_unit);
        assert!(!index.existing_at(Timestamp::from_secs(0), Some("A")).unknown_unit);
    }

    #[test]
    fn unit_covers_uses_path_boundaries() {
        assert!(RepositoryIndex::unit_covers(Some("A"), "A"));
        assert!(RepositoryIndex::unit_covers(Some("A"), "A/A1"));
        assert!(!RepositoryIndex::unit_covers(Some("A"), "AB"));
        assert!(RepositoryIndex::unit_covers(None, "anything"));
    }
}
