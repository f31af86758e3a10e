//! Detection thresholds and rule sets.
//!
//! The defaults encode the operational constants the rules were designed
//! around: a batch is 50+ documents inside a 30-minute window, a new batch
//! needs a 30-minute gap, and a record counts as abandoned after a year of
//! inactivity. Structure and naming rule sets ship empty because they are
//! organization-specific; detection of those patterns only activates once a
//! config supplies rules.

use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{SECS_PER_DAY, SECS_PER_MINUTE};

/// How calendar events are linked to the documents that answer them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalendarMatchScope {
    /// A document by the event's organizer counts.
    #[default]
    Organizer,
    /// Any document from the event's org unit subtree counts.
    OrgUnit,
}

/// A predicate a record name must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NamingRule {
    /// Name must be at least `min` code points long.
    MinLength { min: usize },
    /// Name must contain at least `min` purely alphabetic words.
    MinAlphaWords { min: usize },
    /// Name must contain the given token (case-insensitive).
    RequiredToken { token: String },
    /// Name must match the regex.
    Pattern { regex: String },
}

impl NamingRule {
    pub fn label(&self) -> String {
        match self {
            NamingRule::MinLength { min } => format!("min-length:{min}"),
            NamingRule::MinAlphaWords { min } => format!("min-alpha-words:{min}"),
            NamingRule::RequiredToken { token } => format!("required-token:{token}"),
            NamingRule::Pattern { regex } => format!("pattern:{regex}"),
        }
    }
}

/// A predicate on a record's placement in the folder tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StructureRule {
    /// Records may sit at most `max` ancestors deep.
    MaxDepth { max: u32 },
    /// A folder holding more than `max` direct child documents is a
    /// catch-all; every document inside it is flagged.
    MaxDocsPerFolder { max: usize },
    /// Documents of `doc_type` must have an ancestor folder whose name
    /// matches the regex.
    Placement { doc_type: String, ancestor_pattern: String },
}

impl StructureRule {
    pub fn label(&self) -> String {
        match self {
            StructureRule::MaxDepth { max } => format!("max-depth:{max}"),
            StructureRule::MaxDocsPerFolder { max } => format!("catch-all:{max}"),
            StructureRule::Placement { doc_type, ancestor_pattern } => {
                format!("placement:{doc_type}:{ancestor_pattern}")
            }
        }
    }
}

/// All detection thresholds, exclusion lists and optional-rule parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Minimum documents for a batch.
    pub batch_min_docs: u32,
    /// Window (seconds) in which `batch_min_docs` documents must fall.
    pub batch_window_secs: i64,
    /// Inactivity gap (seconds) that terminates a batch session.
    pub batch_gap_secs: i64,
    /// Idle time (seconds) after which an unarchived record is abandoned.
    pub abandonment_secs: i64,
    /// Document types excluded from version metrics (types bound to a single
    /// version, e.g. stored email).
    pub single_version_excluded_types: BTreeSet<String>,
    /// Abbreviations that need no explanation.
    pub approved_abbreviations: BTreeSet<String>,
    pub naming_rules: Vec<NamingRule>,
    pub structure_rules: Vec<StructureRule>,
    /// How long (seconds) after a calendar event documentation may appear.
    pub calendar_link_window_secs: i64,
    pub calendar_match_scope: CalendarMatchScope,
    /// Tolerance (seconds) for calendar events outside the record time range.
    pub calendar_slack_secs: i64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            batch_min_docs: 50,
            batch_window_secs: 30 * SECS_PER_MINUTE,
            batch_gap_secs: 30 * SECS_PER_MINUTE,
            abandonment_secs: 365 * SECS_PER_DAY,
            single_version_excluded_types: BTreeSet::new(),
            approved_abbreviations: BTreeSet::new(),
            naming_rules: Vec::new(),
            structure_rules: Vec::new(),
            calendar_link_window_secs: 14 * SECS_PER_DAY,
            calendar_match_scope: CalendarMatchScope::Organizer,
            calendar_slack_secs: 365 * SECS_PER_DAY,
        }
    }
}

impl RuleConfig {
    /// Loads a TOML config. Unknown keys are rejected so typos do not
    /// silently fall back to defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RuleConfigToml =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        let config: RuleConfig = config.into();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_min_docs < 2 {
            return Err(Error::Config("batch_min_docs must be >= 2".into()));
        }
        for (value, name) in [
            (self.batch_window_secs, "batch_window"),
            (self.batch_gap_secs, "batch_gap"),
            (self.abandonment_secs, "abandonment_period"),
            (self.calendar_link_window_secs, "calendar_link_window"),
        ] {
            if value <= 0 {
                return Err(Error::Config(format!("{name} must be a positive duration")));
            }
        }
        if self.calendar_slack_secs < 0 {
            return Err(Error::Config("calendar_slack must not be negative".into()));
        }
        for rule in &self.naming_rules {
            match rule {
                NamingRule::Pattern { regex } => {
                    Regex::new(regex)
                        .map_err(|e| Error::Config(format!("naming rule regex {regex:?}: {e}")))?;
                }
                NamingRule::MinLength { min } | NamingRule::MinAlphaWords { min } => {
                    if *min == 0 {
                        return Err(Error::Config(format!(
                            "naming rule {} needs min >= 1",
                            rule.label()
                        )));
                    }
                }
                NamingRule::RequiredToken { token } => {
                    if token.is_empty() {
                        return Err(Error::Config("required-token rule with empty token".into()));
                    }
                }
            }
        }
        for rule in &self.structure_rules {
            if let StructureRule::Placement { ancestor_pattern, .. } = rule {
                Regex::new(ancestor_pattern).map_err(|e| {
                    Error::Config(format!("placement rule regex {ancestor_pattern:?}: {e}"))
                })?;
            }
        }
        Ok(())
    }
}

/// File-facing schema: durations in minutes/days rather than seconds.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RuleConfigToml {
    batch_min_docs: Option<u32>,
    batch_window_mins: Option<i64>,
    batch_gap_mins: Option<i64>,
    abandonment_days: Option<i64>,
    single_version_excluded_types: Option<Vec<String>>,
    approved_abbreviations: Option<Vec<String>>,
    naming_rules: Option<Vec<NamingRule>>,
    structure_rules: Option<Vec<StructureRule>>,
    calendar_link_window_days: Option<i64>,
    calendar_match_scope: Option<CalendarMatchScope>,
    calendar_slack_days: Option<i64>,
}

impl From<RuleConfigToml> for RuleConfig {
    fn from(file: RuleConfigToml) -> Self {
        let defaults = RuleConfig::default();
        RuleConfig {
            batch_min_docs: file.batch_min_docs.unwrap_or(defaults.batch_min_docs),
            batch_window_secs: file
                .batch_window_mins
                .map(|m| m * SECS_PER_MINUTE)
                .unwrap_or(defaults.batch_window_secs),
            batch_gap_secs: file
                .batch_gap_mins
                .map(|m| m * SECS_PER_MINUTE)
                .unwrap_or(defaults.batch_gap_secs),
            abandonment_secs: file
                .abandonment_days
                .map(|d| d * SECS_PER_DAY)
                .unwrap_or(defaults.abandonment_secs),
            single_version_excluded_types: file
                .single_version_excluded_types
                .map(|v| v.into_iter().collect())
                .unwrap_or(defaults.single_version_excluded_types),
            approved_abbreviations: file
                .approved_abbreviations
                .map(|v| v.into_iter().collect())
                .unwrap_or(defaults.approved_abbreviations),
            naming_rules: file.naming_rules.unwrap_or(defaults.naming_rules),
            structure_rules: file.structure_rules.unwrap_or(defaults.structure_rules),
            calendar_link_window_secs: file
                .calendar_link_window_days
                .map(|d| d * SECS_PER_DAY)
                .unwrap_or(defaults.calendar_link_window_secs),
            calendar_match_scope: file
                .calendar_match_scope
                .unwrap_or(defaults.calendar_match_scope),
            calendar_slack_secs: file
                .calendar_slack_days
                .map(|d| d * SECS_PER_DAY)
                .unwrap_or(defaults.calendar_slack_secs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_operational_constants() {
        let config = RuleConfig::default();
        assert_eq!(config.batch_min_docs, 50);
        assert_eq!(config.batch_window_secs, 1800);
        assert_eq!(config.batch_gap_secs, 1800);
        assert_eq!(config.abandonment_secs, 365 * 86_400);
        assert!(config.validate().is_ok());
        assert!(config.naming_rules.is_empty());
        assert!(config.structure_rules.is_empty());
    }

    #[test]
    fn toml_overrides_and_unit_conversion() {
        let config = RuleConfig::from_toml(
            r#"
            batch_min_docs = 10
            batch_window_mins = 5
            abandonment_days = 30
            approved_abbreviations = ["EDMS", "FOI"]

            [[naming_rules]]
            kind = "min-alpha-words"
            min = 2

            [[structure_rules]]
            kind = "max-depth"
            max = 6
            "#,
        )
        .unwrap();
        assert_eq!(config.batch_min_docs, 10);
        assert_eq!(config.batch_window_secs, 300);
        assert_eq!(config.batch_gap_secs, 1800); // untouched default
        assert_eq!(config.abandonment_secs, 30 * 86_400);
        assert!(config.approved_abbreviations.contains("FOI"));
        assert_eq!(config.naming_rules.len(), 1);
        assert_eq!(config.structure_rules.len(), 1);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RuleConfig::from_toml("batch_min_docs = 1").is_err());
        assert!(RuleConfig::from_toml("batch_window_mins = 0").is_err());
        assert!(RuleConfig::from_toml("nonsense_key = 3").is_err());
        let bad_regex = r#"
            [[naming_rules]]
            kind = "pattern"
            regex = "("
        "#;
        assert!(RuleConfig::from_toml(bad_regex).is_err());
    }
}
