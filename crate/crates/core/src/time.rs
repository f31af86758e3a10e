//! Second-precision UTC timestamps.
//!
//! All record metadata carries timestamps truncated to whole seconds. We keep
//! them as raw epoch seconds internally (cheap ordering, cheap arithmetic) and
//! only go through `chrono` at the parse/format boundary and for calendar
//! bucketing.

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Seconds since the Unix epoch, UTC.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

pub const SECS_PER_MINUTE: i64 = 60;
pub const SECS_PER_HOUR: i64 = 3_600;
pub const SECS_PER_DAY: i64 = 86_400;

impl Timestamp {
    pub const fn from_secs(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn secs(self) -> i64 {
        self.0
    }

    /// Offset by a signed number of seconds.
    pub const fn plus_secs(self, secs: i64) -> Self {
        Timestamp(self.0 + secs)
    }

    /// Signed distance `self - other` in seconds.
    pub const fn secs_since(self, other: Timestamp) -> i64 {
        self.0 - other.0
    }

    /// Accepts either raw epoch seconds (`1577836800`) or an ISO-8601 /
    /// RFC 3339 timestamp with an explicit zone (`2020-01-01T00:00:00Z`).
    pub fn parse(text: &str) -> Result<Self, String> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err("empty timestamp".to_owned());
        }
        if let Ok(secs) = trimmed.parse::<i64>() {
            return Ok(Timestamp(secs));
        }
        DateTime::parse_from_rfc3339(trimmed)
            .map(|dt| Timestamp(dt.with_timezone(&Utc).timestamp()))
            .map_err(|e| format!("invalid timestamp {trimmed:?}: {e}"))
    }

    pub fn to_datetime(self) -> Option<DateTime<Utc>> {
        DateTime::from_timestamp(self.0, 0)
    }

    /// Start of the UTC calendar day containing this instant.
    pub fn day_start(self) -> Timestamp {
        Timestamp(self.0.div_euclid(SECS_PER_DAY) * SECS_PER_DAY)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_datetime() {
            Some(dt) => write!(f, "{}", dt.to_rfc3339_opts(SecondsFormat::Secs, true)),
            None => write!(f, "{}", self.0),
        }
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Timestamp({self})")
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

struct TimestampVisitor;

impl Visitor<'_> for TimestampVisitor {
    type Value = Timestamp;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("epoch seconds or an ISO-8601 timestamp with zone")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Timestamp, E> {
        Ok(Timestamp(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Timestamp, E> {
        i64::try_from(v)
            .map(Timestamp)
            .map_err(|_| E::custom("timestamp out of range"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Timestamp, E> {
        Timestamp::parse(v).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Timestamp, D::Error> {
        deserializer.deserialize_any(TimestampVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_epoch_and_rfc3339() {
        assert_eq!(Timestamp::parse("1577836800").unwrap().secs(), 1_577_836_800);
        assert_eq!(
            Timestamp::parse("2020-01-01T00:00:00Z").unwrap().secs(),
            1_577_836_800
        );
        // Zone offsets are normalized to UTC.
        assert_eq!(
            Timestamp::parse("2020-01-01T01:00:00+01:00").unwrap().secs(),
            1_577_836_800
        );
        assert!(Timestamp::parse("yesterday").is_err());
        assert!(Timestamp::parse("").is_err());
    }

    #[test]
    fn formats_as_utc_rfc3339() {
        let t = Timestamp::from_secs(1_577_836_800);
        assert_eq!(t.to_string(), "2020-01-01T00:00:00Z");
    }

    #[test]
    fn day_start_truncates() {
        let t = Timestamp::parse("2020-06-15T13:45:12Z").unwrap();
        assert_eq!(t.day_start().to_string(), "2020-06-15T00:00:00Z");
    }

    #[test]
    fn serde_accepts_both_forms() {
        let from_num: Timestamp = serde_json::from_str("1577836800").unwrap();
        let from_str: Timestamp = serde_json::from_str("\"2020-01-01T00:00:00Z\"").unwrap();
        assert_eq!(from_num, from_str);
        assert_eq!(
            serde_json::to_string(&from_num).unwrap(),
            "\"2020-01-01T00:00:00Z\""
        );
    }
}
