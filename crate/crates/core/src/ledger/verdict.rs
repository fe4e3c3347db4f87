use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::LedgerError;

/// How far ahead of the local clock a verdict timestamp may be.
pub const CLOCK_SKEW_SECS: i64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Yes,
    No,
    Maybe,
}

impl Status {
    pub const ALL: [Status; 3] = [Status::Yes, Status::No, Status::Maybe];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Yes => "yes",
            Status::No => "no",
            Status::Maybe => "maybe",
        }
    }

    /// Tie-break strength at equal timestamps: the more conservative
    /// verdict wins, `no` over `maybe` over `yes`.
    pub fn rank(self) -> u8 {
        match self {
            Status::Yes => 0,
            Status::Maybe => 1,
            Status::No => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = LedgerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Status::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| LedgerError::InvalidStatus(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub user: String,
    #[serde(with = "ts_serde")]
    pub timestamp: DateTime<Utc>,
    pub note: String,
}

impl Verdict {
    /// A verdict stamped with the current time, truncated to seconds.
    pub fn now(status: Status, user: &str, note: &str) -> Self {
        Verdict::at(status, user, note, Utc::now())
    }

    pub fn at(status: Status, user: &str, note: &str, timestamp: DateTime<Utc>) -> Self {
        Verdict {
            status,
            user: user.to_string(),
            timestamp: truncate(timestamp),
            note: note.to_string(),
        }
    }

    /// Rejects timestamps too far in the future for the local clock.
    pub fn validate(&self) -> Result<(), LedgerError> {
        let limit = Utc::now() + chrono::Duration::seconds(CLOCK_SKEW_SECS);
        if self.timestamp > limit {
            return Err(LedgerError::FutureTimestamp(format_timestamp(&self.timestamp)));
        }
        Ok(())
    }
}

fn truncate(t: DateTime<Utc>) -> DateTime<Utc> {
    t.with_nanosecond(0).expect("zero nanoseconds is valid")
}

/// `2024-05-01T10:00:00Z`.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Any RFC 3339 instant, converted to UTC and truncated to seconds.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, LedgerError> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| truncate(t.with_timezone(&Utc)))
        .map_err(|e| LedgerError::BadTimestamp(format!("{s:?}: {e}")))
}

mod ts_serde {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_timestamp(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_parsing() {
        assert_eq!("no".parse::<Status>().unwrap(), Status::No);
        assert_eq!("Maybe".parse::<Status>().unwrap(), Status::Maybe);
        assert!(matches!("bad".parse::<Status>(), Err(LedgerError::InvalidStatus(_))));
    }

    #[test]
    fn timestamps_are_utc_seconds() {
        let t = parse_timestamp("2024-05-01T12:00:00.750+02:00").unwrap();
        assert_eq!(format_timestamp(&t), "2024-05-01T10:00:00Z");
        assert!(parse_timestamp("yesterday").is_err());
    }

    #[test]
    fn future_rejected() {
        let v = Verdict::at(Status::Yes, "a", "", Utc::now() + chrono::Duration::seconds(3600));
        assert!(matches!(v.validate(), Err(LedgerError::FutureTimestamp(_))));
        let v = Verdict::at(Status::Yes, "a", "", Utc::now() + chrono::Duration::seconds(60));
        assert!(v.validate().is_ok());
    }
}
