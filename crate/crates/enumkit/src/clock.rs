//! Simulated time.
//!
//! Every operation that needs a notion of "now" takes a [`Timestamp`]
//! argument instead of reading the system clock, so TTL and lifecycle
//! behaviour is fully deterministic under test. The only place wall-clock
//! time enters the system is [`Timestamp::now_system`], used at the CLI
//! edge.

use std::fmt;

use thiserror::Error;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimestampError {
    #[error("malformed timestamp {0:?}, expected YYYY-MM-DDThh:mm:ssZ")]
    Malformed(String),
    #[error("timestamp field out of range in {0:?}")]
    OutOfRange(String),
}

impl Timestamp {
    pub const EPOCH: Timestamp = Timestamp(0);

    pub fn from_unix(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub fn unix(self) -> i64 {
        self.0
    }

    pub fn plus_seconds(self, secs: i64) -> Self {
        Timestamp(self.0 + secs)
    }

    pub fn plus_days(self, days: i64) -> Self {
        Timestamp(self.0 + days * SECONDS_PER_DAY)
    }

    /// Wall-clock adapter for the CLI; library code never calls this.
    pub fn now_system() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        Timestamp(secs)
    }

    /// Renders as `YYYY-MM-DDThh:mm:ssZ`.
    pub fn to_iso8601(self) -> String {
        let days = self.0.div_euclid(SECONDS_PER_DAY);
        let mut rem = self.0.rem_euclid(SECONDS_PER_DAY);
        let (y, m, d) = civil_from_days(days);
        let h = rem / 3600;
        rem %= 3600;
        format!("{y:04}-{m:02}-{d:02}T{h:02}:{:02}:{:02}Z", rem / 60, rem % 60)
    }

    pub fn parse_iso8601(s: &str) -> Result<Self, TimestampError> {
        let bytes = s.as_bytes();
        if bytes.len() != 20
            || bytes[4] != b'-'
            || bytes[7] != b'-'
            || bytes[10] != b'T'
            || bytes[13] != b':'
            || bytes[16] != b':'
            || bytes[19] != b'Z'
        {
            return Err(TimestampError::Malformed(s.to_string()));
        }
        let num = |range: std::ops::Range<usize>| -> Result<i64, TimestampError> {
            s[range]
                .parse::<i64>()
                .map_err(|_| TimestampError::Malformed(s.to_string()))
        };
        let (y, m, d) = (num(0..4)?, num(5..7)?, num(8..10)?);
        let (h, mi, sec) = (num(11..13)?, num(14..16)?, num(17..19)?);
        if !(1..=12).contains(&m)
            || !(1..=31).contains(&d)
            || !(0..=23).contains(&h)
            || !(0..=59).contains(&mi)
            || !(0..=59).contains(&sec)
        {
            return Err(TimestampError::OutOfRange(s.to_string()));
        }
        let days = days_from_civil(y, m as u8, d as u8);
        Ok(Timestamp(days * SECONDS_PER_DAY + h * 3600 + mi * 60 + sec))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso8601())
    }
}

// Proleptic-Gregorian day arithmetic (Howard Hinnant's algorithms).
fn days_from_civil(y: i64, m: u8, d: u8) -> i64 {
    let y = y - i64::from(m <= 2);
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let doy = (153 * (i64::from(m) + if m > 2 { -3 } else { 9 }) + 2) / 5 + i64::from(d) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u8, u8) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = mp + if mp < 10 { 3 } else { -9 };
    (y + i64::from(m <= 2), m as u8, d as u8)
}
