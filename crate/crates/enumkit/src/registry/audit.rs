//! Append-only audit log.
//!
//! Every state-mutating registry operation appends exactly one entry, and
//! denied attempts are recorded too (they are what the threat detector
//! looks for). Sequence numbers start at 1 and are gapless within a log;
//! tamper evidence comes from the registry's single-writer contract, not
//! from hash chaining.
//!
//! File format, one entry per line:
//! `seq<TAB>iso-timestamp<TAB>actor<TAB>action<TAB>digits<TAB>detail`

use crate::clock::Timestamp;
use crate::e164::E164Number;

/// Mutation record. `detail` is free text; entries about a registration
/// carry `of=<registrant>` so a scan can compare the acting party with
/// the registrant of record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub seq: u64,
    pub at: Timestamp,
    pub actor: String,
    pub action: String,
    pub number: E164Number,
    pub detail: String,
}

impl AuditEntry {
    /// The `of=` field, when present: the registrant of record at the
    /// time the entry was written.
    pub fn registrant_of_record(&self) -> Option<&str> {
        self.detail
            .split("; ")
            .find_map(|part| part.strip_prefix("of="))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditLog {
    entries: Vec<AuditEntry>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(
        &mut self,
        at: Timestamp,
        actor: &str,
        action: &str,
        number: &E164Number,
        detail: impl Into<String>,
    ) -> u64 {
        let seq = self.entries.len() as u64 + 1;
        self.entries.push(AuditEntry {
            seq,
            at,
            actor: sanitize(actor),
            action: sanitize(action),
            number: number.clone(),
            detail: sanitize(&detail.into()),
        });
        seq
    }

    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn last_seq(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                e.seq,
                e.at.to_iso8601(),
                e.actor,
                e.action,
                e.number.digits(),
                e.detail
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut log = AuditLog::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(6, '\t').collect();
            if fields.len() != 6 {
                return Err(format!("audit line {}: expected 6 tab-separated fields", index + 1));
            }
            let seq: u64 = fields[0]
                .parse()
                .map_err(|_| format!("audit line {}: bad seq {:?}", index + 1, fields[0]))?;
            if seq != log.entries.len() as u64 + 1 {
                return Err(format!(
                    "audit line {}: seq {seq} breaks the gapless sequence",
                    index + 1
                ));
            }
            let at = Timestamp::parse_iso8601(fields[1])
                .map_err(|e| format!("audit line {}: {e}", index + 1))?;
            let number = E164Number::new(fields[4])
                .map_err(|e| format!("audit line {}: {e}", index + 1))?;
            log.entries.push(AuditEntry {
                seq,
                at,
                actor: fields[2].to_string(),
                action: fields[3].to_string(),
                number,
                detail: fields[5].to_string(),
            });
        }
        Ok(log)
    }
}

// Tabs and newlines would break the line format.
fn sanitize(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(digits: &str) -> E164Number {
        E164Number::new(digits).unwrap()
    }

    #[test]
    fn sequences_are_gapless_from_one() {
        let mut log = AuditLog::new();
        assert_eq!(log.append(Timestamp::EPOCH, "a", "register", &n("1"), "x"), 1);
        assert_eq!(log.append(Timestamp::EPOCH, "b", "update", &n("1"), "y"), 2);
        for (i, e) in log.entries().iter().enumerate() {
            assert_eq!(e.seq, i as u64 + 1);
        }
    }

    #[test]
    fn round_trips_through_text() {
        let mut log = AuditLog::new();
        log.append(Timestamp::from_unix(1000), "seed", "authorize-cc", &n("1"), "provider=t1");
        log.append(
            Timestamp::from_unix(2000),
            "beta",
            "update",
            &n("12025550100"),
            "of=acme; authorized=false",
        );
        let text = log.serialize();
        let parsed = AuditLog::parse(&text).unwrap();
        assert_eq!(parsed, log);
        assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn parse_rejects_gaps() {
        let err = AuditLog::parse("2\t1970-01-01T00:00:00Z\ta\tx\t1\td\n").unwrap_err();
        assert!(err.contains("gapless"));
    }

    #[test]
    fn detail_is_sanitized_and_of_field_extracted() {
        let mut log = AuditLog::new();
        log.append(Timestamp::EPOCH, "x", "update", &n("1"), "of=joe; note=a\tb");
        let entry = &log.entries()[0];
        assert!(!entry.detail.contains('\t'));
        assert_eq!(entry.registrant_of_record(), Some("joe"));
    }
}
