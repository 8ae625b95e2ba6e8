//! Master-file zone import/export for NAPTR data.
//!
//! A zone file is a sequence of `$ORIGIN` sections, each optionally
//! followed by `$TTL`, then NAPTR record lines. Parsing accepts the
//! directive spelled either `$ORIGIN name` or `$ ORIGIN name` and any
//! letter case; export always emits the canonical form:
//!
//! ```text
//! $ORIGIN 2.1.2.1.5.5.5.2.0.2.1.1.e164.foo
//! $TTL 3600
//! IN NAPTR 102 10 "u" "tel+E2U" "!^.*$!tel:+112025551212!" .
//! ```
//!
//! Export is byte-stable: identical state always serializes to identical
//! bytes, and `parse_zone(serialize_zone(z)) == z`.

use thiserror::Error;

use super::{parse_record_entry, serialize_record, NaptrError, NaptrRecord, DEFAULT_TTL};
use crate::naptr::ere::PlusMode;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ZoneError {
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: NaptrError,
    },
    #[error("line {line}: {message}")]
    Directive { line: usize, message: String },
    #[error("line {line}: record before any $ORIGIN directive")]
    MissingOrigin { line: usize },
}

/// One `$ORIGIN` block: the owner domain, the TTL applied uniformly to
/// the whole set, and the records in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneSection {
    pub origin: String,
    pub ttl: u64,
    pub records: Vec<NaptrRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ZoneFile {
    pub sections: Vec<ZoneSection>,
}

pub fn parse_zone(text: &str) -> Result<ZoneFile, ZoneError> {
    parse_zone_with(text, PlusMode::Lenient)
}

pub fn parse_zone_with(text: &str, mode: PlusMode) -> Result<ZoneFile, ZoneError> {
    let mut sections: Vec<ZoneSection> = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = strip_directive(line, "ORIGIN") {
            let origin = rest.trim();
            if origin.is_empty() {
                return Err(ZoneError::Directive {
                    line: line_no,
                    message: "$ORIGIN requires a domain".into(),
                });
            }
            sections.push(ZoneSection {
                origin: origin.trim_end_matches('.').to_ascii_lowercase(),
                ttl: DEFAULT_TTL,
                records: Vec::new(),
            });
            continue;
        }
        if let Some(rest) = strip_directive(line, "TTL") {
            let section = sections.last_mut().ok_or(ZoneError::MissingOrigin { line: line_no })?;
            let ttl: u64 = rest.trim().parse().map_err(|_| ZoneError::Directive {
                line: line_no,
                message: format!("bad $TTL value {:?}", rest.trim()),
            })?;
            if !section.records.is_empty() {
                return Err(ZoneError::Directive {
                    line: line_no,
                    message: "$TTL must precede the section's records".into(),
                });
            }
            section.ttl = ttl;
            continue;
        }
        let section = sections.last_mut().ok_or(ZoneError::MissingOrigin { line: line_no })?;
        let entry = parse_record_entry(line, mode).map_err(|source| ZoneError::Record {
            line: line_no,
            source,
        })?;
        if let Some(owner) = &entry.owner {
            let owner = owner.trim_end_matches('.');
            if owner != "@" && !owner.eq_ignore_ascii_case(&section.origin) {
                return Err(ZoneError::Directive {
                    line: line_no,
                    message: format!(
                        "record owner {owner:?} does not match section origin {:?}",
                        section.origin
                    ),
                });
            }
        }
        if let Some(ttl) = entry.ttl {
            // The TTL applies uniformly to a set; a divergent per-record
            // TTL is a mistake worth surfacing.
            if section.records.is_empty() {
                section.ttl = ttl;
            } else if ttl != section.ttl {
                return Err(ZoneError::Directive {
                    line: line_no,
                    message: format!(
                        "record TTL {ttl} conflicts with the section TTL {}",
                        section.ttl
                    ),
                });
            }
        }
        section.records.push(entry.record);
    }
    Ok(ZoneFile { sections })
}

fn strip_directive<'l>(line: &'l str, name: &str) -> Option<&'l str> {
    let rest = line.strip_prefix('$')?.trim_start();
    if rest.len() < name.len() || !rest[..name.len()].eq_ignore_ascii_case(name) {
        return None;
    }
    let after = &rest[name.len()..];
    if after.is_empty() || after.starts_with([' ', '\t']) {
        Some(after)
    } else {
        None
    }
}

pub fn serialize_zone(zone: &ZoneFile) -> String {
    let mut out = String::new();
    for (index, section) in zone.sections.iter().enumerate() {
        if index > 0 {
            out.push('\n');
        }
        out.push_str("$ORIGIN ");
        out.push_str(&section.origin);
        out.push('\n');
        out.push_str(&format!("$TTL {}\n", section.ttl));
        for record in &section.records {
            out.push_str(&serialize_record(record));
            out.push('\n');
        }
    }
    out
}
