//! NAPTR resource records: master-file parsing, canonical serialization,
//! rewrite application, and service selection.
//!
//! A record's rewrite rule turns the application unique string (the
//! `+digits` form of a number) into a contact URI. Selection sorts a
//! record set by `(order, preference)` with insertion order breaking
//! ties, skips records whose service does not match the requested
//! application or whose pattern does not match the input, and returns the
//! survivors as the preference list. Only the terminal flag `u` is
//! executed; any other non-empty flag is a parse error so corrupt data is
//! loud rather than silently ignored.

pub mod ere;
pub mod zonefile;

use std::fmt;

use thiserror::Error;

use crate::e164::EnumDomain;
use ere::{expand_substitution, Ere, EreError, PlusMode};

/// TTL applied when a zone does not state one.
pub const DEFAULT_TTL: u64 = 3600;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NaptrError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("{field} value {value} exceeds 65535")]
    Range { field: &'static str, value: u64 },
    #[error("unsupported flags field {0:?}: only \"u\" (or empty) is recognized")]
    UnsupportedFlag(String),
    #[error("malformed service field {0:?}: expected <app>+E2U or E2U+<app>")]
    MalformedService(String),
    #[error("rewrite rule {text:?} must contain its delimiter {delimiter:?} exactly three times")]
    MalformedRule { text: String, delimiter: char },
    #[error("rewrite produced {0:?}, which has no scheme separator ':'")]
    MalformedUri(String),
    #[error("no applicable records: every record was filtered out or failed to match")]
    NoApplicableRecords,
    #[error(transparent)]
    Ere(#[from] EreError),
}

/// The `!pattern!substitution!` payload of a NAPTR record.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    delimiter: char,
    pattern: String,
    substitution: String,
    compiled: Ere,
}

impl PartialEq for RewriteRule {
    fn eq(&self, other: &Self) -> bool {
        self.delimiter == other.delimiter
            && self.pattern == other.pattern
            && self.substitution == other.substitution
    }
}

impl Eq for RewriteRule {}

impl RewriteRule {
    pub fn new(
        delimiter: char,
        pattern: &str,
        substitution: &str,
        mode: PlusMode,
    ) -> Result<Self, NaptrError> {
        if pattern.contains(delimiter) || substitution.contains(delimiter) {
            return Err(NaptrError::MalformedRule {
                text: format!("{delimiter}{pattern}{delimiter}{substitution}{delimiter}"),
                delimiter,
            });
        }
        let compiled = Ere::compile(pattern, mode)?;
        Ok(RewriteRule {
            delimiter,
            pattern: pattern.to_string(),
            substitution: substitution.to_string(),
            compiled,
        })
    }

    /// Parses the delimited form, e.g. `!^.*$!tel:+112025551212!`. The
    /// first character is the delimiter and must occur exactly three
    /// times.
    pub fn parse(text: &str, mode: PlusMode) -> Result<Self, NaptrError> {
        let mut chars = text.chars();
        let delimiter = chars.next().ok_or_else(|| NaptrError::MalformedRule {
            text: text.to_string(),
            delimiter: '!',
        })?;
        let rest: &str = chars.as_str();
        if text.matches(delimiter).count() != 3 || !rest.ends_with(delimiter) {
            return Err(NaptrError::MalformedRule {
                text: text.to_string(),
                delimiter,
            });
        }
        let body = &rest[..rest.len() - delimiter.len_utf8()];
        let (pattern, substitution) =
            body.split_once(delimiter)
                .ok_or_else(|| NaptrError::MalformedRule {
                    text: text.to_string(),
                    delimiter,
                })?;
        RewriteRule::new(delimiter, pattern, substitution, mode)
    }

    pub fn render(&self) -> String {
        format!(
            "{d}{}{d}{}{d}",
            self.pattern,
            self.substitution,
            d = self.delimiter
        )
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn substitution(&self) -> &str {
        &self.substitution
    }

    /// Applies the rule to an application unique string. `None` means the
    /// pattern did not match and the record is skipped.
    pub fn apply(&self, aus: &str) -> Result<Option<String>, NaptrError> {
        match self.compiled.find(aus) {
            None => Ok(None),
            Some(caps) => Ok(Some(expand_substitution(&self.substitution, aus, &caps)?)),
        }
    }
}

/// One NAPTR record. Construction validates the flags and service fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaptrRecord {
    order: u16,
    preference: u16,
    flags: String,
    service: String,
    rule: RewriteRule,
    /// Empty string is the `.` (no replacement) convention.
    replacement: String,
}

impl NaptrRecord {
    pub fn new(
        order: u16,
        preference: u16,
        flags: &str,
        service: &str,
        rule: RewriteRule,
        replacement: &str,
    ) -> Result<Self, NaptrError> {
        let flags = flags.to_ascii_lowercase();
        if !(flags.is_empty() || flags == "u") {
            return Err(NaptrError::UnsupportedFlag(flags));
        }
        parse_service_field(service)?;
        let replacement = if replacement.trim_end_matches('.').is_empty() {
            String::new()
        } else {
            replacement.to_string()
        };
        Ok(NaptrRecord {
            order,
            preference,
            flags,
            service: service.to_string(),
            rule,
            replacement,
        })
    }

    pub fn order(&self) -> u16 {
        self.order
    }

    pub fn preference(&self) -> u16 {
        self.preference
    }

    pub fn flags(&self) -> &str {
        &self.flags
    }

    pub fn service(&self) -> &str {
        &self.service
    }

    pub fn rule(&self) -> &RewriteRule {
        &self.rule
    }

    pub fn replacement(&self) -> &str {
        &self.replacement
    }

    fn is_terminal(&self) -> bool {
        self.flags == "u"
    }
}

/// A per-owner set of records. Insertion order is preserved; it is the
/// tie-break for equal `(order, preference)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordSet {
    owner: EnumDomain,
    ttl_seconds: u64,
    records: Vec<NaptrRecord>,
}

impl RecordSet {
    pub fn new(owner: EnumDomain, ttl_seconds: u64, records: Vec<NaptrRecord>) -> Self {
        RecordSet {
            owner,
            ttl_seconds,
            records,
        }
    }

    pub fn owner(&self) -> &EnumDomain {
        &self.owner
    }

    pub fn ttl_seconds(&self) -> u64 {
        self.ttl_seconds
    }

    pub fn records(&self) -> &[NaptrRecord] {
        &self.records
    }
}

/// A selected contact: `<scheme>:<body>` exactly as the rewrite produced
/// it, tagged with the service field it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactUri {
    pub scheme: String,
    pub body: String,
    pub source_service: String,
}

impl fmt::Display for ContactUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scheme, self.body)
    }
}

/// Splits a service field into `(app, resolution)`. Both `<app>+E2U` and
/// the later `E2U+<app>` order are accepted; the E2U side is returned
/// verbatim.
pub fn parse_service_field(service: &str) -> Result<(String, String), NaptrError> {
    if service.matches('+').count() != 1 {
        return Err(NaptrError::MalformedService(service.to_string()));
    }
    let (left, right) = service.split_once('+').expect("one '+' present");
    if left.eq_ignore_ascii_case("e2u") {
        Ok((right.to_string(), left.to_string()))
    } else if right.eq_ignore_ascii_case("e2u") {
        Ok((left.to_string(), right.to_string()))
    } else {
        Err(NaptrError::MalformedService(service.to_string()))
    }
}

/// Applies a rewrite to an AUS and splits the result into a contact URI
/// at the first `:`.
pub fn apply_rewrite(rule: &RewriteRule, aus: &str) -> Result<Option<ContactUri>, NaptrError> {
    let Some(expanded) = rule.apply(aus)? else {
        return Ok(None);
    };
    let (scheme, body) = expanded
        .split_once(':')
        .ok_or_else(|| NaptrError::MalformedUri(expanded.clone()))?;
    Ok(Some(ContactUri {
        scheme: scheme.to_string(),
        body: body.to_string(),
        source_service: String::new(),
    }))
}

/// Orders a record set and applies every surviving rewrite, returning the
/// preference list of contacts.
pub fn select_services(
    set: &RecordSet,
    aus: &str,
    service_filter: Option<&str>,
) -> Result<Vec<ContactUri>, NaptrError> {
    let mut indexed: Vec<(usize, &NaptrRecord)> = set.records.iter().enumerate().collect();
    // Stable sort: insertion position breaks (order, preference) ties.
    indexed.sort_by_key(|(_, r)| (r.order, r.preference));
    let mut contacts = Vec::new();
    for (_, record) in indexed {
        let (app, _) = parse_service_field(&record.service)?;
        if let Some(filter) = service_filter {
            if !app.eq_ignore_ascii_case(filter) {
                continue;
            }
        }
        if !record.is_terminal() {
            // Non-terminal replacement chains are outside this tool's
            // scope; such records never produce a contact.
            continue;
        }
        if let Some(mut contact) = apply_rewrite(&record.rule, aus)? {
            contact.source_service = record.service.clone();
            contacts.push(contact);
        }
    }
    if contacts.is_empty() {
        return Err(NaptrError::NoApplicableRecords);
    }
    Ok(contacts)
}

/// Parses one master-file NAPTR line, tolerating an optional leading
/// owner and TTL before `IN NAPTR`.
pub fn parse_record_line(line: &str) -> Result<NaptrRecord, NaptrError> {
    parse_record_line_with(line, PlusMode::Lenient)
}

pub fn parse_record_line_with(line: &str, mode: PlusMode) -> Result<NaptrRecord, NaptrError> {
    parse_record_entry(line, mode).map(|entry| entry.record)
}

/// A parsed line plus whatever owner/TTL prefix it carried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordLine {
    pub owner: Option<String>,
    pub ttl: Option<u64>,
    pub record: NaptrRecord,
}

pub fn parse_record_entry(line: &str, mode: PlusMode) -> Result<RecordLine, NaptrError> {
    let mut tokens = tokenize(line)?;
    // Leading owner and/or TTL, then the class/type pair.
    let mut owner = None;
    let mut ttl = None;
    let mut index = 0;
    loop {
        let Some(token) = tokens.get(index) else {
            return Err(syntax(line.len(), "missing 'IN NAPTR'"));
        };
        if token.quoted {
            return Err(syntax(token.column, "unexpected quoted string before 'IN NAPTR'"));
        }
        if token.text.eq_ignore_ascii_case("in") {
            break;
        }
        if index >= 2 {
            return Err(syntax(token.column, "expected 'IN' after owner and TTL"));
        }
        if let Ok(value) = token.text.parse::<u64>() {
            if ttl.is_some() {
                return Err(syntax(token.column, "duplicate TTL"));
            }
            ttl = Some(value);
        } else if owner.is_none() && ttl.is_none() {
            owner = Some(token.text.clone());
        } else {
            return Err(syntax(token.column, "unexpected token before 'IN NAPTR'"));
        }
        index += 1;
    }
    let in_token = index;
    match tokens.get(in_token + 1) {
        Some(t) if !t.quoted && t.text.eq_ignore_ascii_case("naptr") => {}
        Some(t) => return Err(syntax(t.column, "expected record type NAPTR")),
        None => return Err(syntax(line.len(), "expected record type NAPTR")),
    }
    let fields = tokens.split_off(in_token + 2);
    if fields.len() != 6 {
        let column = fields.last().map_or(line.len(), |t| t.column);
        return Err(syntax(
            column,
            format!("expected 6 fields after 'IN NAPTR', found {}", fields.len()),
        ));
    }
    let order = parse_u16(&fields[0], "order")?;
    let preference = parse_u16(&fields[1], "preference")?;
    let flags = expect_quoted(&fields[2], "flags")?;
    let service = expect_quoted(&fields[3], "service")?;
    let regexp = expect_quoted(&fields[4], "regexp")?;
    let replacement = &fields[5];
    if replacement.quoted {
        return Err(syntax(replacement.column, "replacement must not be quoted"));
    }
    let rule = RewriteRule::parse(&regexp.text, mode).map_err(|err| match err {
        NaptrError::MalformedRule { text, delimiter } => syntax(
            regexp.column,
            format!("bad rewrite {text:?}: delimiter {delimiter:?} must occur exactly three times"),
        ),
        other => other,
    })?;
    let record = NaptrRecord::new(order, preference, &flags.text, &service.text, rule, &replacement.text)?;
    Ok(RecordLine {
        owner,
        ttl,
        record,
    })
}

/// Canonical single-space serialization; quoted fields are always quoted
/// and an empty replacement renders as `.`.
pub fn serialize_record(record: &NaptrRecord) -> String {
    let replacement = if record.replacement.is_empty() {
        ".".to_string()
    } else {
        record.replacement.clone()
    };
    format!(
        "IN NAPTR {} {} {} {} {} {}",
        record.order,
        record.preference,
        quote(&record.flags),
        quote(&record.service),
        quote(&record.rule.render()),
        replacement
    )
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn syntax(column: usize, message: impl Into<String>) -> NaptrError {
    NaptrError::Syntax {
        column,
        message: message.into(),
    }
}

fn parse_u16(token: &Token, field: &'static str) -> Result<u16, NaptrError> {
    if token.quoted {
        return Err(syntax(token.column, format!("{field} must not be quoted")));
    }
    let value: u64 = token
        .text
        .parse()
        .map_err(|_| syntax(token.column, format!("{field} must be an integer")))?;
    u16::try_from(value).map_err(|_| NaptrError::Range { field, value })
}

fn expect_quoted<'t>(token: &'t Token, field: &'static str) -> Result<&'t Token, NaptrError> {
    if !token.quoted {
        return Err(syntax(token.column, format!("{field} must be quoted")));
    }
    Ok(token)
}

#[derive(Debug)]
struct Token {
    text: String,
    quoted: bool,
    /// 1-based column of the token start.
    column: usize,
}

fn tokenize(line: &str) -> Result<Vec<Token>, NaptrError> {
    let mut tokens = Vec::new();
    let mut iter = line.char_indices().peekable();
    while let Some(&(idx, c)) = iter.peek() {
        if c == ' ' || c == '\t' {
            iter.next();
            continue;
        }
        if c == ';' {
            break; // comment to end of line
        }
        let column = idx + 1;
        if c == '"' {
            iter.next();
            let mut text = String::new();
            let mut closed = false;
            while let Some((_, c)) = iter.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match iter.next() {
                        Some((_, escaped)) => text.push(escaped),
                        None => return Err(syntax(column, "dangling escape in quoted string")),
                    },
                    other => text.push(other),
                }
            }
            if !closed {
                return Err(syntax(column, "unterminated quoted string"));
            }
            tokens.push(Token {
                text,
                quoted: true,
                column,
            });
        } else {
            let start = idx;
            let mut end = line.len();
            while let Some(&(j, c)) = iter.peek() {
                if matches!(c, ' ' | '\t' | ';') {
                    end = j;
                    break;
                }
                iter.next();
            }
            tokens.push(Token {
                text: line[start..end].to_string(),
                quoted: false,
                column,
            });
        }
    }
    Ok(tokens)
}
