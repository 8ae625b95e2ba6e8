//! Dialed-string canonicalization and the digit-reversal domain mapping.
//!
//! A dialed string is classified before anything else: configured access
//! codes (911 and friends) bypass the database entirely, `#`-tagged inputs
//! carry an explicit root id, and everything else normalizes to an E.164
//! digit string. A digit string maps to a domain name by reversing the
//! digits, making each digit its own label, and appending a configurable
//! apex.

use std::fmt;

use thiserror::Error;

/// ITU E.164 ceiling: an international number is at most 15 digits.
pub const MAX_DIGITS: usize = 15;

/// Separators stripped during normalization. Any other non-digit is an
/// error rather than silently dropped, so typos surface.
const SEPARATORS: &[char] = &['+', '-', '.', '(', ')', ' '];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum E164Error {
    #[error("no digits left after stripping separators")]
    EmptyNumber,
    #[error("not a number: {residue:?} contains a non-digit")]
    NotANumber { residue: String },
    #[error("number has {len} digits, the maximum is {MAX_DIGITS}")]
    TooLong { len: usize },
    #[error("unclassifiable input {raw:?}: {reason}")]
    UnclassifiableInput { raw: String, reason: String },
    #[error("malformed domain label {label:?}: labels before the apex must be single digits")]
    MalformedDomain { label: String },
    #[error("domain {domain:?} does not end in apex {apex:?}")]
    ApexMismatch { domain: String, apex: String },
    #[error("dial string must not be empty")]
    EmptyDialString,
}

/// A dialed string exactly as entered on a device, preserved byte-for-byte
/// for audit purposes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DialString(String);

impl DialString {
    pub fn new(raw: impl Into<String>) -> Result<Self, E164Error> {
        let raw = raw.into();
        if raw.is_empty() {
            return Err(E164Error::EmptyDialString);
        }
        Ok(DialString(raw))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DialString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical E.164 digit string: country code first, 1..=15 decimal
/// digits, no separators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct E164Number(String);

impl E164Number {
    pub fn new(digits: impl Into<String>) -> Result<Self, E164Error> {
        let digits = digits.into();
        if digits.is_empty() {
            return Err(E164Error::EmptyNumber);
        }
        if let Some(_bad) = digits.chars().find(|c| !c.is_ascii_digit()) {
            return Err(E164Error::NotANumber { residue: digits });
        }
        if digits.len() > MAX_DIGITS {
            return Err(E164Error::TooLong { len: digits.len() });
        }
        Ok(E164Number(digits))
    }

    pub fn digits(&self) -> &str {
        &self.0
    }

    /// The application unique string fed to NAPTR rewrite rules and the
    /// canonical rendering of a number: `+` followed by the digits.
    pub fn to_aus(&self) -> String {
        format!("+{}", self.0)
    }
}

impl fmt::Display for E164Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for E164Number {
    type Err = E164Error;

    fn from_str(s: &str) -> Result<Self, E164Error> {
        E164Number::new(s)
    }
}

/// An ENUM domain: the number's digits reversed, one single-digit label
/// each, under an apex. Renders lowercase; compares case-insensitively
/// (the apex is lowercased on construction).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnumDomain {
    /// Least-significant digit first, i.e. in rendered label order.
    labels: Vec<u8>,
    apex: String,
}

impl EnumDomain {
    /// Parses a rendered domain against a known apex.
    pub fn parse(text: &str, apex: &str) -> Result<Self, E164Error> {
        let text_lower = text.to_ascii_lowercase();
        let apex_lower = apex.trim_end_matches('.').to_ascii_lowercase();
        let head = text_lower
            .trim_end_matches('.')
            .strip_suffix(&apex_lower)
            .and_then(|h| h.strip_suffix('.'))
            .ok_or_else(|| E164Error::ApexMismatch {
                domain: text.to_string(),
                apex: apex.to_string(),
            })?;
        let mut labels = Vec::new();
        for label in head.split('.') {
            let mut chars = label.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_digit() => labels.push(c as u8 - b'0'),
                _ => {
                    return Err(E164Error::MalformedDomain {
                        label: label.to_string(),
                    })
                }
            }
        }
        if labels.is_empty() || labels.len() > MAX_DIGITS {
            return Err(E164Error::MalformedDomain {
                label: head.to_string(),
            });
        }
        Ok(EnumDomain {
            labels,
            apex: apex_lower,
        })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn apex(&self) -> &str {
        &self.apex
    }
}

impl fmt::Display for EnumDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.labels {
            write!(f, "{d}.")?;
        }
        f.write_str(&self.apex)
    }
}

/// What a dialed string turned out to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NumberClass {
    E164(E164Number),
    /// A configured access code such as 911; handled by the device, never
    /// sent to the database.
    AccessCode(String),
    /// `<number>#<root-id>`: the caller named which root to query.
    ExtensionTagged(E164Number, u32),
}

/// Strips separators and applies the dialing context, producing a
/// canonical digit string.
///
/// A leading `+` marks the input as fully qualified; otherwise the
/// configured dialing-context digits are prepended.
pub fn normalize(raw: &DialString, dialing_context: Option<&str>) -> Result<E164Number, E164Error> {
    normalize_str(raw.as_str(), dialing_context)
}

fn normalize_str(raw: &str, dialing_context: Option<&str>) -> Result<E164Number, E164Error> {
    let fully_qualified = raw.starts_with('+');
    let mut digits = String::new();
    for c in raw.chars() {
        if c.is_ascii_digit() {
            digits.push(c);
        } else if !SEPARATORS.contains(&c) {
            return Err(E164Error::NotANumber {
                residue: raw.to_string(),
            });
        }
    }
    if digits.is_empty() {
        return Err(E164Error::EmptyNumber);
    }
    if !fully_qualified {
        if let Some(ctx) = dialing_context {
            let ctx = ctx.trim();
            if !ctx.is_empty() {
                if ctx.chars().any(|c| !c.is_ascii_digit()) {
                    return Err(E164Error::NotANumber {
                        residue: ctx.to_string(),
                    });
                }
                digits.insert_str(0, ctx);
            }
        }
    }
    if digits.len() > MAX_DIGITS {
        return Err(E164Error::TooLong { len: digits.len() });
    }
    E164Number::new(digits)
}

/// Classifies a dialed string. Access codes are recognized on the raw
/// input before any normalization, so `911` is an access code even though
/// it is all digits.
pub fn classify_dial_string(
    raw: &DialString,
    access_codes: &[String],
    dialing_context: Option<&str>,
) -> Result<NumberClass, E164Error> {
    let s = raw.as_str();
    if access_codes.iter().any(|code| code == s) {
        return Ok(NumberClass::AccessCode(s.to_string()));
    }
    if let Some((head, tail)) = s.split_once('#') {
        let root_id: u32 = tail.parse().map_err(|_| E164Error::UnclassifiableInput {
            raw: s.to_string(),
            reason: format!("root id {tail:?} after '#' is not a nonnegative integer"),
        })?;
        let number = normalize_str(head, dialing_context).map_err(unclassifiable(s))?;
        return Ok(NumberClass::ExtensionTagged(number, root_id));
    }
    let number = normalize_str(s, dialing_context).map_err(unclassifiable(s))?;
    Ok(NumberClass::E164(number))
}

fn unclassifiable(raw: &str) -> impl Fn(E164Error) -> E164Error + '_ {
    move |err| match err {
        E164Error::NotANumber { residue } => E164Error::UnclassifiableInput {
            raw: raw.to_string(),
            reason: format!("{residue:?} contains a non-digit after separator stripping"),
        },
        other => other,
    }
}

/// Reverses the digits and appends the apex, one label per digit.
pub fn to_domain(n: &E164Number, apex: &str) -> EnumDomain {
    EnumDomain {
        labels: n.digits().bytes().rev().map(|b| b - b'0').collect(),
        apex: apex.trim_end_matches('.').to_ascii_lowercase(),
    }
}

/// Inverse of [`to_domain`]; used by zone import and the audit trail.
pub fn from_domain(d: &EnumDomain) -> E164Number {
    let digits: String = d
        .labels
        .iter()
        .rev()
        .map(|b| char::from(b + b'0'))
        .collect();
    E164Number(digits)
}
