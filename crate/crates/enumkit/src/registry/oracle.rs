//! The telephone-number assignment oracle.
//!
//! Real deployments would consult carrier systems (LIDB, ANI, directory
//! listings, callbacks, paper bills) to check that a registrant is the
//! assignee of a number. The simulator replaces all of those sources with
//! one in-memory table of `number -> (registrant, carrier, state)`; each
//! evidence method becomes a deterministic check against that table, so
//! verification is reproducible for a fixed oracle state.
//!
//! Seed file format, one line per number, single tabs:
//! `<digits>\t<registrant-id>\t<carrier>`. A fourth column extends the
//! format for persisted non-active states (`ported:<carrier>` or
//! `disconnected:<iso-timestamp>`); seed files without it load as Active.

use std::collections::BTreeMap;
use std::fmt;

use crate::clock::Timestamp;
use crate::e164::E164Number;
use crate::registry::RegistryError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubscriptionState {
    Active,
    Ported { to_carrier: String },
    Disconnected { at: Timestamp },
}

impl fmt::Display for SubscriptionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubscriptionState::Active => f.write_str("active"),
            SubscriptionState::Ported { to_carrier } => write!(f, "ported:{to_carrier}"),
            SubscriptionState::Disconnected { at } => write!(f, "disconnected:{}", at.to_iso8601()),
        }
    }
}

impl SubscriptionState {
    pub fn parse(text: &str) -> Result<Self, String> {
        if text == "active" {
            return Ok(SubscriptionState::Active);
        }
        if let Some(carrier) = text.strip_prefix("ported:") {
            return Ok(SubscriptionState::Ported {
                to_carrier: carrier.to_string(),
            });
        }
        if let Some(at) = text.strip_prefix("disconnected:") {
            let at = Timestamp::parse_iso8601(at).map_err(|e| e.to_string())?;
            return Ok(SubscriptionState::Disconnected { at });
        }
        Err(format!("unknown subscription state {text:?}"))
    }
}

/// One assignment: who holds the number and through which carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEntry {
    pub registrant: String,
    pub carrier: String,
    pub state: SubscriptionState,
}

/// The assignment table itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentOracle {
    entries: BTreeMap<E164Number, OracleEntry>,
}

impl AssignmentOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, number: E164Number, registrant: &str, carrier: &str) {
        self.entries.insert(
            number,
            OracleEntry {
                registrant: registrant.to_string(),
                carrier: carrier.to_string(),
                state: SubscriptionState::Active,
            },
        );
    }

    pub fn lookup(&self, number: &E164Number) -> Option<&OracleEntry> {
        self.entries.get(number)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E164Number, &OracleEntry)> {
        self.entries.iter()
    }

    /// Moves the source of truth for `number` to `to_carrier`. The entry
    /// keeps its registrant; only the carrier (and state) change.
    pub fn port(
        &mut self,
        number: &E164Number,
        from_carrier: &str,
        to_carrier: &str,
    ) -> Result<(), RegistryError> {
        let entry = self
            .entries
            .get_mut(number)
            .ok_or_else(|| RegistryError::UnknownNumber(number.clone()))?;
        if entry.carrier != from_carrier {
            return Err(RegistryError::WrongCarrier {
                number: number.clone(),
                expected: entry.carrier.clone(),
                given: from_carrier.to_string(),
            });
        }
        entry.carrier = to_carrier.to_string();
        entry.state = SubscriptionState::Ported {
            to_carrier: to_carrier.to_string(),
        };
        Ok(())
    }

    pub fn disconnect(&mut self, number: &E164Number, at: Timestamp) -> Result<(), RegistryError> {
        let entry = self
            .entries
            .get_mut(number)
            .ok_or_else(|| RegistryError::UnknownNumber(number.clone()))?;
        if matches!(entry.state, SubscriptionState::Disconnected { .. }) {
            return Err(RegistryError::UnknownNumber(number.clone()));
        }
        entry.state = SubscriptionState::Disconnected { at };
        Ok(())
    }

    pub fn parse_seed(text: &str) -> Result<Self, String> {
        let mut oracle = AssignmentOracle::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 && fields.len() != 4 {
                return Err(format!("oracle line {}: expected 3 or 4 tab-separated fields", index + 1));
            }
            let number = E164Number::new(fields[0])
                .map_err(|e| format!("oracle line {}: {e}", index + 1))?;
            let state = match fields.get(3) {
                Some(raw) => SubscriptionState::parse(raw)
                    .map_err(|e| format!("oracle line {}: {e}", index + 1))?,
                None => SubscriptionState::Active,
            };
            oracle.entries.insert(
                number,
                OracleEntry {
                    registrant: fields[1].to_string(),
                    carrier: fields[2].to_string(),
                    state,
                },
            );
        }
        Ok(oracle)
    }

    /// Inverse of [`AssignmentOracle::parse_seed`]; active entries use the
    /// plain three-column seed format.
    pub fn serialize_seed(&self) -> String {
        let mut out = String::new();
        for (number, entry) in &self.entries {
            out.push_str(number.digits());
            out.push('\t');
            out.push_str(&entry.registrant);
            out.push('\t');
            out.push_str(&entry.carrier);
            if entry.state != SubscriptionState::Active {
                out.push('\t');
                out.push_str(&entry.state.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// How a registrant proves assignment of a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthMethod {
    /// The number itself was called and the named party completed the
    /// callback.
    CallbackCompleted,
    /// The named party showed a phone bill for the number.
    PhoneBillShown,
    /// A Line Information Database lookup; the payload names the carrier
    /// whose LIDB was consulted and the subscriber it returned, as
    /// `<carrier>:<registrant>`. Only the current carrier's LIDB is
    /// authoritative, which is what moves when a number is ported.
    LidbMatch,
    /// Network signaling identified the caller placing a call from the
    /// number.
    AniMatch,
    /// A directory listing names the party.
    DirectoryListingMatch,
    /// A commercial verification service vouches for the party.
    ThirdPartyCertificate,
}

impl AuthMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AuthMethod::CallbackCompleted => "callback",
            AuthMethod::PhoneBillShown => "phone-bill",
            AuthMethod::LidbMatch => "lidb",
            AuthMethod::AniMatch => "ani",
            AuthMethod::DirectoryListingMatch => "directory-listing",
            AuthMethod::ThirdPartyCertificate => "third-party-cert",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "callback" => AuthMethod::CallbackCompleted,
            "phone-bill" => AuthMethod::PhoneBillShown,
            "lidb" => AuthMethod::LidbMatch,
            "ani" => AuthMethod::AniMatch,
            "directory-listing" => AuthMethod::DirectoryListingMatch,
            "third-party-cert" => AuthMethod::ThirdPartyCertificate,
            _ => return None,
        })
    }
}

/// Evidence presented at registration time. The payload names the party
/// the method vouches for (plus the consulted carrier, for LIDB).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthEvidence {
    pub method: AuthMethod,
    pub payload: String,
    pub asserted_number: E164Number,
}

impl AuthEvidence {
    pub fn new(method: AuthMethod, payload: &str, asserted_number: E164Number) -> Self {
        AuthEvidence {
            method,
            payload: payload.to_string(),
            asserted_number,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthVerdict {
    Accepted,
    Rejected(String),
}

impl AuthVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, AuthVerdict::Accepted)
    }
}

/// Checks evidence against the oracle. Deterministic for a fixed oracle
/// state; errors only when the oracle has no record of the number at all
/// (an unassigned number cannot be registered).
pub fn verify_assignee(
    number: &E164Number,
    evidence: &AuthEvidence,
    oracle: &AssignmentOracle,
) -> Result<AuthVerdict, RegistryError> {
    if &evidence.asserted_number != number {
        return Ok(AuthVerdict::Rejected(format!(
            "evidence asserts {} but registration is for {}",
            evidence.asserted_number, number
        )));
    }
    let entry = oracle
        .lookup(number)
        .ok_or_else(|| RegistryError::UnknownNumber(number.clone()))?;
    if let SubscriptionState::Disconnected { .. } = entry.state {
        return Ok(AuthVerdict::Rejected(format!(
            "{number} is disconnected; only assigned numbers are eligible"
        )));
    }
    let vouched = match evidence.method {
        AuthMethod::LidbMatch => {
            let Some((carrier, registrant)) = evidence.payload.split_once(':') else {
                return Ok(AuthVerdict::Rejected(
                    "LIDB payload must be <carrier>:<registrant>".into(),
                ));
            };
            if carrier != entry.carrier {
                return Ok(AuthVerdict::Rejected(format!(
                    "LIDB of {carrier:?} is not authoritative for {number}; current carrier is {:?}",
                    entry.carrier
                )));
            }
            registrant
        }
        _ => evidence.payload.as_str(),
    };
    if vouched == entry.registrant {
        Ok(AuthVerdict::Accepted)
    } else {
        Ok(AuthVerdict::Rejected(format!(
            "{} names {vouched:?}, but {number} is assigned to {:?}",
            evidence.method.as_str(),
            entry.registrant
        )))
    }
}
