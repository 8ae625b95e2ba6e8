//! The three-tier delegated registry simulator.
//!
//! Tier 0 is the international root: one entry per country code, carrying
//! an authorization flag and, once a nation opts in, a delegation to its
//! single designated Tier 1 provider. Tier 1 is the national registry; it
//! delegates individual numbers to Tier 2 providers and holds no NAPTR
//! data itself. Tier 2 providers interact with registrants and hold the
//! record sets. An append-only audit log records every mutation and every
//! denied attempt.
//!
//! A tree is single-writer / multi-reader: all mutations go through
//! `&mut EnumTree`, readers take snapshots (`EnumTree` is `Clone`) or
//! shared references and never observe a half-applied operation.

pub mod audit;
pub mod oracle;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::clock::Timestamp;
use crate::e164::{from_domain, to_domain, E164Number, EnumDomain};
use crate::naptr::RecordSet;
use audit::AuditLog;
use oracle::{verify_assignee, AssignmentOracle, AuthEvidence, AuthVerdict, SubscriptionState};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("country code {0:?} is already authorized to a provider")]
    AlreadyAuthorized(String),
    #[error("invalid country code {0:?}: expected 1-3 digits")]
    InvalidCountryCode(String),
    #[error("country code {0:?} is not authorized in this tree")]
    CountryNotAuthorized(String),
    #[error("number {number} does not belong to country code {cc:?}")]
    WrongCountryCode { number: E164Number, cc: String },
    #[error("number {0} is already delegated")]
    AlreadyDelegated(E164Number),
    #[error("the assignment oracle has no record of {0}")]
    UnknownNumber(E164Number),
    #[error("authentication failed: {0}")]
    AuthFailed(String),
    #[error("number {number} is not delegated to provider {provider:?}")]
    NotDelegatedHere { number: E164Number, provider: String },
    #[error("number {0} already has a registration")]
    DuplicateRegistration(E164Number),
    #[error("number {0} has no registration")]
    NoSuchRegistration(E164Number),
    #[error("number {number} is held by carrier {expected:?}, not {given:?}")]
    WrongCarrier {
        number: E164Number,
        expected: String,
        given: String,
    },
    #[error("number {0} already has an open challenge")]
    OpenChallengeExists(E164Number),
    #[error("number {0} has no open challenge")]
    NoOpenChallenge(E164Number),
    #[error("record set owner {owner} does not correspond to number {number} under apex {apex:?}")]
    RecordSetOwnerMismatch {
        owner: String,
        number: E164Number,
        apex: String,
    },
    #[error("registration for {0} was not an opt-out enrollment")]
    NotOptOutEnrollment(E164Number),
    #[error("no Tier 2 provider named {0:?}")]
    UnknownProvider(String),
    #[error("country code {cc:?} is already designated to Tier 1 provider {provider:?}")]
    Tier1AlreadyDesignated { cc: String, provider: String },
}

/// International root: country-code entries gated on national opt-in.
/// Stores delegations only, never service data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier0Zone {
    apex: String,
    entries: BTreeMap<String, Tier0Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier0Entry {
    pub authorized: bool,
    pub tier1_provider: Option<String>,
}

impl Tier0Zone {
    pub fn new(apex: &str) -> Self {
        Tier0Zone {
            apex: apex.trim_end_matches('.').to_ascii_lowercase(),
            entries: BTreeMap::new(),
        }
    }

    pub fn apex(&self) -> &str {
        &self.apex
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Tier0Entry)> {
        self.entries.iter().map(|(cc, e)| (cc.as_str(), e))
    }

    pub fn entry(&self, cc: &str) -> Option<&Tier0Entry> {
        self.entries.get(cc)
    }

    /// Longest authorized-or-not country code prefixing the digits.
    pub fn country_match(&self, number: &E164Number) -> Option<(&str, &Tier0Entry)> {
        self.entries
            .iter()
            .filter(|(cc, _)| number.digits().starts_with(cc.as_str()))
            .max_by_key(|(cc, _)| cc.len())
            .map(|(cc, e)| (cc.as_str(), e))
    }
}

/// National registry for one country code. Points numbers at Tier 2
/// providers; holds no NAPTR data and never talks to end users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier1Zone {
    country_code: String,
    provider_id: String,
    delegations: BTreeMap<E164Number, String>,
}

impl Tier1Zone {
    pub fn country_code(&self) -> &str {
        &self.country_code
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn delegation(&self, number: &E164Number) -> Option<&str> {
        self.delegations.get(number).map(String::as_str)
    }

    pub fn delegations(&self) -> impl Iterator<Item = (&E164Number, &str)> {
        self.delegations.iter().map(|(n, p)| (n, p.as_str()))
    }
}

/// Service-provider zone: registrations (record custody) plus an archive
/// of record sets displaced by dispute transfers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tier2Zone {
    provider_id: String,
    registrations: BTreeMap<E164Number, Registration>,
    archive: Vec<ArchivedRecordSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivedRecordSet {
    pub number: E164Number,
    pub record_set: RecordSet,
    pub reason: String,
    pub at: Timestamp,
}

impl Tier2Zone {
    fn new(provider_id: &str) -> Self {
        Tier2Zone {
            provider_id: provider_id.to_string(),
            registrations: BTreeMap::new(),
            archive: Vec::new(),
        }
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn registration(&self, number: &E164Number) -> Option<&Registration> {
        self.registrations.get(number)
    }

    pub fn registrations(&self) -> impl Iterator<Item = (&E164Number, &Registration)> {
        self.registrations.iter()
    }

    /// Record custody, viewed as owner domain to record set.
    pub fn record_sets(&self) -> impl Iterator<Item = (&EnumDomain, &RecordSet)> {
        self.registrations
            .values()
            .map(|r| (r.record_set.owner(), &r.record_set))
    }

    /// The registrant index: number to registrant.
    pub fn registrant_index(&self) -> impl Iterator<Item = (&E164Number, &Registrant)> {
        self.registrations.iter().map(|(n, r)| (n, &r.registrant))
    }

    pub fn archive(&self) -> &[ArchivedRecordSet] {
        &self.archive
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registrant {
    pub id: String,
    pub display_name: String,
    pub subscription_state: SubscriptionState,
    pub carrier: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProvisioningMode {
    /// Individual consent: the registrant proves assignment.
    OptIn,
    /// Bulk enrollment by a network; the registrant may withdraw later.
    OptOut,
    /// Corporate enrollment; participants have no choice.
    Mandated,
}

impl fmt::Display for ProvisioningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProvisioningMode::OptIn => "opt-in",
            ProvisioningMode::OptOut => "opt-out",
            ProvisioningMode::Mandated => "mandated",
        })
    }
}

impl ProvisioningMode {
    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "opt-in" => ProvisioningMode::OptIn,
            "opt-out" => ProvisioningMode::OptOut,
            "mandated" => ProvisioningMode::Mandated,
            _ => return None,
        })
    }
}

/// One number's registration at a Tier 2 provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registration {
    pub registrant: Registrant,
    pub record_set: RecordSet,
    pub mode: ProvisioningMode,
    /// The enrolling authority, for opt-out and mandated enrollments.
    pub enrolled_by: Option<String>,
    /// Set when a coupled-mode disconnect quarantines the registration;
    /// the record resolves NXDOMAIN immediately and is purged after the
    /// quarantine expires.
    pub quarantined_until: Option<Timestamp>,
}

/// Who vouches for a registration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Enrollment {
    /// Opt-in: the registrant's own assignment evidence.
    Individual(AuthEvidence),
    /// Opt-out or mandated: an enrolling authority's credential
    /// substitutes for per-registrant evidence.
    Authority { id: String, credential: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LifecycleMode {
    /// Disconnecting the telephone number quarantines and eventually
    /// deletes the registration.
    Coupled,
    /// Registrations outlive the telephone number.
    Decoupled,
}

impl fmt::Display for LifecycleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LifecycleMode::Coupled => "coupled",
            LifecycleMode::Decoupled => "decoupled",
        })
    }
}

impl LifecycleMode {
    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "coupled" => LifecycleMode::Coupled,
            "decoupled" => LifecycleMode::Decoupled,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisputeChallenge {
    pub number: E164Number,
    pub challenger: String,
    pub grounds: String,
    pub status: DisputeStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisputeStatus {
    Open,
    UpheldTransferred,
    Denied,
}

impl fmt::Display for DisputeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisputeStatus::Open => "open",
            DisputeStatus::UpheldTransferred => "upheld-transferred",
            DisputeStatus::Denied => "denied",
        })
    }
}

impl DisputeStatus {
    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "open" => DisputeStatus::Open,
            "upheld-transferred" => DisputeStatus::UpheldTransferred,
            "denied" => DisputeStatus::Denied,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisputeOutcome {
    Upheld,
    Denied,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeConfig {
    /// When false, credential checks on register/update are skipped while
    /// the audit trail keeps recording who did what. The threat harness
    /// runs both settings.
    pub enforce_auth: bool,
    pub lifecycle: LifecycleMode,
    pub quarantine_days: u32,
    /// Authorized enrolling authorities for opt-out/mandated provisioning.
    pub authorities: BTreeMap<String, String>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            enforce_auth: true,
            lifecycle: LifecycleMode::Coupled,
            quarantine_days: 30,
            authorities: BTreeMap::new(),
        }
    }
}

/// A whole delegated tree under one apex, plus its assignment oracle,
/// dispute docket, and audit log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumTree {
    tier0: Tier0Zone,
    tier1: BTreeMap<String, Tier1Zone>,
    tier2: BTreeMap<String, Tier2Zone>,
    pub oracle: AssignmentOracle,
    disputes: BTreeMap<E164Number, Vec<DisputeChallenge>>,
    pub audit: AuditLog,
    pub config: TreeConfig,
}

impl EnumTree {
    pub fn new(apex: &str, config: TreeConfig) -> Self {
        EnumTree {
            tier0: Tier0Zone::new(apex),
            tier1: BTreeMap::new(),
            tier2: BTreeMap::new(),
            oracle: AssignmentOracle::new(),
            disputes: BTreeMap::new(),
            audit: AuditLog::new(),
            config,
        }
    }

    pub fn apex(&self) -> &str {
        self.tier0.apex()
    }

    pub fn tier0(&self) -> &Tier0Zone {
        &self.tier0
    }

    pub fn tier1(&self, cc: &str) -> Option<&Tier1Zone> {
        self.tier1.get(cc)
    }

    pub fn tier1_zones(&self) -> impl Iterator<Item = &Tier1Zone> {
        self.tier1.values()
    }

    pub fn tier2(&self, provider: &str) -> Option<&Tier2Zone> {
        self.tier2.get(provider)
    }

    pub fn tier2_zones(&self) -> impl Iterator<Item = &Tier2Zone> {
        self.tier2.values()
    }

    pub fn disputes(&self, number: &E164Number) -> &[DisputeChallenge] {
        self.disputes.get(number).map_or(&[], Vec::as_slice)
    }

    /// Every number with dispute history, registered or since purged.
    pub fn disputed_numbers(&self) -> Vec<E164Number> {
        self.disputes.keys().cloned().collect()
    }

    pub fn open_dispute(&self, number: &E164Number) -> Option<&DisputeChallenge> {
        self.disputes(number)
            .iter()
            .find(|c| c.status == DisputeStatus::Open)
    }

    /// Establishes the single designated Tier 1 provider for a country
    /// code without authorizing it at Tier 0. The provider may stage its
    /// national database; nothing under the code resolves until the
    /// nation opts in.
    pub fn designate_tier1(&mut self, cc: &str, provider_id: &str) -> Result<(), RegistryError> {
        if cc.is_empty() || cc.len() > 3 || cc.chars().any(|c| !c.is_ascii_digit()) {
            return Err(RegistryError::InvalidCountryCode(cc.to_string()));
        }
        match self.tier1.get(cc) {
            Some(zone) if zone.provider_id != provider_id => Err(
                RegistryError::Tier1AlreadyDesignated {
                    cc: cc.to_string(),
                    provider: zone.provider_id.clone(),
                },
            ),
            Some(_) => Ok(()),
            None => {
                self.tier1.insert(
                    cc.to_string(),
                    Tier1Zone {
                        country_code: cc.to_string(),
                        provider_id: provider_id.to_string(),
                        delegations: BTreeMap::new(),
                    },
                );
                Ok(())
            }
        }
    }

    /// National opt-in: marks the country code authorized at Tier 0,
    /// delegating it to its single designated Tier 1 provider. Anything
    /// the provider staged beforehand becomes resolvable.
    pub fn authorize_country(
        &mut self,
        cc: &str,
        provider_id: &str,
        actor: &str,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        if cc.is_empty() || cc.len() > 3 || cc.chars().any(|c| !c.is_ascii_digit()) {
            return Err(RegistryError::InvalidCountryCode(cc.to_string()));
        }
        if self.tier0.entries.get(cc).is_some_and(|e| e.authorized) {
            return Err(RegistryError::AlreadyAuthorized(cc.to_string()));
        }
        self.designate_tier1(cc, provider_id)?;
        self.tier0.entries.insert(
            cc.to_string(),
            Tier0Entry {
                authorized: true,
                tier1_provider: Some(provider_id.to_string()),
            },
        );
        let cc_number = E164Number::new(cc).expect("validated digits");
        Ok(self.audit.append(
            now,
            actor,
            "authorize-cc",
            &cc_number,
            format!("tier1={provider_id}"),
        ))
    }

    /// Records an unauthorized country code explicitly (resolution under
    /// it stays empty, which is the point).
    pub fn add_unauthorized_country(&mut self, cc: &str) -> Result<(), RegistryError> {
        if cc.is_empty() || cc.len() > 3 || cc.chars().any(|c| !c.is_ascii_digit()) {
            return Err(RegistryError::InvalidCountryCode(cc.to_string()));
        }
        if self.tier0.entries.contains_key(cc) {
            return Err(RegistryError::AlreadyAuthorized(cc.to_string()));
        }
        self.tier0.entries.insert(
            cc.to_string(),
            Tier0Entry {
                authorized: false,
                tier1_provider: None,
            },
        );
        Ok(())
    }

    /// Tier 1 points a number at the Tier 2 provider that will hold its
    /// records. The provider zone is created on first use.
    pub fn delegate_number(
        &mut self,
        cc: &str,
        number: &E164Number,
        tier2_provider: &str,
        actor: &str,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        let zone = self
            .tier1
            .get_mut(cc)
            .ok_or_else(|| RegistryError::CountryNotAuthorized(cc.to_string()))?;
        if !number.digits().starts_with(cc) {
            return Err(RegistryError::WrongCountryCode {
                number: number.clone(),
                cc: cc.to_string(),
            });
        }
        if zone.delegations.contains_key(number) {
            return Err(RegistryError::AlreadyDelegated(number.clone()));
        }
        zone.delegations
            .insert(number.clone(), tier2_provider.to_string());
        self.tier2
            .entry(tier2_provider.to_string())
            .or_insert_with(|| Tier2Zone::new(tier2_provider));
        Ok(self.audit.append(
            now,
            actor,
            "delegate",
            number,
            format!("tier2={tier2_provider}"),
        ))
    }

    /// The Tier 2 provider a number is delegated to, if any. Custody is
    /// independent of Tier 0 authorization; only resolution gates on it.
    pub fn delegated_provider(&self, number: &E164Number) -> Option<&str> {
        let zone = self
            .tier1
            .values()
            .filter(|z| number.digits().starts_with(&z.country_code))
            .max_by_key(|z| z.country_code.len())?;
        zone.delegation(number)
    }

    /// Finds the registration for a number wherever it is delegated.
    pub fn registration(&self, number: &E164Number) -> Option<&Registration> {
        let provider = self.delegated_provider(number)?;
        self.tier2.get(provider)?.registration(number)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn register(
        &mut self,
        provider: &str,
        number: &E164Number,
        mut registrant: Registrant,
        enrollment: Enrollment,
        record_set: RecordSet,
        mode: ProvisioningMode,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        let delegated = self.delegated_provider(number);
        if delegated != Some(provider) {
            return Err(RegistryError::NotDelegatedHere {
                number: number.clone(),
                provider: provider.to_string(),
            });
        }
        self.check_owner(number, &record_set)?;
        if self
            .tier2
            .get(provider)
            .is_some_and(|z| z.registrations.contains_key(number))
        {
            return Err(RegistryError::DuplicateRegistration(number.clone()));
        }
        let actor = match &enrollment {
            Enrollment::Individual(_) => registrant.id.clone(),
            Enrollment::Authority { id, .. } => id.clone(),
        };
        match self.check_enrollment(number, &registrant, &enrollment, mode) {
            Ok(()) => {}
            Err(err @ RegistryError::AuthFailed(_)) => {
                if self.config.enforce_auth {
                    self.audit.append(
                        now,
                        &actor,
                        "register-denied",
                        number,
                        format!("of={}; reason={err}", registrant.id),
                    );
                    return Err(err);
                }
            }
            // An unassigned number is a fact about the oracle, not an
            // auth gate; it stays fatal even with enforcement off.
            Err(other) => return Err(other),
        }
        // Mirror the oracle's view of the subscription into the
        // registrant record.
        if let Some(entry) = self.oracle.lookup(number) {
            registrant.carrier = entry.carrier.clone();
            registrant.subscription_state = entry.state.clone();
        }
        let registrant_id = registrant.id.clone();
        let enrolled_by = match &enrollment {
            Enrollment::Authority { id, .. } => Some(id.clone()),
            Enrollment::Individual(_) => None,
        };
        let zone = self
            .tier2
            .get_mut(provider)
            .expect("delegation created the provider zone");
        zone.registrations.insert(
            number.clone(),
            Registration {
                registrant,
                record_set,
                mode,
                enrolled_by,
                quarantined_until: None,
            },
        );
        Ok(self.audit.append(
            now,
            &actor,
            "register",
            number,
            format!("of={registrant_id}; mode={mode}"),
        ))
    }

    fn check_enrollment(
        &self,
        number: &E164Number,
        registrant: &Registrant,
        enrollment: &Enrollment,
        mode: ProvisioningMode,
    ) -> Result<(), RegistryError> {
        let auth = |reason: String| RegistryError::AuthFailed(reason);
        match (mode, enrollment) {
            (ProvisioningMode::OptIn, Enrollment::Individual(evidence)) => {
                match verify_assignee(number, evidence, &self.oracle)? {
                    AuthVerdict::Accepted => {
                        // The evidence must vouch for the registering party.
                        let vouched = match evidence.method {
                            oracle::AuthMethod::LidbMatch => evidence
                                .payload
                                .split_once(':')
                                .map(|(_, r)| r)
                                .unwrap_or(&evidence.payload),
                            _ => evidence.payload.as_str(),
                        };
                        if vouched == registrant.id {
                            Ok(())
                        } else {
                            Err(auth(format!(
                                "evidence vouches for {vouched:?}, not {:?}",
                                registrant.id
                            )))
                        }
                    }
                    AuthVerdict::Rejected(reason) => Err(auth(reason)),
                }
            }
            (ProvisioningMode::OptIn, Enrollment::Authority { .. }) => Err(auth(
                "opt-in registration requires the registrant's own evidence".into(),
            )),
            (_, Enrollment::Authority { id, credential }) => {
                match self.config.authorities.get(id) {
                    Some(expected) if expected == credential => Ok(()),
                    Some(_) => Err(auth(format!(
                        "bad credential for enrolling authority {id:?}"
                    ))),
                    None => Err(auth(format!("unknown enrolling authority {id:?}"))),
                }
            }
            (_, Enrollment::Individual(_)) => Err(auth(format!(
                "{mode} enrollment requires an enrolling authority credential"
            ))),
        }
    }

    fn check_owner(&self, number: &E164Number, record_set: &RecordSet) -> Result<(), RegistryError> {
        let expected = to_domain(number, self.apex());
        if record_set.owner() != &expected {
            return Err(RegistryError::RecordSetOwnerMismatch {
                owner: record_set.owner().to_string(),
                number: number.clone(),
                apex: self.apex().to_string(),
            });
        }
        debug_assert_eq!(&from_domain(record_set.owner()), number);
        Ok(())
    }

    /// Replaces a registration's record set. The credential is the
    /// registrant id of record; anything else is denied (and audited)
    /// when enforcement is on, applied-but-audited when it is off.
    pub fn update_records(
        &mut self,
        number: &E164Number,
        credential: &str,
        record_set: RecordSet,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        self.check_owner(number, &record_set)?;
        let provider = self
            .delegated_provider(number)
            .map(str::to_string)
            .ok_or_else(|| RegistryError::NoSuchRegistration(number.clone()))?;
        let zone = self.tier2.get_mut(&provider).expect("delegated provider exists");
        let Some(registration) = zone.registrations.get_mut(number) else {
            return Err(RegistryError::NoSuchRegistration(number.clone()));
        };
        let of_record = registration.registrant.id.clone();
        let authorized = of_record == credential;
        if !authorized && self.config.enforce_auth {
            self.audit.append(
                now,
                credential,
                "update-denied",
                number,
                format!("of={of_record}; authorized=false"),
            );
            return Err(RegistryError::AuthFailed(format!(
                "{credential:?} is not the registrant of record for {number}"
            )));
        }
        registration.record_set = record_set;
        Ok(self.audit.append(
            now,
            credential,
            "update",
            number,
            format!("of={of_record}; authorized={authorized}"),
        ))
    }

    /// Withdrawal from a bulk opt-out enrollment: deletes the record set.
    pub fn opt_out(
        &mut self,
        number: &E164Number,
        credential: &str,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        let provider = self
            .delegated_provider(number)
            .map(str::to_string)
            .ok_or_else(|| RegistryError::NoSuchRegistration(number.clone()))?;
        let zone = self.tier2.get_mut(&provider).expect("delegated provider exists");
        let Some(registration) = zone.registrations.get(number) else {
            return Err(RegistryError::NoSuchRegistration(number.clone()));
        };
        if registration.mode != ProvisioningMode::OptOut {
            return Err(RegistryError::NotOptOutEnrollment(number.clone()));
        }
        let of_record = registration.registrant.id.clone();
        if of_record != credential && self.config.enforce_auth {
            return Err(RegistryError::AuthFailed(format!(
                "{credential:?} is not the registrant of record for {number}"
            )));
        }
        zone.registrations.remove(number);
        Ok(self.audit.append(
            now,
            credential,
            "opt-out",
            number,
            format!("of={of_record}"),
        ))
    }

    /// Ports the telephone number between carriers. Moves the
    /// authentication source of truth; never touches a record set.
    pub fn port_number(
        &mut self,
        number: &E164Number,
        from_carrier: &str,
        to_carrier: &str,
        actor: &str,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        self.oracle.port(number, from_carrier, to_carrier)?;
        if let Some(provider) = self.delegated_provider(number).map(str::to_string) {
            if let Some(reg) = self
                .tier2
                .get_mut(&provider)
                .and_then(|z| z.registrations.get_mut(number))
            {
                reg.registrant.carrier = to_carrier.to_string();
                reg.registrant.subscription_state = SubscriptionState::Ported {
                    to_carrier: to_carrier.to_string(),
                };
            }
        }
        Ok(self.audit.append(
            now,
            actor,
            "port",
            number,
            format!("from={from_carrier}; to={to_carrier}"),
        ))
    }

    /// Marks the telephone number disconnected. In coupled mode the
    /// registration is quarantined (NXDOMAIN immediately) and purged once
    /// the quarantine lapses; in decoupled mode it lives on untouched.
    pub fn disconnect_number(
        &mut self,
        number: &E164Number,
        actor: &str,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        self.oracle.disconnect(number, now)?;
        let lifecycle = self.config.lifecycle;
        let quarantine_days = self.config.quarantine_days;
        let mut detail = format!("lifecycle={lifecycle}");
        if let Some(provider) = self.delegated_provider(number).map(str::to_string) {
            if let Some(reg) = self
                .tier2
                .get_mut(&provider)
                .and_then(|z| z.registrations.get_mut(number))
            {
                reg.registrant.subscription_state = SubscriptionState::Disconnected { at: now };
                if lifecycle == LifecycleMode::Coupled {
                    let until = now.plus_days(i64::from(quarantine_days));
                    reg.quarantined_until = Some(until);
                    detail.push_str(&format!("; quarantined-until={}", until.to_iso8601()));
                }
            }
        }
        Ok(self.audit.append(now, actor, "disconnect", number, detail))
    }

    /// Deletes registrations whose quarantine has lapsed.
    pub fn purge_expired(&mut self, now: Timestamp) -> Vec<E164Number> {
        let mut purged = Vec::new();
        for zone in self.tier2.values_mut() {
            let expired: Vec<E164Number> = zone
                .registrations
                .iter()
                .filter(|(_, r)| r.quarantined_until.is_some_and(|t| t <= now))
                .map(|(n, _)| n.clone())
                .collect();
            for number in expired {
                zone.registrations.remove(&number);
                purged.push(number);
            }
        }
        for number in &purged {
            self.audit
                .append(now, "registry", "purge", number, "quarantine lapsed");
        }
        purged
    }

    pub fn file_dispute(
        &mut self,
        number: &E164Number,
        challenger: &str,
        grounds: &str,
        now: Timestamp,
    ) -> Result<DisputeChallenge, RegistryError> {
        if self.registration(number).is_none() {
            return Err(RegistryError::NoSuchRegistration(number.clone()));
        }
        if self.open_dispute(number).is_some() {
            return Err(RegistryError::OpenChallengeExists(number.clone()));
        }
        let challenge = DisputeChallenge {
            number: number.clone(),
            challenger: challenger.to_string(),
            grounds: grounds.to_string(),
            status: DisputeStatus::Open,
        };
        self.disputes
            .entry(number.clone())
            .or_default()
            .push(challenge.clone());
        self.audit.append(
            now,
            challenger,
            "dispute-file",
            number,
            format!("grounds={grounds}"),
        );
        Ok(challenge)
    }

    /// Resolves the open challenge. Upheld: the registration transfers to
    /// the challenger, keeping the live record set (now under the
    /// challenger's control) and archiving a copy of the pre-transfer
    /// set. Denied: nothing changes.
    pub fn resolve_dispute(
        &mut self,
        number: &E164Number,
        outcome: DisputeOutcome,
        actor: &str,
        now: Timestamp,
    ) -> Result<u64, RegistryError> {
        let challenger = self
            .open_dispute(number)
            .ok_or_else(|| RegistryError::NoOpenChallenge(number.clone()))?
            .challenger
            .clone();
        let (action, detail) = match outcome {
            DisputeOutcome::Denied => {
                self.set_dispute_status(number, DisputeStatus::Denied);
                ("dispute-denied".to_string(), format!("challenger={challenger}"))
            }
            DisputeOutcome::Upheld => {
                let provider = self
                    .delegated_provider(number)
                    .map(str::to_string)
                    .ok_or_else(|| RegistryError::NoSuchRegistration(number.clone()))?;
                let zone = self.tier2.get_mut(&provider).expect("delegated provider exists");
                let Some(registration) = zone.registrations.get_mut(number) else {
                    return Err(RegistryError::NoSuchRegistration(number.clone()));
                };
                let old_registrant = registration.registrant.id.clone();
                zone.archive.push(ArchivedRecordSet {
                    number: number.clone(),
                    record_set: registration.record_set.clone(),
                    reason: format!("dispute transfer to {challenger}"),
                    at: now,
                });
                registration.registrant.id = challenger.clone();
                registration.registrant.display_name = challenger.clone();
                self.set_dispute_status(number, DisputeStatus::UpheldTransferred);
                (
                    "dispute-upheld".to_string(),
                    format!("of={old_registrant}; transferred-to={challenger}"),
                )
            }
        };
        Ok(self.audit.append(now, actor, &action, number, detail))
    }

    fn set_dispute_status(&mut self, number: &E164Number, status: DisputeStatus) {
        if let Some(challenge) = self
            .disputes
            .get_mut(number)
            .and_then(|v| v.iter_mut().find(|c| c.status == DisputeStatus::Open))
        {
            challenge.status = status;
        }
    }

    // Restore plumbing for state loading: reinstates rows verbatim,
    // without auditing or invariant-side effects. The state module is the
    // only caller.

    pub(crate) fn restore_tier0_entry(&mut self, cc: &str, authorized: bool, provider: Option<&str>) {
        self.tier0.entries.insert(
            cc.to_string(),
            Tier0Entry {
                authorized,
                tier1_provider: provider.map(str::to_string),
            },
        );
    }

    pub(crate) fn restore_tier1(&mut self, cc: &str, provider_id: &str) {
        self.tier1.entry(cc.to_string()).or_insert_with(|| Tier1Zone {
            country_code: cc.to_string(),
            provider_id: provider_id.to_string(),
            delegations: BTreeMap::new(),
        });
    }

    pub(crate) fn restore_delegation(&mut self, cc: &str, number: E164Number, provider: &str) -> bool {
        let Some(zone) = self.tier1.get_mut(cc) else {
            return false;
        };
        zone.delegations.insert(number, provider.to_string());
        self.tier2
            .entry(provider.to_string())
            .or_insert_with(|| Tier2Zone::new(provider));
        true
    }

    pub(crate) fn restore_registration(
        &mut self,
        provider: &str,
        number: E164Number,
        registration: Registration,
    ) {
        self.tier2
            .entry(provider.to_string())
            .or_insert_with(|| Tier2Zone::new(provider))
            .registrations
            .insert(number, registration);
    }

    pub(crate) fn restore_archive(&mut self, provider: &str, archived: ArchivedRecordSet) {
        self.tier2
            .entry(provider.to_string())
            .or_insert_with(|| Tier2Zone::new(provider))
            .archive
            .push(archived);
    }

    pub(crate) fn restore_dispute(&mut self, challenge: DisputeChallenge) {
        self.disputes
            .entry(challenge.number.clone())
            .or_default()
            .push(challenge);
    }
}
