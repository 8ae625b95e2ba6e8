//! Resolution flows: tiered walk of a single tree, extension-tagged
//! routing, metasearch across every known root, bookmarking, and
//! TTL-bounded caching.
//!
//! The delegation walk is always explicit — Tier 0, then the country-code
//! zone, then the owner domain — so `queried_zones` records one entry per
//! delegation step. Only leaf record sets are cached; existence is always
//! re-derived from the walk, content may be served stale until expiry.
//!
//! Resolution is read-only. With the `parallel` feature (default), the
//! batch entry points fan out over rayon; root order and result order
//! stay deterministic either way.

pub mod cache;
pub mod roots;

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::clock::Timestamp;
use crate::e164::{classify_dial_string, to_domain, DialString, E164Error, E164Number, NumberClass};
use crate::naptr::{select_services, ContactUri, NaptrError, RecordSet};
use crate::registry::EnumTree;
use crate::wire;
use cache::ResolverCache;
use roots::{Backend, Bookmark, BookmarkStore, RootConfig};

/// Why a name does not exist. Every variant surfaces as the same
/// NXDOMAIN-class outcome; the reason records which rung of the
/// delegation ladder was missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NxReason {
    /// The country code is present but not nationally authorized; an
    /// unauthorized zone is never populated.
    UnauthorizedCountry,
    /// No country code in the tree prefixes the number.
    NoCountryDelegation,
    /// The national zone has no delegation for the number.
    NotDelegated,
    /// Delegated, but the provider holds no record set.
    NoRecordSet,
    /// A coupled-mode disconnect put the registration in quarantine.
    Quarantined,
    /// A remote server answered RCODE 3.
    RcodeNxDomain,
    /// No configured root had a hit.
    NoRootHit,
}

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("NXDOMAIN for {domain} ({reason:?})")]
    NxDomain {
        domain: String,
        reason: NxReason,
        queried_zones: Vec<String>,
    },
    #[error("record set exists but no record was applicable")]
    NoRecords { queried_zones: Vec<String> },
    #[error("root id {0} is not configured")]
    UnknownRootId(u32),
    #[error("timed out querying {endpoint}")]
    Timeout { endpoint: String },
    #[error("server returned rcode {rcode}")]
    ServerFailure { rcode: u8 },
    #[error(transparent)]
    Wire(#[from] wire::WireError),
    #[error(transparent)]
    Naptr(NaptrError),
    #[error(transparent)]
    Dial(#[from] E164Error),
}

impl ResolveError {
    /// True for the NXDOMAIN-class outcomes (nothing is registered at
    /// the name).
    pub fn is_nxdomain(&self) -> bool {
        matches!(self, ResolveError::NxDomain { .. })
    }

    /// True when resolution produced no contacts, whether the name was
    /// absent or its records were all inapplicable.
    pub fn is_empty_outcome(&self) -> bool {
        matches!(
            self,
            ResolveError::NxDomain { .. } | ResolveError::NoRecords { .. }
        )
    }
}

/// The outcome of a successful resolution: ordered contacts plus the
/// zones walked to find them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionResult {
    pub number: E164Number,
    pub root_id: u32,
    pub contacts: Vec<ContactUri>,
    pub from_cache: bool,
    pub queried_zones: Vec<String>,
}

/// Resolves a number against one configured root.
pub fn resolve(
    cfg: &RootConfig,
    root_id: u32,
    number: &E164Number,
    service_filter: Option<&str>,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Result<ResolutionResult, ResolveError> {
    let root = cfg.get(root_id).ok_or(ResolveError::UnknownRootId(root_id))?;
    match &root.backend {
        Backend::Local(tree) => resolve_in_tree(tree, root_id, number, service_filter, cache, now),
        Backend::Remote {
            endpoint,
            timeout,
            retries,
        } => resolve_remote(
            &root.apex,
            endpoint,
            *timeout,
            *retries,
            root_id,
            number,
            service_filter,
            cache,
            now,
        ),
    }
}

/// The tiered walk over an in-process tree.
pub fn resolve_in_tree(
    tree: &EnumTree,
    root_id: u32,
    number: &E164Number,
    service_filter: Option<&str>,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Result<ResolutionResult, ResolveError> {
    let apex = tree.apex().to_string();
    let owner = to_domain(number, &apex);
    let owner_text = owner.to_string();
    let mut queried_zones = vec![apex.clone()];

    let nx = |reason, domain: &str, zones: &[String]| ResolveError::NxDomain {
        domain: domain.to_string(),
        reason,
        queried_zones: zones.to_vec(),
    };

    // Tier 0: longest matching country code.
    let Some((cc, entry)) = tree.tier0().country_match(number) else {
        return Err(nx(NxReason::NoCountryDelegation, &owner_text, &queried_zones));
    };
    if !entry.authorized {
        return Err(nx(NxReason::UnauthorizedCountry, &owner_text, &queried_zones));
    }
    let cc_zone = format!(
        "{}.{apex}",
        cc.chars().rev().map(String::from).collect::<Vec<_>>().join(".")
    );
    queried_zones.push(cc_zone);

    // Tier 1: the number's delegation.
    let tier1 = tree
        .tier1(cc)
        .expect("authorized country codes have a Tier 1 zone");
    let Some(provider) = tier1.delegation(number) else {
        return Err(nx(NxReason::NotDelegated, &owner_text, &queried_zones));
    };
    queried_zones.push(owner_text.clone());

    // Tier 2: record custody.
    let zone = tree
        .tier2(provider)
        .expect("delegations target existing providers");
    let Some(registration) = zone.registration(number) else {
        return Err(nx(NxReason::NoRecordSet, &owner_text, &queried_zones));
    };
    if registration.quarantined_until.is_some() {
        return Err(nx(NxReason::Quarantined, &owner_text, &queried_zones));
    }

    // Content is fetched cache-first; existence was derived above.
    let (record_set, from_cache) = match cache.and_then(|c| c.get(root_id, &owner_text, now)) {
        Some(snapshot) => (snapshot, true),
        None => {
            let snapshot = registration.record_set.clone();
            if let Some(c) = cache {
                c.put(root_id, &owner_text, snapshot.clone(), now);
            }
            (snapshot, false)
        }
    };

    finish(number, root_id, &record_set, service_filter, from_cache, queried_zones)
}

#[allow(clippy::too_many_arguments)]
fn resolve_remote(
    apex: &str,
    endpoint: &str,
    timeout: std::time::Duration,
    retries: u32,
    root_id: u32,
    number: &E164Number,
    service_filter: Option<&str>,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Result<ResolutionResult, ResolveError> {
    let owner = to_domain(number, apex);
    let owner_text = owner.to_string();
    let queried_zones = vec![owner_text.clone()];

    let (record_set, from_cache) = match cache.and_then(|c| c.get(root_id, &owner_text, now)) {
        Some(snapshot) => (snapshot, true),
        None => {
            let query = wire::encode_query(&owner_text, wire::random_query_id())?;
            let response = wire::udp_exchange(endpoint, &query, timeout, retries).map_err(
                |err| match err {
                    wire::WireError::Timeout { endpoint, .. } => ResolveError::Timeout { endpoint },
                    other => ResolveError::Wire(other),
                },
            )?;
            let message = wire::decode_message(&response)?;
            if message.flags.rcode == wire::RCODE_NXDOMAIN {
                return Err(ResolveError::NxDomain {
                    domain: owner_text,
                    reason: NxReason::RcodeNxDomain,
                    queried_zones,
                });
            }
            if message.flags.rcode != 0 {
                return Err(ResolveError::ServerFailure {
                    rcode: message.flags.rcode,
                });
            }
            let mut records = Vec::new();
            let mut ttl = u32::MAX;
            for answer in &message.answers {
                if let Some(naptr) = &answer.naptr {
                    ttl = ttl.min(answer.ttl);
                    records.push(
                        naptr
                            .to_record(crate::naptr::ere::PlusMode::Lenient)
                            .map_err(ResolveError::Naptr)?,
                    );
                }
            }
            if records.is_empty() {
                return Err(ResolveError::NoRecords { queried_zones });
            }
            let ttl = if ttl == u32::MAX { 0 } else { ttl };
            let snapshot = RecordSet::new(owner, u64::from(ttl), records);
            if let Some(c) = cache {
                c.put(root_id, &owner_text, snapshot.clone(), now);
            }
            (snapshot, false)
        }
    };

    finish(number, root_id, &record_set, service_filter, from_cache, queried_zones)
}

fn finish(
    number: &E164Number,
    root_id: u32,
    record_set: &RecordSet,
    service_filter: Option<&str>,
    from_cache: bool,
    queried_zones: Vec<String>,
) -> Result<ResolutionResult, ResolveError> {
    match select_services(record_set, &number.to_aus(), service_filter) {
        Ok(contacts) => Ok(ResolutionResult {
            number: number.clone(),
            root_id,
            contacts,
            from_cache,
            queried_zones,
        }),
        Err(NaptrError::NoApplicableRecords) => Err(ResolveError::NoRecords { queried_zones }),
        Err(other) => Err(ResolveError::Naptr(other)),
    }
}

/// What dialing a raw string did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DialOutcome {
    /// An access code: the device handles it, the database is never
    /// consulted (hence no queried zones at all).
    Bypass { code: String },
    Resolved(ResolutionResult),
}

#[derive(Debug, Clone, Default)]
pub struct DialOptions {
    pub access_codes: Vec<String>,
    pub dialing_context: Option<String>,
    pub service_filter: Option<String>,
}

/// Classifies a dialed string and routes it: access codes bypass, `#`
/// extensions pick their root, plain numbers use the default root.
pub fn resolve_dial(
    raw: &DialString,
    cfg: &RootConfig,
    options: &DialOptions,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Result<DialOutcome, ResolveError> {
    let class = classify_dial_string(raw, &options.access_codes, options.dialing_context.as_deref())?;
    let filter = options.service_filter.as_deref();
    match class {
        NumberClass::AccessCode(code) => Ok(DialOutcome::Bypass { code }),
        NumberClass::ExtensionTagged(number, root_id) => {
            if cfg.get(root_id).is_none() {
                return Err(ResolveError::UnknownRootId(root_id));
            }
            resolve(cfg, root_id, &number, filter, cache, now).map(DialOutcome::Resolved)
        }
        NumberClass::E164(number) => {
            resolve(cfg, cfg.default_root, &number, filter, cache, now).map(DialOutcome::Resolved)
        }
    }
}

/// Queries every configured root and returns all hits, tagged with their
/// root. Disagreeing roots are both surfaced; this function takes no
/// position on which is right.
pub fn metasearch(
    cfg: &RootConfig,
    number: &E164Number,
    service_filter: Option<&str>,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Vec<ResolutionResult> {
    let ids = cfg.ids();
    let run = |id: &u32| resolve(cfg, *id, number, service_filter, cache, now).ok();
    #[cfg(feature = "parallel")]
    let hits: Vec<Option<ResolutionResult>> = ids.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let hits: Vec<Option<ResolutionResult>> = ids.iter().map(run).collect();
    hits.into_iter().flatten().collect()
}

/// A bookmark-assisted resolution, reporting which roots were consulted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BookmarkResolution {
    pub result: ResolutionResult,
    /// Roots actually consulted: every root on the first (searching)
    /// call, exactly one once a bookmark exists.
    pub roots_consulted: Vec<u32>,
}

/// First call metasearches and remembers the winning root (lowest id on a
/// tie); later calls go straight to the bookmarked root. A bookmark that
/// yields NXDOMAIN is invalidated; retrying the search is the caller's
/// choice.
pub fn bookmark_and_resolve(
    cfg: &RootConfig,
    number: &E164Number,
    service_filter: Option<&str>,
    store: &mut BookmarkStore,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Result<BookmarkResolution, ResolveError> {
    if let Some(bookmark) = store.get(number).cloned() {
        return match resolve(cfg, bookmark.root_id, number, service_filter, cache, now) {
            Ok(result) => Ok(BookmarkResolution {
                result,
                roots_consulted: vec![bookmark.root_id],
            }),
            Err(err) => {
                if err.is_nxdomain() {
                    store.remove(number);
                }
                Err(err)
            }
        };
    }
    let consulted = cfg.ids();
    let mut hits = metasearch(cfg, number, service_filter, cache, now);
    if hits.is_empty() {
        return Err(ResolveError::NxDomain {
            domain: number.to_aus(),
            reason: NxReason::NoRootHit,
            queried_zones: Vec::new(),
        });
    }
    let result = hits.remove(0);
    store.put(Bookmark {
        number: number.clone(),
        root_id: result.root_id,
        created_at: now,
    });
    Ok(BookmarkResolution {
        result,
        roots_consulted: consulted,
    })
}

/// Batch resolution against one root. Runs on the rayon pool when the
/// `parallel` feature is enabled.
pub fn resolve_many(
    cfg: &RootConfig,
    root_id: u32,
    numbers: &[E164Number],
    service_filter: Option<&str>,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Vec<Result<ResolutionResult, ResolveError>> {
    #[cfg(feature = "parallel")]
    {
        numbers
            .par_iter()
            .map(|n| resolve(cfg, root_id, n, service_filter, cache, now))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        resolve_many_seq(cfg, root_id, numbers, service_filter, cache, now)
    }
}

/// Always-sequential batch resolution; the benchmark baseline.
pub fn resolve_many_seq(
    cfg: &RootConfig,
    root_id: u32,
    numbers: &[E164Number],
    service_filter: Option<&str>,
    cache: Option<&ResolverCache>,
    now: Timestamp,
) -> Vec<Result<ResolutionResult, ResolveError>> {
    numbers
        .iter()
        .map(|n| resolve(cfg, root_id, n, service_filter, cache, now))
        .collect()
}
