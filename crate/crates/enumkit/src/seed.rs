//! Canned fixture world: the sample record set, two independent roots,
//! and the ACME/BETA/CHARLIE cast used by the attack scenarios.
//!
//! Everything here is built through the ordinary registry operations, so
//! a seeded tree carries a genuine audit history. The CLI's `--seed-paper`
//! flag materializes exactly this world.

use crate::clock::Timestamp;
use crate::e164::{to_domain, E164Number};
use crate::naptr::ere::PlusMode;
use crate::naptr::{NaptrRecord, RecordSet, RewriteRule, DEFAULT_TTL};
use crate::registry::oracle::{AuthEvidence, AuthMethod};
use crate::registry::{
    Enrollment, EnumTree, ProvisioningMode, Registrant, TreeConfig,
};
use crate::resolver::roots::{Backend, Root, RootConfig};

/// Joe's number, the worked example throughout.
pub const PAPER_NUMBER: &str = "112025551212";
/// Apex of the default root (root 46).
pub const PAPER_APEX: &str = "e164.foo";
/// Apex of the alternative root (root 36).
pub const ALT_APEX: &str = "e164.com";
pub const DEFAULT_ROOT_ID: u32 = 46;
pub const ALT_ROOT_ID: u32 = 36;
/// Expansion prefix a Washington, D.C. device would apply: `555-1212`
/// becomes `112025551212`.
pub const DIALING_CONTEXT: &str = "11202";
pub const ACCESS_CODES: [&str; 3] = ["911", "411", "711"];

pub const JOE: &str = "johndoe";
pub const JOE_CARRIER: &str = "carrier-a";
/// Joe's sip contact in the alternative root; the two roots deliberately
/// disagree so incompatible-record surfacing is observable.
pub const JOE_ALT_SIP: &str = "sip:johndoe@altroot.example";

pub const ACME: &str = "acme";
pub const ACME_NUMBER: &str = "12025550100";
pub const ACME_SIP: &str = "sip:callcenter@acme.example";
pub const ACME_TEL: &str = "tel:+12025550100";

pub const BETA: &str = "beta";
pub const BETA_SIP: &str = "sip:callcenter@beta.example";
pub const BETA_RELAY: &str = "sip:relay@beta.example";

pub const CHARLIE: &str = "charlie";
pub const CHARLIE_NUMBER: &str = "12025550199";

pub const TIER1_PROVIDER: &str = "t1-us";
pub const TIER2_PROVIDER: &str = "t2-foo";
pub const ALT_TIER1_PROVIDER: &str = "t1-us-alt";
pub const ALT_TIER2_PROVIDER: &str = "t2-com";

/// An enrolling authority for bulk (opt-out / mandated) provisioning.
pub const BULK_AUTHORITY: &str = "bulk-enroller";
pub const BULK_CREDENTIAL: &str = "bulk-secret";

/// All seeding happens at this instant.
pub fn seed_time() -> Timestamp {
    Timestamp::parse_iso8601("2001-08-14T00:00:00Z").expect("valid timestamp")
}

pub fn paper_number() -> E164Number {
    E164Number::new(PAPER_NUMBER).expect("valid digits")
}

fn record(
    order: u16,
    preference: u16,
    service: &str,
    pattern: &str,
    substitution: &str,
) -> NaptrRecord {
    let rule = RewriteRule::new('!', pattern, substitution, PlusMode::Lenient)
        .expect("fixture rule compiles");
    NaptrRecord::new(order, preference, "u", service, rule, ".").expect("fixture record is valid")
}

/// The sample record set, verbatim: tel at order 102, sip at 10, mailto
/// at 100 with the pattern `^$` that can never match a non-empty input.
pub fn paper_record_set(apex: &str) -> RecordSet {
    RecordSet::new(
        to_domain(&paper_number(), apex),
        DEFAULT_TTL,
        vec![
            record(102, 10, "tel+E2U", "^.*$", "tel:+112025551212"),
            record(10, 10, "sip+E2U", "+(.*)", "sip:johndoe@company.com"),
            record(100, 10, "mailto+E2U", "^$", "mailto:johndoe@company.com"),
        ],
    )
}

/// The corrected variant of the fixture: identical except the mailto
/// pattern is `^.*$`, so the mailto contact surfaces between sip and tel.
pub fn corrected_record_set(apex: &str) -> RecordSet {
    RecordSet::new(
        to_domain(&paper_number(), apex),
        DEFAULT_TTL,
        vec![
            record(102, 10, "tel+E2U", "^.*$", "tel:+112025551212"),
            record(10, 10, "sip+E2U", "+(.*)", "sip:johndoe@company.com"),
            record(100, 10, "mailto+E2U", "^.*$", "mailto:johndoe@company.com"),
        ],
    )
}

pub fn acme_record_set(apex: &str) -> RecordSet {
    let number = E164Number::new(ACME_NUMBER).expect("valid digits");
    RecordSet::new(
        to_domain(&number, apex),
        DEFAULT_TTL,
        vec![
            record(10, 10, "sip+E2U", "^.*$", ACME_SIP),
            record(100, 10, "tel+E2U", "^.*$", ACME_TEL),
        ],
    )
}

fn registrant(id: &str, carrier: &str) -> Registrant {
    Registrant {
        id: id.to_string(),
        display_name: id.to_string(),
        subscription_state: crate::registry::oracle::SubscriptionState::Active,
        carrier: carrier.to_string(),
    }
}

fn callback(registrant_id: &str, number: &E164Number) -> Enrollment {
    Enrollment::Individual(AuthEvidence::new(
        AuthMethod::CallbackCompleted,
        registrant_id,
        number.clone(),
    ))
}

/// The default root's tree: cc 1 authorized, 44 present but
/// unauthorized, Joe and ACME registered, CHARLIE assigned but never
/// registered.
pub fn paper_tree() -> EnumTree {
    let now = seed_time();
    let mut config = TreeConfig::default();
    config
        .authorities
        .insert(BULK_AUTHORITY.to_string(), BULK_CREDENTIAL.to_string());
    let mut tree = EnumTree::new(PAPER_APEX, config);

    tree.authorize_country("1", TIER1_PROVIDER, "seed", now)
        .expect("fresh tree");
    tree.add_unauthorized_country("44").expect("fresh tree");

    let joe_number = paper_number();
    let acme_number = E164Number::new(ACME_NUMBER).expect("valid digits");
    let charlie_number = E164Number::new(CHARLIE_NUMBER).expect("valid digits");

    tree.oracle.assign(joe_number.clone(), JOE, JOE_CARRIER);
    tree.oracle.assign(acme_number.clone(), ACME, JOE_CARRIER);
    tree.oracle.assign(charlie_number.clone(), CHARLIE, "carrier-b");

    for number in [&joe_number, &acme_number, &charlie_number] {
        tree.delegate_number("1", number, TIER2_PROVIDER, "seed", now)
            .expect("fresh tree");
    }

    tree.register(
        TIER2_PROVIDER,
        &joe_number,
        registrant(JOE, JOE_CARRIER),
        callback(JOE, &joe_number),
        paper_record_set(PAPER_APEX),
        ProvisioningMode::OptIn,
        now,
    )
    .expect("seeding joe");
    tree.register(
        TIER2_PROVIDER,
        &acme_number,
        registrant(ACME, JOE_CARRIER),
        callback(ACME, &acme_number),
        acme_record_set(PAPER_APEX),
        ProvisioningMode::OptIn,
        now,
    )
    .expect("seeding acme");
    tree
}

/// The alternative root's tree: only Joe, with a different sip contact.
pub fn alt_tree() -> EnumTree {
    let now = seed_time();
    let mut tree = EnumTree::new(ALT_APEX, TreeConfig::default());
    tree.authorize_country("1", ALT_TIER1_PROVIDER, "seed", now)
        .expect("fresh tree");
    let joe_number = paper_number();
    tree.oracle.assign(joe_number.clone(), JOE, JOE_CARRIER);
    tree.delegate_number("1", &joe_number, ALT_TIER2_PROVIDER, "seed", now)
        .expect("fresh tree");
    tree.register(
        ALT_TIER2_PROVIDER,
        &joe_number,
        registrant(JOE, JOE_CARRIER),
        callback(JOE, &joe_number),
        RecordSet::new(
            to_domain(&joe_number, ALT_APEX),
            DEFAULT_TTL,
            vec![record(10, 10, "sip+E2U", "^.*$", JOE_ALT_SIP)],
        ),
        ProvisioningMode::OptIn,
        now,
    )
    .expect("seeding joe in the alt root");
    tree
}

/// Both roots, default 46.
pub fn paper_root_config() -> RootConfig {
    let mut cfg = RootConfig::new(DEFAULT_ROOT_ID);
    cfg.insert(
        DEFAULT_ROOT_ID,
        Root {
            apex: PAPER_APEX.to_string(),
            backend: Backend::Local(paper_tree()),
        },
    );
    cfg.insert(
        ALT_ROOT_ID,
        Root {
            apex: ALT_APEX.to_string(),
            backend: Backend::Local(alt_tree()),
        },
    );
    cfg
}

pub fn access_codes() -> Vec<String> {
    ACCESS_CODES.iter().map(|s| s.to_string()).collect()
}

/// The fixture zone in canonical master-file form.
pub fn paper_zone_text() -> String {
    use crate::naptr::zonefile::{serialize_zone, ZoneFile, ZoneSection};
    let set = paper_record_set(PAPER_APEX);
    serialize_zone(&ZoneFile {
        sections: vec![ZoneSection {
            origin: set.owner().to_string(),
            ttl: set.ttl_seconds(),
            records: set.records().to_vec(),
        }],
    })
}
