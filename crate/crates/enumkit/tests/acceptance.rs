//! Acceptance suite. Each test covers one numbered criterion and prints
//! one PASS line (visible with `cargo test --test acceptance -- --nocapture`).
//! The tenth criterion exercises the command-line binary and lives in the
//! CLI crate's acceptance suite.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use enumkit::clock::Timestamp;
use enumkit::e164::{from_domain, to_domain, E164Number};
use enumkit::naptr::ere::PlusMode;
use enumkit::naptr::{
    select_services, ContactUri, NaptrError, NaptrRecord, RecordSet, RewriteRule, DEFAULT_TTL,
};
use enumkit::registry::oracle::{AuthEvidence, AuthMethod};
use enumkit::registry::{
    Enrollment, EnumTree, LifecycleMode, ProvisioningMode, Registrant, TreeConfig,
};
use enumkit::resolver::cache::ResolverCache;
use enumkit::resolver::roots::{Backend, Root, RootConfig};
use enumkit::resolver::{
    metasearch, resolve, resolve_dial, resolve_many, DialOptions, DialOutcome, NxReason,
    ResolveError,
};
use enumkit::seed;
use enumkit::threat::{run_dos, run_eavesdrop, run_hijack, ThreatEnv};
use enumkit::wire;

fn t(secs: i64) -> Timestamp {
    Timestamp::from_unix(secs)
}

fn uris(contacts: &[ContactUri]) -> Vec<String> {
    contacts.iter().map(ToString::to_string).collect()
}

#[test]
fn c01_golden_conversion_and_round_trip() {
    // Byte-exact golden conversions under both apexes.
    let number = E164Number::new("112025551212").unwrap();
    assert_eq!(
        to_domain(&number, "e164.foo").to_string(),
        "2.1.2.1.5.5.5.2.0.2.1.1.e164.foo"
    );
    assert_eq!(
        to_domain(&number, "e164.arpa").to_string(),
        "2.1.2.1.5.5.5.2.0.2.1.1.e164.arpa"
    );

    // Round trip over 10,000 random valid numbers, zero failures.
    let mut rng = StdRng::seed_from_u64(0x0e164);
    let apexes = ["e164.foo", "e164.arpa", "e164.test"];
    for i in 0..10_000 {
        let len = rng.random_range(1..=15);
        let digits: String = (0..len)
            .map(|_| char::from(b'0' + rng.random_range(0..10)))
            .collect();
        let n = E164Number::new(digits.clone()).unwrap();
        let apex = apexes[i % apexes.len()];
        let domain = to_domain(&n, apex);
        // Independent oracle: naive reverse-and-join.
        let expected: Vec<String> = digits.chars().rev().map(String::from).collect();
        assert_eq!(domain.to_string(), format!("{}.{apex}", expected.join(".")));
        assert_eq!(from_domain(&domain), n);
    }
    println!("PASS criterion 1: golden conversion byte-exact; 10,000 round trips, zero failures");
}

#[test]
fn c02_golden_resolution_with_verbatim_and_corrected_fixtures() {
    let cfg = seed::paper_root_config();
    let now = seed::seed_time();
    let number = seed::paper_number();

    // Verbatim fixture: sip first, tel last, mailto skipped because its
    // pattern "^$" cannot match a non-empty input.
    let result = resolve(&cfg, seed::DEFAULT_ROOT_ID, &number, None, None, now).unwrap();
    assert_eq!(
        uris(&result.contacts),
        ["sip:johndoe@company.com", "tel:+112025551212"]
    );

    // Corrected fixture: mailto surfaces between them (orders 10 < 100 < 102).
    let corrected = select_services(
        &seed::corrected_record_set(seed::PAPER_APEX),
        &number.to_aus(),
        None,
    )
    .unwrap();
    assert_eq!(
        uris(&corrected),
        [
            "sip:johndoe@company.com",
            "mailto:johndoe@company.com",
            "tel:+112025551212"
        ]
    );
    println!("PASS criterion 2: golden resolution ordering exact for verbatim and corrected fixtures");
}

/// Builds a randomized tree: 3 country codes, 2 Tier 2 providers each,
/// `count` registered numbers. Returns the tree plus every registered
/// number.
fn randomized_tree(rng: &mut StdRng, count: usize) -> (EnumTree, Vec<E164Number>) {
    let ccs = ["1", "44", "358"];
    let mut tree = EnumTree::new("e164.test", TreeConfig::default());
    let now = t(0);
    for cc in ccs {
        tree.authorize_country(cc, &format!("t1-{cc}"), "seed", now).unwrap();
    }
    tree.add_unauthorized_country("7").unwrap();

    let matching_patterns = ["^.*$", "+(.*)", "^\\+[0-9]*$"];
    let schemes = ["sip", "tel", "mailto", "http"];

    let mut numbers = Vec::with_capacity(count);
    let mut seen = std::collections::BTreeSet::new();
    while numbers.len() < count {
        let cc = ccs[rng.random_range(0..ccs.len())];
        let rest_len = rng.random_range(5..=(15 - cc.len()));
        let rest: String = (0..rest_len)
            .map(|_| char::from(b'0' + rng.random_range(0..10)))
            .collect();
        let digits = format!("{cc}{rest}");
        if !seen.insert(digits.clone()) {
            continue;
        }
        let number = E164Number::new(digits).unwrap();
        let provider = format!("t2-{cc}-{}", rng.random_range(0..2));
        let registrant_id = format!("reg-{}", numbers.len());
        tree.oracle.assign(number.clone(), &registrant_id, "carrier-x");
        tree.delegate_number(cc, &number, &provider, "seed", now).unwrap();

        // 1-3 records; occasionally every rule is unmatchable, so the
        // flat oracle and the resolver must agree on the error too.
        let record_count = rng.random_range(1..=3);
        let all_dead = rng.random_range(0..25) == 0;
        let records: Vec<NaptrRecord> = (0..record_count)
            .map(|i| {
                let pattern = if all_dead {
                    "^$"
                } else {
                    matching_patterns[rng.random_range(0..matching_patterns.len())]
                };
                let scheme = schemes[rng.random_range(0..schemes.len())];
                let rule = RewriteRule::new(
                    '!',
                    pattern,
                    &format!("{scheme}:user{i}@host{}", rng.random_range(0..100)),
                    PlusMode::Lenient,
                )
                .unwrap();
                NaptrRecord::new(
                    rng.random_range(0..200),
                    rng.random_range(0..20),
                    "u",
                    &format!("{scheme}+E2U"),
                    rule,
                    ".",
                )
                .unwrap()
            })
            .collect();
        let set = RecordSet::new(to_domain(&number, tree.apex()), DEFAULT_TTL, records);
        tree.register(
            &provider,
            &number,
            Registrant {
                id: registrant_id.clone(),
                display_name: registrant_id.clone(),
                subscription_state: enumkit::registry::oracle::SubscriptionState::Active,
                carrier: "carrier-x".into(),
            },
            Enrollment::Individual(AuthEvidence::new(
                AuthMethod::CallbackCompleted,
                &registrant_id,
                number.clone(),
            )),
            set,
            ProvisioningMode::OptIn,
            now,
        )
        .unwrap();
        numbers.push(number);
    }
    (tree, numbers)
}

#[test]
fn c03_oracle_equivalence_on_randomized_tree() {
    let mut rng = StdRng::seed_from_u64(0xacce55);
    let (tree, registered) = randomized_tree(&mut rng, 1000);

    // Flat-map oracle built directly from Tier 2 state.
    let mut flat: BTreeMap<E164Number, Result<Vec<ContactUri>, ()>> = BTreeMap::new();
    for zone in tree.tier2_zones() {
        for (number, registration) in zone.registrations() {
            let selected = select_services(&registration.record_set, &number.to_aus(), None);
            let entry = match selected {
                Ok(contacts) => Ok(contacts),
                Err(NaptrError::NoApplicableRecords) => Err(()),
                Err(other) => panic!("unexpected selection failure: {other}"),
            };
            flat.insert(number.clone(), entry);
        }
    }
    assert_eq!(flat.len(), 1000);

    let mut cfg = RootConfig::new(1);
    cfg.insert(
        1,
        Root {
            apex: "e164.test".into(),
            backend: Backend::Local(tree),
        },
    );

    // Every registered number agrees with the oracle (batch API).
    let outcomes = resolve_many(&cfg, 1, &registered, None, None, t(10));
    for (number, outcome) in registered.iter().zip(outcomes) {
        match (&flat[number], outcome) {
            (Ok(expected), Ok(result)) => assert_eq!(&result.contacts, expected, "{number}"),
            (Err(()), Err(ResolveError::NoRecords { .. })) => {}
            (expected, got) => panic!("{number}: oracle {expected:?} vs resolver {got:?}"),
        }
    }

    // 1,000 unregistered probes all come back NXDOMAIN.
    let registered_set: std::collections::BTreeSet<&str> =
        registered.iter().map(|n| n.digits()).collect();
    let mut probes = 0;
    while probes < 1000 {
        let len = rng.random_range(1..=15);
        let digits: String = (0..len)
            .map(|_| char::from(b'0' + rng.random_range(0..10)))
            .collect();
        if registered_set.contains(digits.as_str()) {
            continue;
        }
        let number = E164Number::new(digits).unwrap();
        let err = resolve(&cfg, 1, &number, None, None, t(10)).unwrap_err();
        assert!(err.is_nxdomain(), "{number}: {err}");
        probes += 1;
    }
    println!("PASS criterion 3: resolver equals the flat-map oracle on 1,000 numbers; 1,000 probes NXDOMAIN");
}

#[test]
fn c04_authorization_gate() {
    // A Tier 1 provider stages its national data before the nation opts
    // in; nothing under the code resolves until authorization lands.
    let mut tree = EnumTree::new("e164.test", TreeConfig::default());
    let now = t(0);
    tree.add_unauthorized_country("49").unwrap();
    tree.designate_tier1("49", "t1-de").unwrap();

    let mut numbers = Vec::new();
    for i in 0..20 {
        let number = E164Number::new(format!("49301000{i:02}")).unwrap();
        let registrant = format!("de-reg-{i}");
        tree.oracle.assign(number.clone(), &registrant, "de-carrier");
        tree.delegate_number("49", &number, "t2-de", "seed", now).unwrap();
        let rule = RewriteRule::new('!', "^.*$", &format!("sip:u{i}@de.example"), PlusMode::Lenient)
            .unwrap();
        let set = RecordSet::new(
            to_domain(&number, "e164.test"),
            DEFAULT_TTL,
            vec![NaptrRecord::new(10, 10, "u", "sip+E2U", rule, ".").unwrap()],
        );
        tree.register(
            "t2-de",
            &number,
            Registrant {
                id: registrant.clone(),
                display_name: registrant.clone(),
                subscription_state: enumkit::registry::oracle::SubscriptionState::Active,
                carrier: "de-carrier".into(),
            },
            Enrollment::Individual(AuthEvidence::new(
                AuthMethod::CallbackCompleted,
                &registrant,
                number.clone(),
            )),
            set,
            ProvisioningMode::OptIn,
            now,
        )
        .unwrap();
        numbers.push(number);
    }

    let mut cfg = RootConfig::new(1);
    cfg.insert(
        1,
        Root {
            apex: "e164.test".into(),
            backend: Backend::Local(tree),
        },
    );

    for number in &numbers {
        let err = resolve(&cfg, 1, number, None, None, t(5)).unwrap_err();
        assert!(
            matches!(
                err,
                ResolveError::NxDomain {
                    reason: NxReason::UnauthorizedCountry,
                    ..
                }
            ),
            "{number}: {err}"
        );
    }

    // National opt-in flips the gate; the staged numbers now resolve.
    cfg.local_tree_mut(1)
        .unwrap()
        .authorize_country("49", "t1-de", "itu", t(6))
        .unwrap();
    for number in &numbers {
        let result = resolve(&cfg, 1, number, None, None, t(7)).unwrap();
        assert_eq!(result.contacts.len(), 1);
    }
    println!("PASS criterion 4: unauthorized country codes resolve NXDOMAIN until authorize_country");
}

#[test]
fn c05_multi_root_extension_routing_and_metasearch() {
    let now = seed::seed_time();
    let number = seed::paper_number();

    // Extension routing: "5551212#36" touches only root 36's zones.
    let cfg = seed::paper_root_config();
    let options = DialOptions {
        access_codes: seed::access_codes(),
        dialing_context: Some(seed::DIALING_CONTEXT.into()),
        service_filter: None,
    };
    let dialed = enumkit::DialString::new("5551212#36").unwrap();
    let outcome = resolve_dial(&dialed, &cfg, &options, None, now).unwrap();
    let DialOutcome::Resolved(result) = outcome else {
        panic!("extension dial must resolve");
    };
    assert_eq!(result.root_id, seed::ALT_ROOT_ID);
    assert!(
        result
            .queried_zones
            .iter()
            .all(|z| z.ends_with(seed::ALT_APEX)),
        "only root 36 zones may be touched: {:?}",
        result.queried_zones
    );

    // Metasearch hit set is identical under both root-file orderings.
    let hit_set = |cfg: &RootConfig| -> std::collections::BTreeSet<(u32, Vec<String>)> {
        metasearch(cfg, &number, None, None, now)
            .into_iter()
            .map(|r| (r.root_id, uris(&r.contacts)))
            .collect()
    };
    let forward = hit_set(&cfg);

    // Same roots, inserted in the opposite order.
    let mut reversed = RootConfig::new(seed::DEFAULT_ROOT_ID);
    reversed.insert(
        seed::DEFAULT_ROOT_ID,
        Root {
            apex: seed::PAPER_APEX.into(),
            backend: Backend::Local(seed::paper_tree()),
        },
    );
    reversed.insert(
        seed::ALT_ROOT_ID,
        Root {
            apex: seed::ALT_APEX.into(),
            backend: Backend::Local(seed::alt_tree()),
        },
    );
    assert_eq!(forward, hit_set(&reversed));

    // A number registered in both roots with different URIs yields two
    // results, both surfaced.
    assert_eq!(forward.len(), 2);
    let contact_sets: Vec<Vec<String>> = forward.iter().map(|(_, c)| c.clone()).collect();
    assert_ne!(contact_sets[0], contact_sets[1], "roots deliberately disagree");
    println!("PASS criterion 5: extension routing isolated to root 36; metasearch set-equal under orderings; both hits surfaced");
}

#[test]
fn c06_ttl_staleness_window() {
    let mut cfg = seed::paper_root_config();
    let number = seed::paper_number();
    let owner = to_domain(&number, seed::PAPER_APEX);
    let make_set = |uri: &str| {
        RecordSet::new(
            owner.clone(),
            300,
            vec![NaptrRecord::new(
                10,
                10,
                "u",
                "sip+E2U",
                RewriteRule::new('!', "^.*$", uri, PlusMode::Lenient).unwrap(),
                ".",
            )
            .unwrap()],
        )
    };

    cfg.local_tree_mut(seed::DEFAULT_ROOT_ID)
        .unwrap()
        .update_records(&number, seed::JOE, make_set("sip:old@company.com"), t(-30))
        .unwrap();

    let cache = ResolverCache::new();
    let fill = resolve(&cfg, seed::DEFAULT_ROOT_ID, &number, None, Some(&cache), t(-10)).unwrap();
    assert!(!fill.from_cache);
    assert_eq!(uris(&fill.contacts), ["sip:old@company.com"]);

    // Registry update at t=0; the cache entry filled at t=-10 expires at 290.
    cfg.local_tree_mut(seed::DEFAULT_ROOT_ID)
        .unwrap()
        .update_records(&number, seed::JOE, make_set("sip:new@company.com"), t(0))
        .unwrap();

    for probe in [1, 60, 150, 289] {
        let read =
            resolve(&cfg, seed::DEFAULT_ROOT_ID, &number, None, Some(&cache), t(probe)).unwrap();
        assert!(read.from_cache, "read at t={probe} must be cached");
        assert_eq!(uris(&read.contacts), ["sip:old@company.com"], "t={probe}");
    }
    // Entries are served strictly before expires_at: t=290 re-fetches.
    let boundary =
        resolve(&cfg, seed::DEFAULT_ROOT_ID, &number, None, Some(&cache), t(290)).unwrap();
    assert!(!boundary.from_cache);
    assert_eq!(uris(&boundary.contacts), ["sip:new@company.com"]);
    let later = resolve(&cfg, seed::DEFAULT_ROOT_ID, &number, None, Some(&cache), t(300)).unwrap();
    assert_eq!(uris(&later.contacts), ["sip:new@company.com"]);
    println!("PASS criterion 6: stale reads through t=289, fresh from the 290 expiry and at t=300");
}

#[test]
fn c07_lifecycle_coupled_decoupled_and_portability() {
    let now = seed::seed_time();

    // Coupled disconnect: NXDOMAIN immediately.
    let mut coupled = seed::paper_root_config();
    coupled
        .local_tree_mut(seed::DEFAULT_ROOT_ID)
        .unwrap()
        .disconnect_number(&seed::paper_number(), "carrier-a", now)
        .unwrap();
    let err = resolve(&coupled, seed::DEFAULT_ROOT_ID, &seed::paper_number(), None, None, now)
        .unwrap_err();
    assert!(err.is_nxdomain());

    // Decoupled disconnect: resolution unchanged.
    let mut decoupled = seed::paper_root_config();
    let before = resolve(
        &decoupled,
        seed::DEFAULT_ROOT_ID,
        &seed::paper_number(),
        None,
        None,
        now,
    )
    .unwrap();
    {
        let tree = decoupled.local_tree_mut(seed::DEFAULT_ROOT_ID).unwrap();
        tree.config.lifecycle = LifecycleMode::Decoupled;
        tree.disconnect_number(&seed::paper_number(), "carrier-a", now).unwrap();
    }
    let after = resolve(
        &decoupled,
        seed::DEFAULT_ROOT_ID,
        &seed::paper_number(),
        None,
        None,
        now,
    )
    .unwrap();
    assert_eq!(before.contacts, after.contacts);

    // Portability: the verifying carrier moves, not one record byte.
    let mut ported = seed::paper_root_config();
    let serialize_all = |cfg: &RootConfig| -> Vec<String> {
        let tree = cfg.local_tree(seed::DEFAULT_ROOT_ID).unwrap();
        tree.tier2_zones()
            .flat_map(|z| z.registrations())
            .flat_map(|(_, reg)| reg.record_set.records().iter().map(enumkit::naptr::serialize_record))
            .collect()
    };
    let bytes_before = serialize_all(&ported);
    {
        let tree = ported.local_tree_mut(seed::DEFAULT_ROOT_ID).unwrap();
        tree.port_number(&seed::paper_number(), seed::JOE_CARRIER, "carrier-b", "carrier-b", now)
            .unwrap();
        // The new carrier's LIDB now vouches; the old one no longer does.
        let new_lidb = AuthEvidence::new(
            AuthMethod::LidbMatch,
            "carrier-b:johndoe",
            seed::paper_number(),
        );
        assert!(enumkit::registry::oracle::verify_assignee(
            &seed::paper_number(),
            &new_lidb,
            &tree.oracle
        )
        .unwrap()
        .is_accepted());
        let old_lidb = AuthEvidence::new(
            AuthMethod::LidbMatch,
            "carrier-a:johndoe",
            seed::paper_number(),
        );
        assert!(!enumkit::registry::oracle::verify_assignee(
            &seed::paper_number(),
            &old_lidb,
            &tree.oracle
        )
        .unwrap()
        .is_accepted());
    }
    assert_eq!(bytes_before, serialize_all(&ported));
    println!("PASS criterion 7: coupled NXDOMAIN, decoupled unchanged, porting moved the carrier and zero record bytes");
}

#[test]
fn c08_threat_matrix_three_by_two() {
    let victim = E164Number::new(seed::ACME_NUMBER).unwrap();
    type Runner = fn(&mut ThreatEnv, &E164Number, &str) -> Result<enumkit::threat::ScenarioReport, enumkit::threat::ScriptError>;
    let scenarios: [(&str, Runner); 3] = [
        ("hijack", run_hijack),
        ("eavesdrop", run_eavesdrop),
        ("dos", run_dos),
    ];
    for (name, runner) in scenarios {
        let mut on = ThreatEnv::seeded();
        on.set_enforcement(true);
        let report = runner(&mut on, &victim, seed::BETA).unwrap();
        assert!(!report.attack_succeeded, "{name} must fail with enforcement on");

        let mut off = ThreatEnv::seeded();
        off.set_enforcement(false);
        let report = runner(&mut off, &victim, seed::BETA).unwrap();
        assert!(report.attack_succeeded, "{name} must succeed with enforcement off");
        assert!(report.detected, "{name} must be detected with enforcement off");
        assert!(!report.evidence.is_empty());
    }
    println!("PASS criterion 8: 3 scenarios x 2 enforcement modes behave exactly as specified");
}

#[test]
fn c09_wire_codec_round_trip_and_fuzz() {
    let mut rng = StdRng::seed_from_u64(0xd15c0);

    // 1,000 generated messages: encode/decode identity, and the decoded
    // records structurally equal master-file parses of the same data.
    for i in 0..1000 {
        let label_count = rng.random_range(1..=12);
        let qname: String = (0..label_count)
            .map(|_| char::from(b'0' + rng.random_range(0..10)).to_string())
            .collect::<Vec<_>>()
            .join(".")
            + ".e164.test";
        let question = wire::Question {
            qname: qname.clone(),
            qtype: wire::QTYPE_NAPTR,
            qclass: wire::QCLASS_IN,
        };
        let schemes = ["sip", "tel", "mailto"];
        let records: Vec<NaptrRecord> = (0..rng.random_range(1..=3))
            .map(|j| {
                let scheme = schemes[rng.random_range(0..schemes.len())];
                let rule = RewriteRule::new(
                    '!',
                    "^.*$",
                    &format!("{scheme}:u{j}@h{}", rng.random_range(0..1000)),
                    PlusMode::Lenient,
                )
                .unwrap();
                NaptrRecord::new(
                    rng.random_range(0..300),
                    rng.random_range(0..30),
                    "u",
                    &format!("{scheme}+E2U"),
                    rule,
                    ".",
                )
                .unwrap()
            })
            .collect();
        let answers: Vec<(String, u32, wire::WireNaptr)> = records
            .iter()
            .map(|r| (qname.clone(), 3600, wire::WireNaptr::from_record(r)))
            .collect();
        let bytes = wire::encode_response(i as u16, &question, 0, &answers).unwrap();
        let message = wire::decode_message(&bytes).unwrap();
        assert_eq!(message.id, i as u16);
        assert_eq!(message.answers.len(), records.len());
        for (answer, original) in message.answers.iter().zip(&records) {
            let decoded = answer.naptr.as_ref().unwrap().to_record(PlusMode::Lenient).unwrap();
            // The master-file route: serialize then reparse, then compare.
            let reparsed =
                enumkit::naptr::parse_record_line(&enumkit::naptr::serialize_record(original))
                    .unwrap();
            assert_eq!(decoded, reparsed);
        }
    }

    // 10,000 mutated datagrams: errors allowed, panics and overruns not.
    let record = enumkit::naptr::parse_record_line(
        r#"IN NAPTR 102 10 "u" "tel+E2U" "!^.*$!tel:+112025551212!" ."#,
    )
    .unwrap();
    let question = wire::Question {
        qname: "2.1.2.1.5.5.5.2.0.2.1.1.e164.foo".into(),
        qtype: wire::QTYPE_NAPTR,
        qclass: wire::QCLASS_IN,
    };
    let pristine = wire::encode_response(
        7,
        &question,
        0,
        &[(question.qname.clone(), 3600, wire::WireNaptr::from_record(&record))],
    )
    .unwrap();
    let mut error_count = 0usize;
    for _ in 0..10_000 {
        let mut mutated = pristine.clone();
        for _ in 0..rng.random_range(1..=8) {
            match rng.random_range(0..4) {
                0 if !mutated.is_empty() => {
                    let pos = rng.random_range(0..mutated.len());
                    mutated[pos] ^= rng.random::<u8>();
                }
                1 => {
                    let keep = rng.random_range(0..=mutated.len());
                    mutated.truncate(keep);
                }
                2 => {
                    let extra = rng.random_range(0..16);
                    mutated.extend((0..extra).map(|_| rng.random::<u8>()));
                }
                _ => {
                    let pos = rng.random_range(0..=mutated.len());
                    mutated.insert(pos, rng.random::<u8>());
                }
            }
        }
        if wire::decode_message(&mutated).is_err() {
            error_count += 1;
        }
    }
    assert!(error_count > 0, "mutations must produce decode errors");
    println!(
        "PASS criterion 9: 1,000 messages round-tripped; 10,000 mutated datagrams decoded without a panic ({error_count} errored)"
    );
}
