//! Scripted attack scenarios against the registry/resolver stack.
//!
//! Three scenarios: hijack (rewrite the victim's contact to the
//! attacker's), eavesdrop (rewrite it to a relay that forwards to the
//! original, so traffic flows but through a third party), and denial of
//! service (corrupt the records so nothing resolves). Each runs as a
//! scripted step list against a seeded environment, in enforcement-on or
//! enforcement-off configuration, and reports whether the attack took
//! effect and whether the audit log betrays it.
//!
//! Detection is an audit scan: an applied `update` whose actor is not the
//! registrant of record. The relay is a plain forwarding table in the
//! environment; no media path exists or is needed.
//!
//! Script line format: `<step-no><TAB><actor><TAB><action><TAB><args...>`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::clock::Timestamp;
use crate::e164::{to_domain, E164Number};
use crate::naptr::ere::PlusMode;
use crate::naptr::{ContactUri, NaptrRecord, RecordSet, RewriteRule, DEFAULT_TTL};
use crate::registry::RegistryError;
use crate::resolver::roots::RootConfig;
use crate::resolver::{resolve, ResolveError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Hijack,
    Eavesdrop,
    DenialOfService,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Hijack => "hijack",
            ScenarioKind::Eavesdrop => "eavesdrop",
            ScenarioKind::DenialOfService => "dos",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "hijack" => ScenarioKind::Hijack,
            "eavesdrop" => ScenarioKind::Eavesdrop,
            "dos" => ScenarioKind::DenialOfService,
            _ => return None,
        })
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("script line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("script has no scenario header step")]
    MissingHeader,
    #[error("unknown action {0:?}")]
    UnknownAction(String),
}

/// One scripted action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptStep {
    pub step_no: u32,
    pub actor: String,
    pub action: String,
    pub args: Vec<String>,
}

impl ScriptStep {
    fn new(step_no: u32, actor: &str, action: &str, args: &[&str]) -> Self {
        ScriptStep {
            step_no,
            actor: actor.to_string(),
            action: action.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A scenario: its cast plus the ordered step list. Step 0 is the header
/// carrying kind and victim, so a scenario serializes wholly within the
/// line format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub victim: E164Number,
    pub attacker: String,
    pub steps: Vec<ScriptStep>,
}

impl Scenario {
    /// BETA rewrites ACME's sip contact to its own call center.
    pub fn hijack(victim: &E164Number, attacker: &str, attacker_uri: &str) -> Self {
        let steps = vec![
            ScriptStep::new(0, attacker, "scenario", &["hijack", victim.digits()]),
            ScriptStep::new(1, "observer", "resolve", &[]),
            ScriptStep::new(2, attacker, "rewrite-sip", &[attacker_uri]),
            ScriptStep::new(3, "observer", "resolve", &[]),
            ScriptStep::new(4, "auditor", "detect", &[]),
        ];
        Scenario {
            kind: ScenarioKind::Hijack,
            victim: victim.clone(),
            attacker: attacker.to_string(),
            steps,
        }
    }

    /// BETA interposes a relay: traffic still reaches the victim, but
    /// only after passing through the attacker.
    pub fn eavesdrop(victim: &E164Number, attacker: &str, relay_uri: &str) -> Self {
        let steps = vec![
            ScriptStep::new(0, attacker, "scenario", &["eavesdrop", victim.digits()]),
            ScriptStep::new(1, "observer", "resolve", &[]),
            ScriptStep::new(2, attacker, "add-relay", &[relay_uri]),
            ScriptStep::new(3, attacker, "rewrite-sip", &[relay_uri]),
            ScriptStep::new(4, "observer", "resolve", &[]),
            ScriptStep::new(5, "auditor", "detect", &[]),
        ];
        Scenario {
            kind: ScenarioKind::Eavesdrop,
            victim: victim.clone(),
            attacker: attacker.to_string(),
            steps,
        }
    }

    /// BETA corrupts the record data so nothing resolves at all.
    pub fn dos(victim: &E164Number, attacker: &str) -> Self {
        let steps = vec![
            ScriptStep::new(0, attacker, "scenario", &["dos", victim.digits()]),
            ScriptStep::new(1, "observer", "resolve", &[]),
            ScriptStep::new(2, attacker, "corrupt", &[]),
            ScriptStep::new(3, "observer", "resolve", &[]),
            ScriptStep::new(4, "auditor", "detect", &[]),
        ];
        Scenario {
            kind: ScenarioKind::DenialOfService,
            victim: victim.clone(),
            attacker: attacker.to_string(),
            steps,
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&format!("{}\t{}\t{}", step.step_no, step.actor, step.action));
            for arg in &step.args {
                out.push('\t');
                out.push_str(arg);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut steps = Vec::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(ScriptError::Malformed {
                    line: index + 1,
                    message: "expected <step-no>\\t<actor>\\t<action>\\t<args...>".into(),
                });
            }
            let step_no: u32 = fields[0].parse().map_err(|_| ScriptError::Malformed {
                line: index + 1,
                message: format!("bad step number {:?}", fields[0]),
            })?;
            steps.push(ScriptStep {
                step_no,
                actor: fields[1].to_string(),
                action: fields[2].to_string(),
                args: fields[3..].iter().map(|s| s.to_string()).collect(),
            });
        }
        let header = steps
            .iter()
            .find(|s| s.action == "scenario")
            .ok_or(ScriptError::MissingHeader)?;
        if header.args.len() != 2 {
            return Err(ScriptError::MissingHeader);
        }
        let kind = ScenarioKind::parse(&header.args[0])
            .ok_or_else(|| ScriptError::UnknownAction(header.args[0].clone()))?;
        let victim = E164Number::new(header.args[1].clone()).map_err(|e| ScriptError::Malformed {
            line: 1,
            message: e.to_string(),
        })?;
        let attacker = header.actor.clone();
        Ok(Scenario {
            kind,
            victim,
            attacker,
            steps,
        })
    }
}

/// The environment a scenario runs in: the multi-root world, the target
/// root, and the relay forwarding table.
pub struct ThreatEnv {
    pub cfg: RootConfig,
    pub root_id: u32,
    /// relay URI -> forward target. Models interposition only; no media
    /// path exists.
    pub relays: BTreeMap<String, String>,
    pub now: Timestamp,
}

impl ThreatEnv {
    /// The canned cast: ACME registered with a sip call center, BETA the
    /// attacker, CHARLIE a caller.
    pub fn seeded() -> Self {
        ThreatEnv {
            cfg: seed::paper_root_config(),
            root_id: seed::DEFAULT_ROOT_ID,
            relays: BTreeMap::new(),
            now: seed::seed_time().plus_seconds(3600),
        }
    }

    pub fn set_enforcement(&mut self, on: bool) {
        if let Some(tree) = self.cfg.local_tree_mut(self.root_id) {
            tree.config.enforce_auth = on;
        }
    }

    pub fn enforcement(&self) -> bool {
        self.cfg
            .local_tree(self.root_id)
            .map(|t| t.config.enforce_auth)
            .unwrap_or(true)
    }

    fn resolve_victim(&self, victim: &E164Number) -> Vec<ContactUri> {
        match resolve(&self.cfg, self.root_id, victim, None, None, self.now) {
            Ok(result) => result.contacts,
            Err(ResolveError::NxDomain { .. }) | Err(ResolveError::NoRecords { .. }) => Vec::new(),
            Err(other) => panic!("scenario resolution failed unexpectedly: {other}"),
        }
    }

    fn sip_set(&self, victim: &E164Number, uri: &str) -> RecordSet {
        let apex = self
            .cfg
            .get(self.root_id)
            .expect("scenario root configured")
            .apex
            .clone();
        let rule = RewriteRule::new('!', "^.*$", uri, PlusMode::Lenient).expect("valid rule");
        RecordSet::new(
            to_domain(victim, &apex),
            DEFAULT_TTL,
            vec![NaptrRecord::new(10, 10, "u", "sip+E2U", rule, ".").expect("valid record")],
        )
    }

    /// A record set whose rule can never match a non-empty input: the
    /// records exist, yet resolution yields nothing.
    fn corrupted_set(&self, victim: &E164Number) -> RecordSet {
        let apex = self
            .cfg
            .get(self.root_id)
            .expect("scenario root configured")
            .apex
            .clone();
        let rule = RewriteRule::new('!', "^$", "sip:void@nowhere", PlusMode::Lenient)
            .expect("valid rule");
        RecordSet::new(
            to_domain(victim, &apex),
            DEFAULT_TTL,
            vec![NaptrRecord::new(10, 10, "u", "sip+E2U", rule, ".").expect("valid record")],
        )
    }
}

/// The outcome of one scenario run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioReport {
    pub kind: ScenarioKind,
    pub attack_succeeded: bool,
    pub detected: bool,
    /// Audit sequence numbers of the flagged mutations; non-empty
    /// whenever `detected` is true.
    pub evidence: Vec<u64>,
    pub before: Vec<ContactUri>,
    pub after: Vec<ContactUri>,
}

impl ScenarioReport {
    pub fn render_human(&self) -> String {
        let contact_lines = |contacts: &[ContactUri]| {
            if contacts.is_empty() {
                "  (none)\n".to_string()
            } else {
                contacts
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("  {}. {} ({})\n", i + 1, c, c.source_service))
                    .collect()
            }
        };
        let mut out = String::new();
        out.push_str(&format!("scenario: {}\n", self.kind));
        out.push_str(&format!("attack succeeded: {}\n", self.attack_succeeded));
        out.push_str(&format!("detected: {}\n", self.detected));
        if self.evidence.is_empty() {
            out.push_str("evidence: none\n");
        } else {
            let seqs: Vec<String> = self.evidence.iter().map(u64::to_string).collect();
            out.push_str(&format!("evidence: audit seq {}\n", seqs.join(", ")));
        }
        out.push_str("contacts before:\n");
        out.push_str(&contact_lines(&self.before));
        out.push_str("contacts after:\n");
        out.push_str(&contact_lines(&self.after));
        out
    }

    /// The same report in the script's TAB format, one field per line.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind\t{}\n", self.kind));
        out.push_str(&format!("attack_succeeded\t{}\n", self.attack_succeeded));
        out.push_str(&format!("detected\t{}\n", self.detected));
        let seqs: Vec<String> = self.evidence.iter().map(u64::to_string).collect();
        out.push_str(&format!("evidence\t{}\n", seqs.join(",")));
        for (i, c) in self.before.iter().enumerate() {
            out.push_str(&format!("before\t{}\t{}\t{}\n", i + 1, c.source_service, c));
        }
        for (i, c) in self.after.iter().enumerate() {
            out.push_str(&format!("after\t{}\t{}\t{}\n", i + 1, c.source_service, c));
        }
        out
    }
}

/// Applied `update` entries whose actor differs from the registrant of
/// record at the time of the write.
pub fn scan_for_unauthorized_mutations(env: &ThreatEnv) -> Vec<u64> {
    let Some(tree) = env.cfg.local_tree(env.root_id) else {
        return Vec::new();
    };
    tree.audit
        .entries()
        .iter()
        .filter(|entry| entry.action == "update")
        .filter(|entry| {
            entry
                .registrant_of_record()
                .is_some_and(|of| of != entry.actor)
        })
        .map(|entry| entry.seq)
        .collect()
}

/// Executes a scenario's steps and assembles the report.
pub fn run_scenario(env: &mut ThreatEnv, scenario: &Scenario) -> Result<ScenarioReport, ScriptError> {
    let victim = &scenario.victim;
    let registrant_of_record = env
        .cfg
        .local_tree(env.root_id)
        .and_then(|t| t.registration(victim))
        .map(|r| r.registrant.id.clone());

    let mut before: Option<Vec<ContactUri>> = None;
    let mut after: Vec<ContactUri> = Vec::new();
    let mut evidence: Vec<u64> = Vec::new();
    let mut injected_uri: Option<String> = None;

    for step in &scenario.steps {
        match step.action.as_str() {
            "scenario" => {}
            "resolve" => {
                let contacts = env.resolve_victim(victim);
                if before.is_none() {
                    before = Some(contacts.clone());
                }
                after = contacts;
            }
            "rewrite-sip" => {
                let uri = step.args.first().cloned().unwrap_or_default();
                injected_uri = Some(uri.clone());
                let set = env.sip_set(victim, &uri);
                let now = env.now;
                if let Some(tree) = env.cfg.local_tree_mut(env.root_id) {
                    match tree.update_records(victim, &step.actor, set, now) {
                        Ok(_) | Err(RegistryError::AuthFailed(_)) => {}
                        Err(other) => {
                            return Err(ScriptError::Malformed {
                                line: step.step_no as usize,
                                message: other.to_string(),
                            })
                        }
                    }
                }
            }
            "corrupt" => {
                let set = env.corrupted_set(victim);
                injected_uri = None;
                let now = env.now;
                if let Some(tree) = env.cfg.local_tree_mut(env.root_id) {
                    match tree.update_records(victim, &step.actor, set, now) {
                        Ok(_) | Err(RegistryError::AuthFailed(_)) => {}
                        Err(other) => {
                            return Err(ScriptError::Malformed {
                                line: step.step_no as usize,
                                message: other.to_string(),
                            })
                        }
                    }
                }
            }
            "add-relay" => {
                let relay = step.args.first().cloned().unwrap_or_default();
                let target = before
                    .as_ref()
                    .and_then(|c| c.first())
                    .map(ToString::to_string)
                    .unwrap_or_default();
                env.relays.insert(relay, target);
            }
            "detect" => {
                evidence = scan_for_unauthorized_mutations(env);
            }
            other => return Err(ScriptError::UnknownAction(other.to_string())),
        }
    }

    let before = before.unwrap_or_default();
    let actor_is_foreign = registrant_of_record.as_deref() != Some(scenario.attacker.as_str());
    let attack_succeeded = actor_is_foreign
        && match scenario.kind {
            ScenarioKind::Hijack => injected_uri
                .as_deref()
                .is_some_and(|uri| after.iter().any(|c| c.to_string() == uri)),
            ScenarioKind::Eavesdrop => {
                let relay_first = injected_uri
                    .as_deref()
                    .is_some_and(|uri| after.first().is_some_and(|c| c.to_string() == uri));
                let forwards_to_original = injected_uri
                    .as_deref()
                    .and_then(|uri| env.relays.get(uri))
                    .zip(before.first())
                    .is_some_and(|(target, original)| target == &original.to_string());
                relay_first && forwards_to_original
            }
            ScenarioKind::DenialOfService => !before.is_empty() && after.is_empty(),
        };

    Ok(ScenarioReport {
        kind: scenario.kind,
        attack_succeeded,
        detected: !evidence.is_empty(),
        evidence,
        before,
        after,
    })
}

pub fn run_hijack(
    env: &mut ThreatEnv,
    victim: &E164Number,
    attacker: &str,
) -> Result<ScenarioReport, ScriptError> {
    run_scenario(env, &Scenario::hijack(victim, attacker, seed::BETA_SIP))
}

pub fn run_eavesdrop(
    env: &mut ThreatEnv,
    victim: &E164Number,
    attacker: &str,
) -> Result<ScenarioReport, ScriptError> {
    run_scenario(env, &Scenario::eavesdrop(victim, attacker, seed::BETA_RELAY))
}

pub fn run_dos(
    env: &mut ThreatEnv,
    victim: &E164Number,
    attacker: &str,
) -> Result<ScenarioReport, ScriptError> {
    run_scenario(env, &Scenario::dos(victim, attacker))
}
