//! Simulator state as a directory of plain-text files.
//!
//! Everything is diffable: zone files for record data, TSV for tables.
//! Saving the same state twice produces byte-identical files, and
//! save -> load -> save is an identity.
//!
//! ```text
//! <state>/
//!   config.tsv            key<TAB>value: default_root, dialing_context, access_codes
//!   roots.tsv             <root-id><TAB><apex><TAB><local|host:port>
//!   bookmarks.tsv         <digits><TAB><root-id><TAB><iso-timestamp>
//!   root-<id>/            one directory per local root
//!     tree.tsv            enforce_auth, lifecycle, quarantine_days, authority rows
//!     tier0.tsv           <cc><TAB><0|1><TAB><tier1-provider|->
//!     tier1-<cc>.tsv      <digits><TAB><tier2-provider>
//!     zones-<provider>.zone    record sets, one $ORIGIN section per owner
//!     regs-<provider>.tsv      registration rows (see below)
//!     archive-<provider>.zone  displaced record sets, plus .tsv sidecar
//!     oracle.tsv          <digits><TAB><registrant><TAB><carrier>[<TAB><state>]
//!     audit.tsv           seq<TAB>iso<TAB>actor<TAB>action<TAB>digits<TAB>detail
//!     disputes.tsv        <digits><TAB><challenger><TAB><status><TAB><grounds>
//! ```
//!
//! Registration row: `digits reg display state carrier mode enrolled-by|-
//! quarantined-until|-` (tab-separated).

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::clock::Timestamp;
use crate::e164::{to_domain, E164Number};
use crate::naptr::zonefile::{parse_zone, serialize_zone, ZoneFile, ZoneSection};
use crate::naptr::RecordSet;
use crate::registry::oracle::{AssignmentOracle, SubscriptionState};
use crate::registry::{
    audit::AuditLog, ArchivedRecordSet, DisputeChallenge, DisputeStatus, EnumTree, LifecycleMode,
    ProvisioningMode, Registrant, Registration, TreeConfig,
};
use crate::resolver::roots::{
    parse_roots_file, serialize_roots_file, Backend, BackendSpec, BookmarkStore, Root, RootConfig,
    RootSpec,
};

#[derive(Debug, Error)]
pub enum StateError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// The full persisted world: roots (with their trees), bookmarks, and the
/// dial-handling configuration.
#[derive(Debug, Clone)]
pub struct SimState {
    pub roots: RootConfig,
    pub bookmarks: BookmarkStore,
    pub access_codes: Vec<String>,
    pub dialing_context: Option<String>,
}

impl SimState {
    pub fn new(roots: RootConfig) -> Self {
        SimState {
            roots,
            bookmarks: BookmarkStore::new(),
            access_codes: Vec::new(),
            dialing_context: None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StateError + '_ {
    move |source| StateError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> StateError {
    StateError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), StateError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn read(path: &Path) -> Result<String, StateError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn save_state(dir: &Path, state: &SimState) -> Result<(), StateError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut config_lines = format!("default_root\t{}\n", state.roots.default_root);
    if let Some(ctx) = &state.dialing_context {
        config_lines.push_str(&format!("dialing_context\t{ctx}\n"));
    }
    if !state.access_codes.is_empty() {
        config_lines.push_str(&format!("access_codes\t{}\n", state.access_codes.join(",")));
    }
    write(&dir.join("config.tsv"), &config_lines)?;

    let specs: Vec<RootSpec> = state
        .roots
        .iter()
        .map(|(id, root)| RootSpec {
            id,
            apex: root.apex.clone(),
            backend: match &root.backend {
                Backend::Local(_) => BackendSpec::Local,
                Backend::Remote { endpoint, .. } => BackendSpec::Remote(endpoint.clone()),
            },
        })
        .collect();
    write(&dir.join("roots.tsv"), &serialize_roots_file(&specs))?;
    write(&dir.join("bookmarks.tsv"), &state.bookmarks.serialize())?;

    // Root directories are rebuilt from scratch so removed providers or
    // roots leave no stale files behind.
    let live_dirs: Vec<String> = state.roots.iter().map(|(id, _)| format!("root-{id}")).collect();
    if let Ok(entries) = fs::read_dir(dir) {
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().to_string();
            if name.starts_with("root-") && !live_dirs.contains(&name) {
                let _ = fs::remove_dir_all(entry.path());
            }
        }
    }
    for (id, root) in state.roots.iter() {
        if let Backend::Local(tree) = &root.backend {
            let root_dir = dir.join(format!("root-{id}"));
            if root_dir.exists() {
                fs::remove_dir_all(&root_dir).map_err(io_err(&root_dir))?;
            }
            fs::create_dir_all(&root_dir).map_err(io_err(&root_dir))?;
            save_tree(&root_dir, tree)?;
        }
    }
    Ok(())
}

fn save_tree(dir: &Path, tree: &EnumTree) -> Result<(), StateError> {
    let mut tree_tsv = String::new();
    tree_tsv.push_str(&format!("enforce_auth\t{}\n", tree.config.enforce_auth));
    tree_tsv.push_str(&format!("lifecycle\t{}\n", tree.config.lifecycle));
    tree_tsv.push_str(&format!("quarantine_days\t{}\n", tree.config.quarantine_days));
    for (id, credential) in &tree.config.authorities {
        tree_tsv.push_str(&format!("authority\t{id}:{credential}\n"));
    }
    write(&dir.join("tree.tsv"), &tree_tsv)?;

    let mut tier0 = String::new();
    for (cc, entry) in tree.tier0().entries() {
        tier0.push_str(&format!(
            "{cc}\t{}\t{}\n",
            u8::from(entry.authorized),
            entry.tier1_provider.as_deref().unwrap_or("-")
        ));
    }
    write(&dir.join("tier0.tsv"), &tier0)?;

    // Designations are independent of Tier 0 authorization, so the Tier 1
    // zones get their own manifest.
    let mut tier1_manifest = String::new();
    for zone in tree.tier1_zones() {
        tier1_manifest.push_str(&format!("{}\t{}\n", zone.country_code(), zone.provider_id()));
    }
    write(&dir.join("tier1.tsv"), &tier1_manifest)?;

    for zone in tree.tier1_zones() {
        let mut rows = String::new();
        for (number, provider) in zone.delegations() {
            rows.push_str(&format!("{}\t{provider}\n", number.digits()));
        }
        write(&dir.join(format!("tier1-{}.tsv", zone.country_code())), &rows)?;
    }

    for zone in tree.tier2_zones() {
        let provider = zone.provider_id();
        let mut sections = Vec::new();
        let mut rows = String::new();
        for (number, registration) in zone.registrations() {
            let set = &registration.record_set;
            sections.push(ZoneSection {
                origin: set.owner().to_string(),
                ttl: set.ttl_seconds(),
                records: set.records().to_vec(),
            });
            let r = &registration.registrant;
            rows.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                number.digits(),
                r.id,
                r.display_name,
                r.subscription_state,
                r.carrier,
                registration.mode,
                registration.enrolled_by.as_deref().unwrap_or("-"),
                registration
                    .quarantined_until
                    .map_or_else(|| "-".to_string(), |t| t.to_iso8601()),
            ));
        }
        write(
            &dir.join(format!("zones-{provider}.zone")),
            &serialize_zone(&ZoneFile { sections }),
        )?;
        write(&dir.join(format!("regs-{provider}.tsv")), &rows)?;

        if !zone.archive().is_empty() {
            let mut archive_sections = Vec::new();
            let mut sidecar = String::new();
            for (index, archived) in zone.archive().iter().enumerate() {
                archive_sections.push(ZoneSection {
                    origin: archived.record_set.owner().to_string(),
                    ttl: archived.record_set.ttl_seconds(),
                    records: archived.record_set.records().to_vec(),
                });
                sidecar.push_str(&format!(
                    "{index}\t{}\t{}\t{}\n",
                    archived.number.digits(),
                    archived.at.to_iso8601(),
                    archived.reason.replace(['\t', '\n'], " "),
                ));
            }
            write(
                &dir.join(format!("archive-{provider}.zone")),
                &serialize_zone(&ZoneFile {
                    sections: archive_sections,
                }),
            )?;
            write(&dir.join(format!("archive-{provider}.tsv")), &sidecar)?;
        }
    }

    write(&dir.join("oracle.tsv"), &tree.oracle.serialize_seed())?;
    write(&dir.join("audit.tsv"), &tree.audit.serialize())?;

    let mut disputes = String::new();
    for number in tree.disputed_numbers() {
        for challenge in tree.disputes(&number) {
            disputes.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                number.digits(),
                challenge.challenger,
                challenge.status,
                challenge.grounds.replace(['\t', '\n'], " ")
            ));
        }
    }
    write(&dir.join("disputes.tsv"), &disputes)?;
    Ok(())
}

pub fn load_state(dir: &Path) -> Result<SimState, StateError> {
    let config_path = dir.join("config.tsv");
    let mut default_root: u32 = 0;
    let mut dialing_context = None;
    let mut access_codes = Vec::new();
    for line in read(&config_path)?.lines() {
        let Some((key, value)) = line.split_once('\t') else {
            continue;
        };
        match key {
            "default_root" => {
                default_root = value
                    .parse()
                    .map_err(|_| parse_err(&config_path, format!("bad default_root {value:?}")))?;
            }
            "dialing_context" => dialing_context = Some(value.to_string()),
            "access_codes" => {
                access_codes = value.split(',').map(str::to_string).collect();
            }
            other => {
                return Err(parse_err(&config_path, format!("unknown config key {other:?}")))
            }
        }
    }

    let roots_path = dir.join("roots.tsv");
    let specs = parse_roots_file(&read(&roots_path)?)
        .map_err(|message| parse_err(&roots_path, message))?;
    let mut roots = RootConfig::new(default_root);
    for spec in specs {
        let backend = match spec.backend {
            BackendSpec::Remote(endpoint) => Backend::remote(&endpoint),
            BackendSpec::Local => {
                let root_dir = dir.join(format!("root-{}", spec.id));
                Backend::Local(load_tree(&root_dir, &spec.apex)?)
            }
        };
        roots.insert(
            spec.id,
            Root {
                apex: spec.apex,
                backend,
            },
        );
    }

    let bookmarks_path = dir.join("bookmarks.tsv");
    let bookmarks = if bookmarks_path.exists() {
        BookmarkStore::parse(&read(&bookmarks_path)?)
            .map_err(|message| parse_err(&bookmarks_path, message))?
    } else {
        BookmarkStore::new()
    };

    Ok(SimState {
        roots,
        bookmarks,
        access_codes,
        dialing_context,
    })
}

fn load_tree(dir: &Path, apex: &str) -> Result<EnumTree, StateError> {
    let tree_path = dir.join("tree.tsv");
    let mut config = TreeConfig::default();
    for line in read(&tree_path)?.lines() {
        let Some((key, value)) = line.split_once('\t') else {
            continue;
        };
        match key {
            "enforce_auth" => {
                config.enforce_auth = value
                    .parse()
                    .map_err(|_| parse_err(&tree_path, format!("bad enforce_auth {value:?}")))?;
            }
            "lifecycle" => {
                config.lifecycle = LifecycleMode::parse(value)
                    .ok_or_else(|| parse_err(&tree_path, format!("bad lifecycle {value:?}")))?;
            }
            "quarantine_days" => {
                config.quarantine_days = value
                    .parse()
                    .map_err(|_| parse_err(&tree_path, format!("bad quarantine_days {value:?}")))?;
            }
            "authority" => {
                let (id, credential) = value.split_once(':').ok_or_else(|| {
                    parse_err(&tree_path, format!("authority row {value:?} is not id:credential"))
                })?;
                config.authorities.insert(id.to_string(), credential.to_string());
            }
            other => return Err(parse_err(&tree_path, format!("unknown tree key {other:?}"))),
        }
    }
    let mut tree = EnumTree::new(apex, config);

    let tier0_path = dir.join("tier0.tsv");
    for line in read(&tier0_path)?.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(&tier0_path, "tier0 rows are <cc>\\t<0|1>\\t<provider|->"));
        }
        let authorized = fields[1] == "1";
        let provider = (fields[2] != "-").then_some(fields[2]);
        tree.restore_tier0_entry(fields[0], authorized, provider);
    }

    let tier1_manifest = dir.join("tier1.tsv");
    if tier1_manifest.exists() {
        for line in read(&tier1_manifest)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((cc, provider)) = line.split_once('\t') else {
                return Err(parse_err(&tier1_manifest, "tier1 rows are <cc>\\t<provider>"));
            };
            tree.restore_tier1(cc, provider);

            let tier1_path = dir.join(format!("tier1-{cc}.tsv"));
            if tier1_path.exists() {
                for row in read(&tier1_path)?.lines() {
                    if row.trim().is_empty() {
                        continue;
                    }
                    let Some((digits, delegated_to)) = row.split_once('\t') else {
                        return Err(parse_err(&tier1_path, "delegation rows are <digits>\\t<provider>"));
                    };
                    let number = E164Number::new(digits)
                        .map_err(|e| parse_err(&tier1_path, e.to_string()))?;
                    tree.restore_delegation(cc, number, delegated_to);
                }
            }
        }
    }

    // Registrations: pair regs-<provider>.tsv with zones-<provider>.zone.
    for entry in fs::read_dir(dir).map_err(io_err(dir))?.flatten() {
        let name = entry.file_name().to_string_lossy().to_string();
        let Some(provider) = name.strip_prefix("regs-").and_then(|n| n.strip_suffix(".tsv")) else {
            continue;
        };
        let provider = provider.to_string();
        let zones_path = dir.join(format!("zones-{provider}.zone"));
        let zone_file = parse_zone(&read(&zones_path)?)
            .map_err(|e| parse_err(&zones_path, e.to_string()))?;
        let mut sets: BTreeMap<String, RecordSet> = BTreeMap::new();
        for section in zone_file.sections {
            let owner = crate::e164::EnumDomain::parse(&section.origin, apex)
                .map_err(|e| parse_err(&zones_path, e.to_string()))?;
            sets.insert(
                section.origin.clone(),
                RecordSet::new(owner, section.ttl, section.records),
            );
        }
        let regs_path = entry.path();
        for line in read(&regs_path)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 8 {
                return Err(parse_err(&regs_path, "registration rows have 8 fields"));
            }
            let number =
                E164Number::new(fields[0]).map_err(|e| parse_err(&regs_path, e.to_string()))?;
            let owner = to_domain(&number, apex).to_string();
            let record_set = sets
                .get(&owner)
                .cloned()
                .ok_or_else(|| parse_err(&zones_path, format!("no zone section for {owner}")))?;
            let subscription_state = SubscriptionState::parse(fields[3])
                .map_err(|e| parse_err(&regs_path, e))?;
            let mode = ProvisioningMode::parse(fields[5])
                .ok_or_else(|| parse_err(&regs_path, format!("bad mode {:?}", fields[5])))?;
            let quarantined_until = match fields[7] {
                "-" => None,
                iso => Some(
                    Timestamp::parse_iso8601(iso)
                        .map_err(|e| parse_err(&regs_path, e.to_string()))?,
                ),
            };
            tree.restore_registration(
                &provider,
                number,
                Registration {
                    registrant: Registrant {
                        id: fields[1].to_string(),
                        display_name: fields[2].to_string(),
                        subscription_state,
                        carrier: fields[4].to_string(),
                    },
                    record_set,
                    mode,
                    enrolled_by: (fields[6] != "-").then(|| fields[6].to_string()),
                    quarantined_until,
                },
            );
        }

        let archive_tsv = dir.join(format!("archive-{provider}.tsv"));
        if archive_tsv.exists() {
            let archive_zone_path = dir.join(format!("archive-{provider}.zone"));
            let archive_zone = parse_zone(&read(&archive_zone_path)?)
                .map_err(|e| parse_err(&archive_zone_path, e.to_string()))?;
            for line in read(&archive_tsv)?.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.splitn(4, '\t').collect();
                if fields.len() != 4 {
                    return Err(parse_err(&archive_tsv, "archive rows have 4 fields"));
                }
                let index: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(&archive_tsv, "bad archive index"))?;
                let section = archive_zone.sections.get(index).ok_or_else(|| {
                    parse_err(&archive_tsv, format!("archive index {index} has no zone section"))
                })?;
                let owner = crate::e164::EnumDomain::parse(&section.origin, apex)
                    .map_err(|e| parse_err(&archive_zone_path, e.to_string()))?;
                let number =
                    E164Number::new(fields[1]).map_err(|e| parse_err(&archive_tsv, e.to_string()))?;
                let at = Timestamp::parse_iso8601(fields[2])
                    .map_err(|e| parse_err(&archive_tsv, e.to_string()))?;
                tree.restore_archive(
                    &provider,
                    ArchivedRecordSet {
                        number,
                        record_set: RecordSet::new(owner, section.ttl, section.records.clone()),
                        reason: fields[3].to_string(),
                        at,
                    },
                );
            }
        }
    }

    let oracle_path = dir.join("oracle.tsv");
    tree.oracle = AssignmentOracle::parse_seed(&read(&oracle_path)?)
        .map_err(|message| parse_err(&oracle_path, message))?;

    let audit_path = dir.join("audit.tsv");
    tree.audit =
        AuditLog::parse(&read(&audit_path)?).map_err(|message| parse_err(&audit_path, message))?;

    let disputes_path = dir.join("disputes.tsv");
    if disputes_path.exists() {
        for line in read(&disputes_path)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(4, '\t').collect();
            if fields.len() != 4 {
                return Err(parse_err(&disputes_path, "dispute rows have 4 fields"));
            }
            let number =
                E164Number::new(fields[0]).map_err(|e| parse_err(&disputes_path, e.to_string()))?;
            let status = DisputeStatus::parse(fields[2])
                .ok_or_else(|| parse_err(&disputes_path, format!("bad status {:?}", fields[2])))?;
            tree.restore_dispute(DisputeChallenge {
                number,
                challenger: fields[1].to_string(),
                grounds: fields[3].to_string(),
                status,
            });
        }
    }

    Ok(tree)
}
