//! enumkit: resolve E.164 numbers through simulated or live NAPTR trees,
//! administer the tiered registry, and replay the record-tampering
//! attack scenarios.
//!
//! Exit codes: 0 success, 2 NXDOMAIN/no records, 3 authentication or
//! authorization failure, 4 parse/config error, 5 transport timeout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use enumkit::clock::Timestamp;
use enumkit::e164::{to_domain, DialString, E164Number};
use enumkit::naptr::zonefile::{parse_zone, serialize_zone, ZoneFile, ZoneSection};
use enumkit::naptr::{serialize_record, RecordSet};
use enumkit::registry::oracle::{AuthEvidence, AuthMethod, SubscriptionState};
use enumkit::registry::{
    DisputeOutcome, Enrollment, LifecycleMode, ProvisioningMode, Registrant, RegistryError,
};
use enumkit::resolver::{
    bookmark_and_resolve, metasearch, resolve_dial, DialOptions, DialOutcome, ResolutionResult,
    ResolveError,
};
use enumkit::seed;
use enumkit::state::{load_state, save_state, SimState};
use enumkit::threat::{run_dos, run_eavesdrop, run_hijack, ScenarioKind, ThreatEnv};
use enumkit::wire;

const EXIT_OK: u8 = 0;
const EXIT_NOT_FOUND: u8 = 2;
const EXIT_AUTH: u8 = 3;
const EXIT_USAGE: u8 = 4;
const EXIT_TIMEOUT: u8 = 5;

#[derive(Parser)]
#[command(name = "enumkit", version, about = "E.164-to-DNS resolution toolkit", disable_help_subcommand = true)]
struct Cli {
    /// State directory (defaults to $ENUMKIT_STATE).
    #[arg(long, global = true, env = "ENUMKIT_STATE")]
    state: Option<PathBuf>,
    /// Load the canned sample world (two roots, the worked-example
    /// number, and the ACME/BETA/CHARLIE cast). With --state, the
    /// directory is (re)seeded on disk first.
    #[arg(long, global = true)]
    seed_paper: bool,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a number (or access code, or number#root extension).
    Resolve(ResolveArgs),
    /// Administer the simulated registry tree.
    Admin(AdminArgs),
    /// Export or import record sets as master-file zones.
    Zone(ZoneArgs),
    /// Query a live NAPTR endpoint over UDP.
    Dig(DigArgs),
    /// Run an attack scenario against a seeded environment.
    Attack(AttackArgs),
}

#[derive(Args)]
struct ResolveArgs {
    /// Number as dialed: +112025551212, 555-1212, 911, 5551212#36.
    number: String,
    /// Resolve against this root instead of the default.
    #[arg(long)]
    root: Option<u32>,
    /// Only contacts whose service application matches (e.g. tel, sip).
    #[arg(long)]
    service: Option<String>,
    /// Query every configured root and print all hits.
    #[arg(long)]
    meta: bool,
    /// Remember (and reuse) which root served this number.
    #[arg(long)]
    bookmark: bool,
}

#[derive(Args)]
struct AdminArgs {
    /// Target root (defaults to the configured default root).
    #[arg(long, global = true)]
    root: Option<u32>,
    #[command(subcommand)]
    verb: AdminVerb,
}

#[derive(Subcommand)]
enum AdminVerb {
    /// National opt-in: authorize a country code to its Tier 1 provider.
    AuthorizeCc {
        #[arg(long)]
        cc: String,
        #[arg(long)]
        provider: String,
    },
    /// Point a number at the Tier 2 provider that will hold its records.
    Delegate {
        #[arg(long)]
        number: String,
        #[arg(long)]
        tier2: String,
        /// Country code; inferred from the longest matching prefix if
        /// omitted.
        #[arg(long)]
        cc: Option<String>,
    },
    /// Seed the assignment oracle: who holds the telephone number.
    Assign {
        #[arg(long)]
        number: String,
        #[arg(long)]
        registrant: String,
        #[arg(long)]
        carrier: String,
    },
    /// Register a number with its record set.
    Register {
        #[arg(long)]
        number: String,
        #[arg(long)]
        registrant: String,
        #[arg(long)]
        display: Option<String>,
        #[arg(long)]
        zone_file: PathBuf,
        /// Evidence as <method>:<payload>; methods: callback, phone-bill,
        /// lidb, ani, directory-listing, third-party-cert. The payload
        /// "ok" stands for the registrant id.
        #[arg(long)]
        evidence: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::OptIn)]
        mode: ModeArg,
        /// Enrolling authority as <id>:<credential> (opt-out/mandated).
        #[arg(long)]
        authority: Option<String>,
    },
    /// Replace a registration's record set.
    Update {
        #[arg(long)]
        number: String,
        #[arg(long)]
        registrant: String,
        #[arg(long)]
        zone_file: PathBuf,
    },
    /// Withdraw from a bulk opt-out enrollment.
    OptOut {
        #[arg(long)]
        number: String,
        #[arg(long)]
        registrant: String,
    },
    /// Mark the telephone number disconnected.
    Disconnect {
        #[arg(long)]
        number: String,
        /// Override the tree's lifecycle mode for this event.
        #[arg(long, value_enum)]
        mode: Option<LifecycleArg>,
    },
    /// Port the telephone number between carriers.
    Port {
        #[arg(long)]
        number: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// File or resolve a dispute challenge.
    Dispute {
        #[command(subcommand)]
        verb: DisputeVerb,
    },
}

#[derive(Subcommand)]
enum DisputeVerb {
    File {
        #[arg(long)]
        number: String,
        #[arg(long)]
        challenger: String,
        #[arg(long)]
        grounds: String,
    },
    Resolve {
        #[arg(long)]
        number: String,
        #[arg(long, value_enum)]
        outcome: OutcomeArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    OptIn,
    OptOut,
    Mandated,
}

#[derive(Clone, Copy, ValueEnum)]
enum LifecycleArg {
    Coupled,
    Decoupled,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutcomeArg {
    Upheld,
    Denied,
}

#[derive(Args)]
struct ZoneArgs {
    #[arg(long, global = true)]
    root: Option<u32>,
    #[command(subcommand)]
    verb: ZoneVerb,
}

#[derive(Subcommand)]
enum ZoneVerb {
    /// Write every record set of the root as one master file.
    Export {
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace record sets of already-registered numbers from a file.
    /// Sections are routed to each number's delegated provider.
    Import {
        file: PathBuf,
        /// Require every section to belong to this Tier 2 provider.
        #[arg(long)]
        tier2: Option<String>,
    },
}

#[derive(Args)]
struct DigArgs {
    /// A domain, or a number to convert (with --apex).
    target: String,
    #[arg(long)]
    server: String,
    #[arg(long, default_value_t = 2000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 2)]
    retries: u32,
    /// Apex used when the target is a number.
    #[arg(long, default_value = "e164.arpa")]
    apex: String,
}

#[derive(Args)]
struct AttackArgs {
    /// hijack, eavesdrop, or dos.
    scenario: String,
    #[arg(long, value_enum, default_value_t = EnforceArg::On)]
    enforce: EnforceArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnforceArg {
    On,
    Off,
}

/// An error plus the exit code it maps to.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl From<ResolveError> for CliError {
    fn from(err: ResolveError) -> Self {
        let code = match &err {
            ResolveError::NxDomain { .. } | ResolveError::NoRecords { .. } => EXIT_NOT_FOUND,
            ResolveError::Timeout { .. } => EXIT_TIMEOUT,
            _ => EXIT_USAGE,
        };
        CliError::new(code, err.to_string())
    }
}

impl From<RegistryError> for CliError {
    fn from(err: RegistryError) -> Self {
        let code = match &err {
            RegistryError::AuthFailed(_) => EXIT_AUTH,
            RegistryError::NoSuchRegistration(_)
            | RegistryError::UnknownNumber(_)
            | RegistryError::NoOpenChallenge(_) => EXIT_NOT_FOUND,
            _ => EXIT_USAGE,
        };
        CliError::new(code, err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(err) => {
            eprintln!("enumkit: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn seeded_state() -> SimState {
    let mut state = SimState::new(seed::paper_root_config());
    state.access_codes = seed::access_codes();
    state.dialing_context = Some(seed::DIALING_CONTEXT.to_string());
    state
}

/// Loads the working state per the global flags. Returns the state and
/// whether it is backed by a directory (and should be saved after
/// mutations).
fn open_state(cli: &Cli) -> Result<(SimState, Option<PathBuf>), CliError> {
    match (&cli.state, cli.seed_paper) {
        (Some(dir), true) => {
            let state = seeded_state();
            save_state(dir, &state).map_err(|e| CliError::usage(e.to_string()))?;
            Ok((state, Some(dir.clone())))
        }
        (Some(dir), false) => {
            let state = load_state(dir).map_err(|e| CliError::usage(e.to_string()))?;
            Ok((state, Some(dir.clone())))
        }
        (None, true) => Ok((seeded_state(), None)),
        (None, false) => Err(CliError::usage(
            "no state: pass --state <dir> (or set ENUMKIT_STATE), or use --seed-paper",
        )),
    }
}

fn persist(state: &SimState, dir: &Option<PathBuf>) -> Result<(), CliError> {
    if let Some(dir) = dir {
        save_state(dir, state).map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Dig(args) => cmd_dig(args),
        Command::Attack(args) => cmd_attack(&cli, args),
        Command::Resolve(args) => cmd_resolve(&cli, args),
        Command::Admin(args) => cmd_admin(&cli, args),
        Command::Zone(args) => cmd_zone(&cli, args),
    }
}

/// Administrative numbers are full digit strings, `+`-prefixed or bare,
/// with visual separators tolerated. The dialing context applies only to
/// dialed input on `resolve`, where short forms make sense.
fn parse_number(text: &str) -> Result<E164Number, CliError> {
    let dialed =
        DialString::new(text).map_err(|e| CliError::usage(format!("bad number {text:?}: {e}")))?;
    enumkit::e164::normalize(&dialed, None)
        .map_err(|e| CliError::usage(format!("bad number {text:?}: {e}")))
}

fn cmd_resolve(cli: &Cli, args: &ResolveArgs) -> Result<(), CliError> {
    let (mut state, dir) = open_state(cli)?;
    let now = Timestamp::now_system();
    let options = DialOptions {
        access_codes: state.access_codes.clone(),
        dialing_context: state.dialing_context.clone(),
        service_filter: args.service.clone(),
    };
    let dialed = DialString::new(args.number.clone())
        .map_err(|e| CliError::usage(e.to_string()))?;

    if args.meta {
        let number = normalized(&dialed, &options)?;
        let hits = metasearch(&state.roots, &number, args.service.as_deref(), None, now);
        if hits.is_empty() {
            return Err(CliError::new(
                EXIT_NOT_FOUND,
                format!("{number} is registered in no configured root"),
            ));
        }
        for hit in &hits {
            print_result(cli.format, hit, true);
        }
        return Ok(());
    }

    if args.bookmark {
        let number = normalized(&dialed, &options)?;
        let outcome = bookmark_and_resolve(
            &state.roots,
            &number,
            args.service.as_deref(),
            &mut state.bookmarks,
            None,
            now,
        );
        let result = match outcome {
            Ok(resolution) => resolution.result,
            Err(err) => {
                persist(&state, &dir)?; // an invalidated bookmark must stick
                return Err(err.into());
            }
        };
        persist(&state, &dir)?;
        print_result(cli.format, &result, false);
        return Ok(());
    }

    // --root overrides the default for plain numbers.
    let mut roots = state.roots.clone();
    if let Some(root) = args.root {
        if roots.get(root).is_none() {
            return Err(CliError::usage(format!("root {root} is not configured")));
        }
        roots.default_root = root;
    }
    match resolve_dial(&dialed, &roots, &options, None, now)? {
        DialOutcome::Bypass { code } => match cli.format {
            Format::Human => println!("BYPASS {code} (device-handled; no ENUM query issued)"),
            Format::Tsv => println!("bypass\t{code}"),
        },
        DialOutcome::Resolved(result) => print_result(cli.format, &result, false),
    }
    Ok(())
}

fn normalized(dialed: &DialString, options: &DialOptions) -> Result<E164Number, CliError> {
    enumkit::e164::normalize(dialed, options.dialing_context.as_deref())
        .map_err(|e| CliError::usage(e.to_string()))
}

fn print_result(format: Format, result: &ResolutionResult, with_root: bool) {
    match format {
        Format::Human => {
            if with_root {
                println!(
                    "root {} ({} zone{} queried):",
                    result.root_id,
                    result.queried_zones.len(),
                    if result.queried_zones.len() == 1 { "" } else { "s" }
                );
            }
            for (rank, contact) in result.contacts.iter().enumerate() {
                println!("{}. {} ({})", rank + 1, contact, contact.source_service);
            }
        }
        Format::Tsv => {
            for (rank, contact) in result.contacts.iter().enumerate() {
                if with_root {
                    println!(
                        "{}\t{}\t{}\t{}",
                        result.root_id,
                        rank + 1,
                        contact.source_service,
                        contact
                    );
                } else {
                    println!("{}\t{}\t{}", rank + 1, contact.source_service, contact);
                }
            }
        }
    }
}

fn parse_evidence(
    spec: &str,
    registrant: &str,
    number: &E164Number,
) -> Result<AuthEvidence, CliError> {
    let (method, payload) = spec
        .split_once(':')
        .ok_or_else(|| CliError::usage("evidence must be <method>:<payload>"))?;
    let method = AuthMethod::parse(method)
        .ok_or_else(|| CliError::usage(format!("unknown evidence method {method:?}")))?;
    // "ok" is shorthand for "the method vouches for the registering party".
    let payload = if payload == "ok" {
        registrant.to_string()
    } else {
        payload.to_string()
    };
    Ok(AuthEvidence::new(method, &payload, number.clone()))
}

fn load_record_set(path: &Path, number: &E164Number, apex: &str) -> Result<RecordSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let zone = parse_zone(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let expected = to_domain(number, apex).to_string();
    let section = zone
        .sections
        .into_iter()
        .find(|s| s.origin == expected)
        .ok_or_else(|| {
            CliError::usage(format!(
                "{}: no $ORIGIN {expected} section for {number}",
                path.display()
            ))
        })?;
    let owner = enumkit::e164::EnumDomain::parse(&section.origin, apex)
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(RecordSet::new(owner, section.ttl, section.records))
}

fn cmd_admin(cli: &Cli, args: &AdminArgs) -> Result<(), CliError> {
    let (mut state, dir) = open_state(cli)?;
    let now = Timestamp::now_system();
    let root_id = args.root.unwrap_or(state.roots.default_root);
    let apex = state
        .roots
        .get(root_id)
        .ok_or_else(|| CliError::usage(format!("root {root_id} is not configured")))?
        .apex
        .clone();
    let tree = state
        .roots
        .local_tree_mut(root_id)
        .ok_or_else(|| CliError::usage(format!("root {root_id} is remote; admin needs a local tree")))?;

    let seq = match &args.verb {
        AdminVerb::AuthorizeCc { cc, provider } => {
            tree.authorize_country(cc, provider, provider, now)?
        }
        AdminVerb::Delegate { number, tier2, cc } => {
            let number = parse_number(number)?;
            let cc = match cc {
                Some(cc) => cc.clone(),
                None => tree
                    .tier0()
                    .country_match(&number)
                    .map(|(cc, _)| cc.to_string())
                    .ok_or_else(|| {
                        CliError::usage(format!("no country code in this tree prefixes {number}"))
                    })?,
            };
            tree.delegate_number(&cc, &number, tier2, tier2, now)?
        }
        AdminVerb::Assign {
            number,
            registrant,
            carrier,
        } => {
            let number = parse_number(number)?;
            tree.oracle.assign(number.clone(), registrant, carrier);
            persist(&state, &dir)?;
            match cli.format {
                Format::Human => println!("assigned {number} to {registrant} via {carrier}"),
                Format::Tsv => println!("assigned\t{number}\t{registrant}\t{carrier}"),
            }
            return Ok(());
        }
        AdminVerb::Register {
            number,
            registrant,
            display,
            zone_file,
            evidence,
            mode,
            authority,
        } => {
            let number = parse_number(number)?;
            let set = load_record_set(zone_file, &number, &apex)?;
            let provider = tree
                .delegated_provider(&number)
                .map(str::to_string)
                .ok_or_else(|| {
                    CliError::usage(format!("{number} is not delegated; run admin delegate first"))
                })?;
            let mode = match mode {
                ModeArg::OptIn => ProvisioningMode::OptIn,
                ModeArg::OptOut => ProvisioningMode::OptOut,
                ModeArg::Mandated => ProvisioningMode::Mandated,
            };
            let enrollment = match (mode, evidence, authority) {
                (ProvisioningMode::OptIn, Some(spec), _) => {
                    Enrollment::Individual(parse_evidence(spec, registrant, &number)?)
                }
                (ProvisioningMode::OptIn, None, _) => {
                    return Err(CliError::usage("opt-in registration needs --evidence"))
                }
                (_, _, Some(authority)) => {
                    let (id, credential) = authority
                        .split_once(':')
                        .ok_or_else(|| CliError::usage("authority must be <id>:<credential>"))?;
                    Enrollment::Authority {
                        id: id.to_string(),
                        credential: credential.to_string(),
                    }
                }
                (_, _, None) => {
                    return Err(CliError::usage(
                        "opt-out/mandated registration needs --authority <id>:<credential>",
                    ))
                }
            };
            let carrier = tree
                .oracle
                .lookup(&number)
                .map(|e| e.carrier.clone())
                .unwrap_or_default();
            tree.register(
                &provider,
                &number,
                Registrant {
                    id: registrant.clone(),
                    display_name: display.clone().unwrap_or_else(|| registrant.clone()),
                    subscription_state: SubscriptionState::Active,
                    carrier,
                },
                enrollment,
                set,
                mode,
                now,
            )?
        }
        AdminVerb::Update {
            number,
            registrant,
            zone_file,
        } => {
            let number = parse_number(number)?;
            let set = load_record_set(zone_file, &number, &apex)?;
            tree.update_records(&number, registrant, set, now)?
        }
        AdminVerb::OptOut { number, registrant } => {
            let number = parse_number(number)?;
            tree.opt_out(&number, registrant, now)?
        }
        AdminVerb::Disconnect { number, mode } => {
            let number = parse_number(number)?;
            if let Some(mode) = mode {
                tree.config.lifecycle = match mode {
                    LifecycleArg::Coupled => LifecycleMode::Coupled,
                    LifecycleArg::Decoupled => LifecycleMode::Decoupled,
                };
            }
            tree.disconnect_number(&number, "operator", now)?
        }
        AdminVerb::Port { number, from, to } => {
            let number = parse_number(number)?;
            tree.port_number(&number, from, to, to, now)?
        }
        AdminVerb::Dispute { verb } => match verb {
            DisputeVerb::File {
                number,
                challenger,
                grounds,
            } => {
                let number = parse_number(number)?;
                tree.file_dispute(&number, challenger, grounds, now)?;
                tree.audit.last_seq()
            }
            DisputeVerb::Resolve { number, outcome } => {
                let number = parse_number(number)?;
                let outcome = match outcome {
                    OutcomeArg::Upheld => DisputeOutcome::Upheld,
                    OutcomeArg::Denied => DisputeOutcome::Denied,
                };
                tree.resolve_dispute(&number, outcome, "panel", now)?
            }
        },
    };

    persist(&state, &dir)?;
    match cli.format {
        Format::Human => println!("ok: audit seq {seq}"),
        Format::Tsv => println!("seq\t{seq}"),
    }
    Ok(())
}

fn cmd_zone(cli: &Cli, args: &ZoneArgs) -> Result<(), CliError> {
    let (mut state, dir) = open_state(cli)?;
    let root_id = args.root.unwrap_or(state.roots.default_root);
    match &args.verb {
        ZoneVerb::Export { out } => {
            let tree = state
                .roots
                .local_tree(root_id)
                .ok_or_else(|| CliError::usage(format!("root {root_id} has no local tree")))?;
            let mut sections = Vec::new();
            for zone in tree.tier2_zones() {
                for (_, registration) in zone.registrations() {
                    let set = &registration.record_set;
                    sections.push(ZoneSection {
                        origin: set.owner().to_string(),
                        ttl: set.ttl_seconds(),
                        records: set.records().to_vec(),
                    });
                }
            }
            sections.sort_by(|a, b| a.origin.cmp(&b.origin));
            let text = serialize_zone(&ZoneFile { sections });
            match out {
                Some(path) => std::fs::write(path, &text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        ZoneVerb::Import { file, tier2 } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
            let zone = parse_zone(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
            let apex = state
                .roots
                .get(root_id)
                .ok_or_else(|| CliError::usage(format!("root {root_id} is not configured")))?
                .apex
                .clone();
            let now = Timestamp::now_system();
            let tree = state
                .roots
                .local_tree_mut(root_id)
                .ok_or_else(|| CliError::usage(format!("root {root_id} has no local tree")))?;
            let mut imported = 0usize;
            for section in zone.sections {
                let owner = enumkit::e164::EnumDomain::parse(&section.origin, &apex)
                    .map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
                let number = enumkit::e164::from_domain(&owner);
                let delegated = tree.delegated_provider(&number).map(str::to_string);
                if delegated.is_none() {
                    return Err(CliError::usage(format!(
                        "{number} is not delegated; import covers existing registrations"
                    )));
                }
                if let Some(required) = tier2 {
                    if delegated.as_deref() != Some(required.as_str()) {
                        return Err(CliError::usage(format!(
                            "{number} is delegated to {:?}, not {required:?}",
                            delegated.unwrap_or_default()
                        )));
                    }
                }
                let registrant = tree
                    .registration(&number)
                    .map(|r| r.registrant.id.clone())
                    .ok_or_else(|| {
                        CliError::new(EXIT_NOT_FOUND, format!("{number} has no registration"))
                    })?;
                let set = RecordSet::new(owner, section.ttl, section.records);
                tree.update_records(&number, &registrant, set, now)?;
                imported += 1;
            }
            persist(&state, &dir)?;
            match cli.format {
                Format::Human => println!("imported {imported} record set(s)"),
                Format::Tsv => println!("imported\t{imported}"),
            }
            Ok(())
        }
    }
}

fn cmd_dig(args: &DigArgs) -> Result<(), CliError> {
    // A bare domain passes through; anything that normalizes to a number
    // is converted under the apex.
    let domain = match E164Number::new(args.target.trim_start_matches('+')) {
        Ok(number) => to_domain(&number, &args.apex).to_string(),
        Err(_) => args.target.clone(),
    };
    let query = wire::encode_query(&domain, wire::random_query_id())
        .map_err(|e| CliError::usage(e.to_string()))?;
    let response = wire::udp_exchange(
        &args.server,
        &query,
        Duration::from_millis(args.timeout_ms),
        args.retries,
    )
    .map_err(|e| match e {
        wire::WireError::Timeout { .. } | wire::WireError::IdMismatchExhausted { .. } => {
            CliError::new(EXIT_TIMEOUT, e.to_string())
        }
        other => CliError::usage(other.to_string()),
    })?;
    let message = wire::decode_message(&response).map_err(|e| CliError::usage(e.to_string()))?;
    if message.flags.rcode == wire::RCODE_NXDOMAIN {
        return Err(CliError::new(EXIT_NOT_FOUND, format!("NXDOMAIN for {domain}")));
    }
    if message.flags.rcode != 0 {
        return Err(CliError::usage(format!(
            "server returned rcode {}",
            message.flags.rcode
        )));
    }
    for answer in &message.answers {
        if let Some(naptr) = &answer.naptr {
            let record = naptr
                .to_record(enumkit::naptr::ere::PlusMode::Lenient)
                .map_err(|e| CliError::usage(e.to_string()))?;
            println!("{}", serialize_record(&record));
        }
    }
    Ok(())
}

fn cmd_attack(cli: &Cli, args: &AttackArgs) -> Result<(), CliError> {
    let Some(kind) = ScenarioKind::parse(&args.scenario) else {
        return Err(CliError::usage(format!(
            "unknown scenario {:?}: expected hijack, eavesdrop, or dos",
            args.scenario
        )));
    };
    let mut env = ThreatEnv::seeded();
    env.set_enforcement(matches!(args.enforce, EnforceArg::On));
    let victim = E164Number::new(seed::ACME_NUMBER).expect("fixture number");
    let report = match kind {
        ScenarioKind::Hijack => run_hijack(&mut env, &victim, seed::BETA),
        ScenarioKind::Eavesdrop => run_eavesdrop(&mut env, &victim, seed::BETA),
        ScenarioKind::DenialOfService => run_dos(&mut env, &victim, seed::BETA),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    match cli.format {
        Format::Human => print!("{}", report.render_human()),
        Format::Tsv => print!("{}", report.render_tsv()),
    }
    // The report is the product; the attack outcome is not an exit code.
    Ok(())
}
