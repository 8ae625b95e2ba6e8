//! CLI acceptance: the exit-code contract over the seeded sample state,
//! zone export/import/export byte-identity, and the live dig path
//! against a loopback responder. Prints one PASS line per criterion
//! (`--nocapture` to see them).

use std::path::Path;
use std::process::{Command, Output};

use enumkit::seed;
use enumkit::wire::responder::NaptrResponder;

fn enumkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enumkit"))
}

fn run(args: &[&str]) -> Output {
    enumkit().args(args).output().expect("binary runs")
}

fn run_in_state(state: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--state", state.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn seed_state(dir: &Path) {
    let output = run(&[
        "--state",
        dir.to_str().unwrap(),
        "--seed-paper",
        "resolve",
        "+112025551212",
    ]);
    assert_eq!(code(&output), 0, "seeding resolve must succeed");
}

#[test]
fn c10_cli_exit_codes_and_zone_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path();
    seed_state(state);

    // Exit 0: the worked example resolves, sip first, tel last.
    let ok = run_in_state(state, &["--format", "tsv", "resolve", "+112025551212"]);
    assert_eq!(code(&ok), 0);
    let lines: Vec<String> = stdout(&ok).lines().map(str::to_string).collect();
    assert_eq!(
        lines,
        [
            "1\tsip+E2U\tsip:johndoe@company.com",
            "2\ttel+E2U\ttel:+112025551212"
        ]
    );

    // Exit 0: access codes bypass without touching the database.
    let bypass = run_in_state(state, &["resolve", "911"]);
    assert_eq!(code(&bypass), 0);
    assert!(stdout(&bypass).starts_with("BYPASS"));

    // Exit 0: extension routing reaches root 36.
    let tagged = run_in_state(state, &["--format", "tsv", "resolve", "5551212#36"]);
    assert_eq!(code(&tagged), 0);
    assert_eq!(stdout(&tagged).trim(), format!("1\tsip+E2U\t{}", seed::JOE_ALT_SIP));

    // Exit 2: a delegated but unregistered number.
    let missing = run_in_state(state, &["resolve", &format!("+{}", seed::CHARLIE_NUMBER)]);
    assert_eq!(code(&missing), 2);

    // Exit 3: an update by someone who is not the registrant of record.
    let zone_path = state.join("evil.zone");
    std::fs::write(
        &zone_path,
        "$ORIGIN 0.0.1.0.5.5.5.2.0.2.1.e164.foo\n$TTL 3600\nIN NAPTR 10 10 \"u\" \"sip+E2U\" \"!^.*$!sip:evil@beta.example!\" .\n",
    )
    .unwrap();
    let forged = run_in_state(
        state,
        &[
            "admin",
            "update",
            "--number",
            seed::ACME_NUMBER,
            "--registrant",
            "beta",
            "--zone-file",
            zone_path.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&forged), 3);

    // Exit 4: malformed inputs of several shapes.
    assert_eq!(code(&run_in_state(state, &["attack", "nosuch"])), 4);
    assert_eq!(code(&run_in_state(state, &["resolve", "5551212#99"])), 4);
    assert_eq!(code(&run(&["definitely-not-a-subcommand"])), 4);
    let bad_zone = state.join("bad.zone");
    std::fs::write(
        &bad_zone,
        "$ORIGIN 9.9.1.0.5.5.5.2.0.2.1.e164.foo\nIN NAPTR 10 10 \"z\" \"sip+E2U\" \"!a!b!\" .\n",
    )
    .unwrap();
    let bad_import = run_in_state(
        state,
        &["zone", "import", bad_zone.to_str().unwrap(), "--tier2", "t2-foo"],
    );
    assert_eq!(code(&bad_import), 4);
    let stderr = String::from_utf8_lossy(&bad_import.stderr).to_string();
    assert!(stderr.contains("line 2"), "syntax errors report the line: {stderr}");

    // Exit 5: a silent endpoint times out.
    let silent = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
    let endpoint = silent.local_addr().unwrap().to_string();
    let timed_out = run(&[
        "dig",
        "1.e164.arpa",
        "--server",
        &endpoint,
        "--timeout-ms",
        "100",
        "--retries",
        "1",
    ]);
    assert_eq!(code(&timed_out), 5);

    // Zone export -> import -> export is byte-identical.
    let export1 = state.join("out1.zone");
    let export2 = state.join("out2.zone");
    assert_eq!(
        code(&run_in_state(state, &["zone", "export", "--out", export1.to_str().unwrap()])),
        0
    );
    assert_eq!(
        code(&run_in_state(
            state,
            &["zone", "import", export1.to_str().unwrap(), "--tier2", "t2-foo"]
        )),
        0
    );
    assert_eq!(
        code(&run_in_state(state, &["zone", "export", "--out", export2.to_str().unwrap()])),
        0
    );
    let bytes1 = std::fs::read(&export1).unwrap();
    let bytes2 = std::fs::read(&export2).unwrap();
    assert_eq!(bytes1, bytes2, "export/import/export must be byte-identical");
    // The export carries the sample records verbatim under their origin.
    let text = String::from_utf8(bytes1).unwrap();
    assert!(text.contains("$ORIGIN 2.1.2.1.5.5.5.2.0.2.1.1.e164.foo"));
    assert!(text.contains(r#"IN NAPTR 102 10 "u" "tel+E2U" "!^.*$!tel:+112025551212!" ."#));
    assert!(text.contains(r#"IN NAPTR 10 10 "u" "sip+E2U" "!+(.*)!sip:johndoe@company.com!" ."#));
    assert!(text.contains(r#"IN NAPTR 100 10 "u" "mailto+E2U" "!^$!mailto:johndoe@company.com!" ."#));

    println!("PASS criterion 10: exit codes 0/2/3/4/5 verified; zone export-import-export byte-identical");
}

#[test]
fn dig_against_loopback_responder() {
    let responder = NaptrResponder::from_tree(&seed::paper_tree()).unwrap();
    let output = run(&[
        "dig",
        "+112025551212",
        "--server",
        &responder.endpoint(),
        "--apex",
        seed::PAPER_APEX,
    ]);
    assert_eq!(code(&output), 0);
    let text = stdout(&output);
    assert!(text.contains(r#"IN NAPTR 102 10 "u" "tel+E2U" "!^.*$!tel:+112025551212!" ."#));
    assert!(text.contains(r#"IN NAPTR 10 10 "u" "sip+E2U" "!+(.*)!sip:johndoe@company.com!" ."#));
    assert!(text.contains(r#"IN NAPTR 100 10 "u" "mailto+E2U" "!^$!mailto:johndoe@company.com!" ."#));

    // NXDOMAIN from the responder surfaces as exit 2.
    let missing = run(&[
        "dig",
        "9.9.9.9.9.9.9.9.9.9.9.e164.foo",
        "--server",
        &responder.endpoint(),
    ]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn attack_matrix_through_cli() {
    for scenario in ["hijack", "eavesdrop", "dos"] {
        let on = run(&["--format", "tsv", "attack", scenario, "--enforce", "on"]);
        assert_eq!(code(&on), 0, "attack {scenario} exits 0 regardless of outcome");
        assert!(stdout(&on).contains("attack_succeeded\tfalse"));

        let off = run(&["--format", "tsv", "attack", scenario, "--enforce", "off"]);
        assert_eq!(code(&off), 0);
        let text = stdout(&off);
        assert!(text.contains("attack_succeeded\ttrue"), "{scenario}: {text}");
        assert!(text.contains("detected\ttrue"), "{scenario}: {text}");
    }
}

#[test]
fn disconnect_then_resolve_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    seed_state(dir.path());
    let disconnect = run_in_state(
        dir.path(),
        &["admin", "disconnect", "--number", seed::PAPER_NUMBER, "--mode", "coupled"],
    );
    assert_eq!(code(&disconnect), 0);
    let resolve = run_in_state(dir.path(), &["resolve", "+112025551212"]);
    assert_eq!(code(&resolve), 2);
}

#[test]
fn bookmark_store_persists_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    seed_state(dir.path());
    let first = run_in_state(dir.path(), &["resolve", "+112025551212", "--bookmark"]);
    assert_eq!(code(&first), 0);
    let bookmarks = std::fs::read_to_string(dir.path().join("bookmarks.tsv")).unwrap();
    assert!(bookmarks.starts_with("112025551212\t36\t"), "{bookmarks}");
    let second = run_in_state(dir.path(), &["--format", "tsv", "resolve", "+112025551212", "--bookmark"]);
    assert_eq!(code(&second), 0);
    assert_eq!(stdout(&second).trim(), format!("1\tsip+E2U\t{}", seed::JOE_ALT_SIP));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}
