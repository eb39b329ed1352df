use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn data() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data")
}

fn fbac(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fbac"));
    c.current_dir(data()).env_remove("FBAC_POLICY_DIR").args(args);
    c
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = fbac(args).output().unwrap();
    split(out)
}

fn run_with_stdin(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut child = fbac(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    split(child.wait_with_output().unwrap())
}

fn split(out: Output) -> (i32, String, String) {
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn view_redacts_what_the_viewer_may_not_read() {
    let (code, out, _) = run(&["--as", "carol", "view", "memo"]);
    assert_eq!(code, 0);
    assert!(out.contains("Quarterly results are in."));
    assert!(out.contains("[REDACTED]") && out.contains("[BLURRED IMAGE]"));
    assert!(!out.contains("acquisition"));
}

#[test]
fn view_json_lists_segments() {
    let (code, out, _) = run(&["--as", "alice", "--json", "view", "memo"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(out.contains("acquisition"), "{v}");
}

#[test]
fn search_context_follows_the_predicate() {
    let (code, out, _) = run(&["--as", "bob", "search", "memo", "--pattern", "board", "--context", "1"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2, "{out}");
    assert!(out.contains("p2:2:Do not discuss outside the board."));

    let (code, out, _) = run(&["--as", "bob", "search", "memo", "--pattern", "board", "--context", "2"]);
    assert_eq!(code, 0);
    assert!(!out.contains("board"), "{out}");

    let (code, out, err) = run(&["--as", "bob", "search", "memo/p2", "--pattern", "board", "--context", "2"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("denied"));
}

#[test]
fn denied_verbs_exit_with_two() {
    let (code, out, err) = run(&["--as", "carol", "print", "memo"]);
    assert_eq!((code, out.as_str()), (2, ""));
    assert!(err.contains("`print` is not permitted"));
    let (code, _, _) = run(&["--as", "alice", "email", "memo", "--to", "x@example.org"]);
    assert_eq!(code, 2);
}

#[test]
fn print_carries_the_watermark() {
    let (code, out, _) = run(&["--as", "alice", "print", "memo"]);
    assert_eq!(code, 0);
    assert!(out.contains("INTERNAL copy for alice"), "{out}");
}

#[test]
fn composite_needs_its_own_grant() {
    let (code, out, _) = run(&["--as", "carol", "invoke", "search_standard∘read", "memo/p1", "-o", "pattern=flat"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("Hiring stays flat until spring."));
    let (code, _, _) = run(&["--as", "alice", "invoke", "search_standard∘read", "memo/p1", "-o", "pattern=flat"]);
    assert_eq!(code, 2);
}

#[test]
fn projection_shows_the_matrix() {
    let (code, out, _) = run(&["project", "--kind", "acm", "--function", "read"]);
    assert_eq!(code, 0);
    let bob = out.lines().find(|l| l.starts_with("bob")).unwrap();
    assert_eq!(bob.split('|').map(str::trim).collect::<Vec<_>>(), ["bob", "False", "True", "False"]);
}

#[test]
fn convert_round_trips_plain_text() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("minutes.txt");
    let adoc = dir.path().join("minutes.adoc");
    std::fs::write(&txt, "first paragraph\nstill first\n\nsecond paragraph\n").unwrap();
    let (code, _, err) = run(&["convert", "--from", "txt", "--to", "adoc", txt.to_str().unwrap(), "-o", adoc.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let xml = std::fs::read_to_string(&adoc).unwrap();
    assert!(xml.contains("id=\"minutes\""));
    let (code, out, _) = run(&["convert", "--from", "adoc", "--to", "txt", adoc.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim_end(), "first paragraph\nstill first\n\nsecond paragraph");
}

#[test]
fn shell_keeps_copies_for_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("notes.adoc");
    let script = format!(
        "copy memo/p1 --variant cite --dest notes\nview notes\nsave notes {}\nnonsense\naudit --json\nquit\n",
        saved.display()
    );
    let (code, out, err) =
        run_with_stdin(&["--as", "alice", "shell", "--policy", "shared.policy", "--doc", "memo.adoc"], &script);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Source: memo"), "{out}");
    assert!(err.contains("unrecognized subcommand 'nonsense'"));
    let xml = std::fs::read_to_string(&saved).unwrap();
    let d = fbac::adoc::parse(xml.as_bytes(), &fbac::guarded::Catalog::standard()).unwrap();
    assert_eq!(d.atoms.len(), 2);
    assert_eq!(out.lines().filter(|l| l.contains("\"sequence\"")).count(), 2);
}

#[test]
fn configuration_errors_exit_with_one() {
    let (code, _, err) = run(&["--policy-dir", "/nonexistent", "--as", "alice", "view", "memo"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
}
