use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn resto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resto"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_prints_counts_value_and_sequence() {
    let out = resto(&["solve", p(&fixture("scenario-1.json"))]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("states=37 value=2.9048\n"), "{text}");
    assert!(text.contains("sequence={2} {1,4} {3}\n"));

    let full = stdout(&resto(&[
        "solve",
        "--no-simplify",
        p(&fixture("toy6.scenario.json")),
    ]));
    let simple = stdout(&resto(&["solve", p(&fixture("toy6.scenario.json"))]));
    assert!(full.starts_with("states=188 "));
    let value = |t: &str| {
        t.lines()
            .next()
            .unwrap()
            .split("value=")
            .nth(1)
            .unwrap()
            .to_string()
    };
    assert_eq!(value(&full), value(&simple));

    let target = stdout(&resto(&[
        "solve",
        "--target",
        "b6",
        p(&fixture("toy6.scenario.json")),
    ]));
    assert!(target.contains("sequence={0,5}\n"));
}

#[test]
fn solve_writes_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("mdp.txt");
    let out = resto(&[
        "solve",
        p(&fixture("toy6.scenario.json")),
        "--dump",
        p(&dump),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().count(), 76);
    assert!(text.starts_with("0 0x0 UUUUUU N | {0,5} "));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"network":"missing.json"}"#).unwrap();
    let out = resto(&["solve", p(&bad)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let out = resto(&["solve", p(&fixture("toy6.scenario.json")), "--target", "zz"]);
    assert!(!out.status.success());
}

#[test]
fn step_walks_scenario_one() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("s1.json");
    assert!(resto(&[
        "solve",
        p(&fixture("scenario-1.json")),
        "--session",
        p(&session)
    ])
    .status
    .success());

    let out = resto(&[
        "step",
        p(&session),
        r#"{"action":[2],"outcomes":{"2":"E"}}"#,
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("next={1,4}\n"));

    let out = resto(&["step", p(&session), "1:D,4:E"]);
    assert!(stdout(&out).contains("next={5}\n"));

    let before = std::fs::read(&session).unwrap();
    let out = resto(&["step", p(&session), "9:E"]);
    assert!(!out.status.success());
    assert_eq!(std::fs::read(&session).unwrap(), before);
    let out = resto(&["step", p(&session), "nonsense"]);
    assert!(!out.status.success());
    assert_eq!(std::fs::read(&session).unwrap(), before);

    let out = resto(&["step", p(&session), "5:E"]);
    assert!(stdout(&out).contains("next={3}\n"));
    let out = resto(&["step", p(&session), "3:E"]);
    let text = stdout(&out);
    assert!(text.contains("state=EDEEEE\n"));
    assert!(text.contains("next=none\n"));
}

#[test]
fn stats_lists_sizes() {
    let out = resto(&["stats", p(&fixture("toy6.scenario.json")), "--no-simplify"]);
    let text = stdout(&out);
    assert!(text.contains("states=188\n"));
    assert!(text.contains("simplified=false\n"));
}
