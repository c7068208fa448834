use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const ROSTER: &str = r#"[
  {"agent_id": "A", "kind": "playbook", "params": {"victims": ["B"], "good_f": 0.8}},
  {"agent_id": "B", "kind": "trust_proportional", "params": {"gain": 1.0}},
  {"agent_id": "C", "kind": "cooperator"},
  {"agent_id": "D", "kind": "betrayer", "params": {"k": 2}},
  {"agent_id": "E", "kind": "reciprocator", "params": {"f": 0.8}},
  {"agent_id": "F", "kind": "random", "params": {"lo": 0.2, "hi": 0.8}}
]"#;

const DEFECTORS: &str = r#"[
  {"agent_id": "a", "kind": "defector"},
  {"agent_id": "b", "kind": "defector"},
  {"agent_id": "c", "kind": "defector"},
  {"agent_id": "d", "kind": "defector"}
]"#;

fn trustgame(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trustgame"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("roster.json"), ROSTER).unwrap();
    fs::write(dir.path().join("defectors.json"), DEFECTORS).unwrap();
    dir
}

#[test]
fn simulate_is_deterministic() {
    let dir = setup();
    for out in ["one", "two"] {
        ok(&trustgame(
            dir.path(),
            &["simulate", "--seed", "1", "--roster", "defectors.json", "--condition", "simple", "--out", out],
        ));
    }
    for file in ["rounds.csv", "trajectories.csv", "manifest.json"] {
        let a = fs::read(dir.path().join("one").join(file)).unwrap();
        let b = fs::read(dir.path().join("two").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let rounds = fs::read_to_string(dir.path().join("one/rounds.csv")).unwrap();
    assert!(rounds.lines().skip(1).all(|l| l.ends_with(",0,0")));
}

#[test]
fn score_emits_one_row_per_update() {
    let dir = setup();
    ok(&trustgame(dir.path(), &["simulate", "--seed", "4", "--roster", "roster.json", "--out", "sim"]));
    ok(&trustgame(dir.path(), &["score", "--in", "sim/rounds.csv", "--params", "default", "--out", "sc"]));
    let rounds = fs::read_to_string(dir.path().join("sim/rounds.csv")).unwrap();
    let updates: usize = rounds
        .lines()
        .skip(1)
        .map(|l| if l.split(',').nth(5) == Some("0") { 1 } else { 2 })
        .sum();
    let scored = fs::read_to_string(dir.path().join("sc/trajectories.csv")).unwrap();
    assert_eq!(scored.lines().count() - 1, updates);
    // scoring the simulated log reproduces the simulator's own trajectories
    let simulated = fs::read_to_string(dir.path().join("sim/trajectories.csv")).unwrap();
    assert_eq!(scored, simulated);

    ok(&trustgame(dir.path(), &["score", "--in", "sim/rounds.csv", "--out", "sc2"]));
    assert_eq!(
        fs::read(dir.path().join("sc/manifest.json")).unwrap(),
        fs::read(dir.path().join("sc2/manifest.json")).unwrap()
    );
}

#[test]
fn compare_writes_table_shaped_csv_and_valid_json() {
    let dir = setup();
    ok(&trustgame(
        dir.path(),
        &["simulate", "--seed", "2", "--roster", "roster.json", "--condition", "all", "--out", "sim"],
    ));
    let out = trustgame(dir.path(), &["compare", "--in", "sim/rounds.csv", "--start-round", "4", "--out", "cmp"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("round"));
    let csv = fs::read_to_string(dir.path().join("cmp/comparison.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "round,role,df,t_trust,adj_r2_trust,t_reputation,adj_r2_reputation,n"
    );

    ok(&trustgame(
        dir.path(),
        &["compare", "--in", "sim/rounds.csv", "--format", "json", "--out", "cmpj"],
    ));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("cmpj/comparison.json")).unwrap()).unwrap();
    let schema: serde_json::Value = serde_json::from_str(include_str!("../schemas/comparison-report.schema.json")).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    if let Err(errors) = compiled.validate(&report) {
        let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
        panic!("schema violations: {msgs:?}");
    }
    assert!(!report["report"]["rows"].as_array().unwrap().is_empty());
}

#[test]
fn analyze_writes_measures_and_tests() {
    let dir = setup();
    ok(&trustgame(
        dir.path(),
        &["simulate", "--seed", "2", "--roster", "roster.json", "--condition", "all", "--out", "sim"],
    ));
    ok(&trustgame(dir.path(), &["analyze", "--in", "sim/rounds.csv", "--out", "an"]));
    for f in ["measures.csv", "zero_rates.csv", "tests.csv", "manifest.json"] {
        assert!(dir.path().join("an").join(f).exists(), "{f}");
    }
    let tests = fs::read_to_string(dir.path().join("an/tests.csv")).unwrap();
    assert_eq!(tests.lines().count(), 7);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let code = |args: &[&str]| trustgame(dir.path(), args).status.code();
    assert_eq!(code(&["simulate", "--bogus"]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["simulate", "--roster", "roster.json", "--condition", "sideways"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["compare", "--in", "missing.csv"]), Some(2));

    fs::write(dir.path().join("bad.csv"), "session_id,game_condition,round,sender_id,receiver_id,amount_sent,amount_returned\ns1,simple,1,A,B,7,30\n").unwrap();
    let out = trustgame(dir.path(), &["score", "--in", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    fs::write(dir.path().join("bad_roster.json"), r#"[{"agent_id": "x", "kind": "saint"}]"#).unwrap();
    assert_eq!(code(&["simulate", "--roster", "bad_roster.json"]), Some(2));
}

#[test]
fn usage_errors_show_help_text() {
    let dir = setup();
    let out = trustgame(dir.path(), &["score", "--nope"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage: trustgame score"), "{err}");
}
