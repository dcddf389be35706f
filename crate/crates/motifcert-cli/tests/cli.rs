use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motifcert")).args(args).env("MOTIFCERT_THREADS", "1").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_error_exits_one() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["decompose"]).status.code(), Some(1));
}

#[test]
fn data_error_exits_two() {
    let o = run(&["decompose", "((.)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(run(&["energy", "GGGAAACC", "(((...)))"]).status.code(), Some(2));
}

#[test]
fn decompose_lists_one_row_per_loop() {
    let o = run(&["decompose", "..(((...((((.....))...))...((..((....))...))...)))..", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().map(Vec::len), Some(12));
}

#[test]
fn fold_then_energy_agree() {
    let o = run(&["fold", "GGGGAAAACCCC"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let structure = text.split_whitespace().nth(1).unwrap().to_string();
    let e = run(&["energy", "GGGGAAAACCCC", &structure]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
}

#[test]
fn scan_of_designable_structure_finds_nothing_and_fills_db() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("small.txt");
    let db = dir.path().join("motifs.jsonl");
    fs::write(&input, "# two stems\nhp\t((((....))))\n").unwrap();
    let o = run(&["scan", path(&input), "--db", path(&db), "--budget-m", "1000000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("minimal undesignable 0"));
    assert!(db.exists());
    let stats = run(&["db", "stats", path(&db), "--format", "json"]);
    assert!(stats.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&stats)).unwrap();
    assert!(v.is_object());
}

#[test]
fn enum_then_merge_with_itself_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("enum.jsonl");
    let o = run(&["enum", "--max-len", "6", "--db", path(&db)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let merged = dir.path().join("merged.jsonl");
    let m = run(&["db", "merge", path(&db), path(&db), "--out", path(&merged)]);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    assert_eq!(fs::read_to_string(&db).unwrap(), fs::read_to_string(&merged).unwrap());
}

#[test]
fn merge_rejects_unreadable_database() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{not json\n").unwrap();
    assert_eq!(run(&["db", "merge", path(&bad), path(&bad)]).status.code(), Some(2));
}
