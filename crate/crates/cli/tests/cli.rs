use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TUPLE: &str = r#"{
  "schema_version": 1,
  "dim": 2,
  "states": [
    {"re": [[0.7, 0.1], [0.1, 0.3]], "im": [[0.0, 0.05], [-0.05, 0.0]]},
    {"re": [[0.4, -0.2], [-0.2, 0.6]], "im": [[0.0, 0.0], [0.0, 0.0]]},
    {"re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]}
  ]
}
"#;

fn multifid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multifid")).args(args).env_remove("MULTIFID_SEED").output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.is_empty() || text.ends_with('\n'));
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write_tuple(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn value(args: &[&str]) -> f64 {
    let out = multifid(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    records(&out)[0]["value"].as_f64().unwrap()
}

#[test]
fn compute_chain_holds_across_measures() {
    let dir = TempDir::new().unwrap();
    let input = write_tuple(&dir, "t.json", TUPLE);
    let get = |m: &str| value(&["compute", "--input", &input, "--measure", m]);
    let (fh, fu, fs, fsdp) = (get("holevo"), get("uhlmann"), get("fsecrecy"), get("fsdp"));
    assert!(fh <= fs + 1e-8 && fs <= fsdp + 1e-8 && fsdp <= fu + 1e-8 && fu <= fh.sqrt() + 1e-8);
}

#[test]
fn compute_writes_out_file_matching_stdout() {
    let dir = TempDir::new().unwrap();
    let input = write_tuple(&dir, "t.json", TUPLE);
    let out_path = dir.path().join("rec.jsonl");
    let out = multifid(&["compute", "--input", &input, "--measure", "fsdp", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), out.stdout);
    let rec = &records(&out)[0];
    assert_eq!(rec["method"], "sdp_kstar");
    assert_eq!(rec["certificate"]["status"], "optimal");
}

#[test]
fn measured_is_seed_reproducible_via_env() {
    let dir = TempDir::new().unwrap();
    let input = write_tuple(&dir, "t.json", TUPLE);
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_multifid"))
            .args(["compute", "--input", &input, "--measure", "measured", "--budget", "500", "--restarts", "2"])
            .env("MULTIFID_SEED", "17")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_measure_exits_two() {
    let dir = TempDir::new().unwrap();
    let input = write_tuple(&dir, "t.json", TUPLE);
    let out = multifid(&["compute", "--input", &input, "--measure", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn truncated_file_exits_two_with_position() {
    let dir = TempDir::new().unwrap();
    let input = write_tuple(&dir, "bad.json", &TUPLE[..60]);
    let out = multifid(&["compute", "--input", &input, "--measure", "fsdp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn corrupted_state_exits_three() {
    let dir = TempDir::new().unwrap();
    // trace 1 but a negative eigenvalue well beyond repair tolerance
    let bad = TUPLE.replace("[[0.7, 0.1], [0.1, 0.3]]", "[[1.2, 0.1], [0.1, -0.2]]");
    let input = write_tuple(&dir, "bad.json", &bad);
    for cmd in [vec!["compute", "--input", &input, "--measure", "uhlmann"], vec!["verify", "--input", &input]] {
        let out = multifid(&cmd);
        assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn strict_rejects_what_repair_accepts() {
    let dir = TempDir::new().unwrap();
    let nudged = TUPLE.replace("[[0.5, 0.0], [0.0, 0.5]]", "[[0.5000001, 0.0], [0.0, 0.5]]");
    let input = write_tuple(&dir, "n.json", &nudged);
    assert!(multifid(&["compute", "--input", &input, "--measure", "uhlmann"]).status.success());
    let strict = multifid(&["compute", "--input", &input, "--measure", "uhlmann", "--strict"]);
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn verify_suite_emits_reports_and_summary() {
    let out = multifid(&["verify", "--suite", "kwise-ordering-classical", "--trials", "20", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    let summary = recs.last().unwrap();
    assert_eq!(summary["summary"], true);
    assert_eq!(summary["failed"].as_array().unwrap().len(), 0);
    assert!(recs[..recs.len() - 1].iter().all(|r| r["failures"] == 0 && r["trials"] == 20));

    let again = multifid(&["verify", "--suite", "kwise-ordering-classical", "--trials", "20", "--seed", "3"]);
    assert_eq!(records(&again).last().unwrap()["digest"], summary["digest"]);
}

#[test]
fn verify_unknown_suite_exits_two() {
    assert_eq!(multifid(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn reproduce_passing_examples() {
    for which in ["measured-gap", "matusita-zero"] {
        let out = multifid(&["reproduce", which]);
        assert!(out.status.success(), "{which}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(records(&out).iter().all(|r| r["summary"] == true || r["failures"] == 0));
    }
}

#[test]
fn reproduce_failure_names_properties_and_exits_three() {
    let out = multifid(&["reproduce", "supermult"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reproduce.supermult.squared"));
}

#[test]
fn search_returns_ranked_candidates() {
    let out = multifid(&["search", "--target", "chain", "--trials", "10", "--top-k", "3", "--d-max", "2"]);
    assert!(out.status.success());
    let recs = records(&out);
    assert_eq!(recs.len(), 3);
    for (k, r) in recs.iter().enumerate() {
        assert_eq!(r["rank"], k + 1);
        assert_eq!(r["d"], 2);
    }
    assert!(recs.windows(2).all(|w| w[0]["score"].as_f64() >= w[1]["score"].as_f64()));
}

#[test]
fn search_candidate_round_trips_into_compute() {
    let dir = TempDir::new().unwrap();
    let out = multifid(&["search", "--target", "fu-vs-fsdp-strict", "--trials", "5", "--top-k", "1"]);
    assert!(out.status.success());
    let tuple = serde_json::to_string(&records(&out)[0]["tuple"]).unwrap();
    let input = write_tuple(&dir, "c.json", &tuple);
    assert!(Path::new(&input).exists());
    assert!(value(&["compute", "--input", &input, "--measure", "fsdp"]) <= 1.0);
}
