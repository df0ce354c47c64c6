use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name)
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn reserve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reserve")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_matching(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn solve_example4_scu_golden() {
    let ex4 = corpus("example4.json");
    for imp in ["flow", "compact", "bipartite"] {
        let out = reserve(&["solve", "--instance", path_str(&ex4), "--rule", "scu", "--impl", imp]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(stdout(&out), golden("solve_example4_scu.json"), "{imp}");
    }
}

#[test]
fn solve_example1_rev_text_golden() {
    let out = reserve(&[
        "--format",
        "text",
        "solve",
        "--instance",
        path_str(&corpus("example1.json")),
        "--rule",
        "rev",
        "--baseline",
        "i1,i2,i3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), golden("solve_example1_rev.txt"));
}

#[test]
fn solve_example1_mma_both_orders() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_matching(dir.path(), "seed.json", "{\"assignment\":{\"0\":0,\"1\":null,\"2\":1}}\n");
    let ex1 = corpus("example1.json");
    let mut results = Vec::new();
    for order in ["c1,c2", "c2,c1"] {
        let out_file = dir.path().join(format!("{order}.json"));
        let out = reserve(&[
            "solve",
            "--instance",
            path_str(&ex1),
            "--rule",
            "mma",
            "--seed-matching",
            path_str(&seed),
            "--order",
            order,
            "--out",
            path_str(&out_file),
        ]);
        assert_eq!(out.status.code(), Some(0));
        results.push(std::fs::read_to_string(out_file).unwrap());
    }
    assert_eq!(results[0], "{\"assignment\":{\"0\":null,\"1\":0,\"2\":1}}\n");
    assert_eq!(results[1], "{\"assignment\":{\"0\":0,\"1\":1,\"2\":null}}\n");
}

#[test]
fn mma_rejects_non_maximum_seed() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_matching(dir.path(), "seed.json", "{\"assignment\":{\"0\":0}}\n");
    let out = reserve(&[
        "solve",
        "--instance",
        path_str(&corpus("example1.json")),
        "--rule",
        "mma",
        "--seed-matching",
        path_str(&seed),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_priority_inversion_golden() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write_matching(dir.path(), "mu.json", "{\"assignment\":{\"0\":0,\"2\":1}}\n");
    let out = reserve(&[
        "check",
        "--instance",
        path_str(&corpus("example1.json")),
        "--matching",
        path_str(&mu),
        "--axiom",
        "respect-priorities",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out), golden("check_example1_priorities.json"));
}

#[test]
fn check_example3_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let ex3 = corpus("example3.json");
    let mu1 = write_matching(dir.path(), "mu1.json", "{\"assignment\":{\"0\":0,\"2\":1}}\n");
    let mu2 = write_matching(dir.path(), "mu2.json", "{\"assignment\":{\"1\":1,\"2\":0}}\n");
    for search in ["flow", "oracle"] {
        let fail = reserve(&[
            "check",
            "--instance",
            path_str(&ex3),
            "--matching",
            path_str(&mu1),
            "--axiom",
            "respect-precedence",
            "--search",
            search,
        ]);
        assert_eq!(fail.status.code(), Some(1));
        let v: Value = serde_json::from_str(&stdout(&fail)).unwrap();
        assert_eq!(
            v[0]["witness"]["alternative"]["assignment"],
            serde_json::json!({"0": null, "1": 1, "2": 0})
        );
        let pass = reserve(&[
            "check",
            "--instance",
            path_str(&ex3),
            "--matching",
            path_str(&mu2),
            "--axiom",
            "respect-precedence",
            "--search",
            search,
        ]);
        assert_eq!(pass.status.code(), Some(0));
    }
}

#[test]
fn check_empty_matching_eligibility() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_matching(dir.path(), "empty.json", "{\"assignment\":{}}\n");
    let out = reserve(&[
        "check",
        "--instance",
        path_str(&corpus("example4.json")),
        "--matching",
        path_str(&empty),
        "--axiom",
        "eligibility",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "[{\"axiom\":\"eligibility\",\"pass\":true}]\n");
}

#[test]
fn check_rejects_over_capacity_matching() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write_matching(dir.path(), "mu.json", "{\"assignment\":{\"0\":0,\"1\":0}}\n");
    let out =
        reserve(&["check", "--instance", path_str(&corpus("example1.json")), "--matching", path_str(&mu)]);
    assert_eq!(out.status.code(), Some(2));
}

/// Solving then checking passes the four fundamental axioms for MMA and
/// every applicable axiom for SCU on each corpus instance.
#[test]
fn solve_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["example1.json", "example3.json", "example4.json", "da_cardinality_witness.json"] {
        let inst = corpus(name);
        for (rule, axioms) in
            [("mma", "eligibility,respect-priorities,non-wasteful,max-cardinality"), ("scu", "all")]
        {
            let mu = dir.path().join(format!("{rule}-{name}"));
            let solved =
                reserve(&["solve", "--instance", path_str(&inst), "--rule", rule, "--out", path_str(&mu)]);
            assert_eq!(solved.status.code(), Some(0));
            let checked = reserve(&[
                "check",
                "--instance",
                path_str(&inst),
                "--matching",
                path_str(&mu),
                "--axiom",
                axioms,
            ]);
            assert_eq!(checked.status.code(), Some(0), "{rule} on {name}: {}", stdout(&checked));
        }
    }
}

#[test]
fn scu_trace_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let dot = dir.path().join("net.dot");
    let out = reserve(&[
        "solve",
        "--instance",
        path_str(&corpus("example4.json")),
        "--rule",
        "scu",
        "--impl",
        "flow",
        "--trace",
        path_str(&trace),
        "--dot",
        path_str(&dot),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> =
        std::fs::read_to_string(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    let last = lines.last().unwrap();
    let solved: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(last["mu"], solved["matching"]["assignment"]);
    assert_eq!(lines.iter().filter(|l| l["accepted"] == true).count(), 3);
    let dot = std::fs::read_to_string(&dot).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("C*"));
}

#[test]
fn mma_trace_starts_with_initial() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let out = reserve(&[
        "solve",
        "--instance",
        path_str(&corpus("example1.json")),
        "--rule",
        "mma",
        "--seed",
        "4",
        "--trace",
        path_str(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&trace).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first.get("initial").is_some());
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--agents", "3", "--categories", "2", "--seed", "7"];
    let a = reserve(&args);
    let b = reserve(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a), golden("gen_3x2_seed7.json"));
}

#[test]
fn gen_density_extremes() {
    let count_eligible = |density: &str| -> i64 {
        let out =
            reserve(&["gen", "--agents", "6", "--categories", "3", "--density", density, "--seed", "1"]);
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        v["categories"].as_array().unwrap().iter().map(|c| c["eligible_cutoff"].as_i64().unwrap()).sum()
    };
    assert_eq!(count_eligible("0"), 0);
    assert_eq!(count_eligible("1"), 18);
}

#[test]
fn gen_sequential_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let out = reserve(&[
        "gen",
        "--agents",
        "8",
        "--categories",
        "4",
        "--capacity",
        "1..2",
        "--preferential",
        "0.5",
        "--tiers",
        "random:2",
        "--correlated",
        "--seed",
        "3",
        "--out",
        path_str(&path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["preferential"].as_array().unwrap().len(), 2);
    let solved = reserve(&["solve", "--instance", path_str(&path), "--rule", "scu"]);
    assert_eq!(solved.status.code(), Some(0));
}

#[test]
fn verify_scu_small_sweep_passes() {
    let out = reserve(&["verify", "--rule", "scu", "--sweep", "small", "--count", "30", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["unexpected"], false);
    assert!(v["properties"].as_array().unwrap().iter().all(|p| p["counterexamples"] == 0));
}

#[test]
fn verify_rev_corpus_finds_baseline_dependence() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    let out = reserve(&["verify", "--rule", "rev", "--sweep", "corpus", "--corpus", path_str(&dir)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let independence = v["properties"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["property"] == "independence-of-baseline")
        .unwrap();
    assert_eq!(independence["expectation"], "fails");
    assert!(independence["counterexamples"].as_u64().unwrap() > 0);
}

#[test]
fn bench_zero_repetitions_is_empty() {
    let out = reserve(&["bench", "--repetitions", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["rows"], serde_json::json!([]));
}

#[test]
fn bench_single_rule_rows() {
    let out =
        reserve(&["--format", "text", "bench", "--sizes", "60", "--rules", "scu", "--repetitions", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("scu")));
    assert!(!text.contains("rev/mma"));
}

#[test]
fn usage_and_validation_errors_exit_2() {
    assert_eq!(reserve(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(reserve(&["solve", "--rule", "scu"]).status.code(), Some(2));
    let missing = reserve(&["solve", "--instance", "/nonexistent.json", "--rule", "scu"]);
    assert_eq!(missing.status.code(), Some(2));
    let rev = reserve(&["solve", "--instance", path_str(&corpus("example1.json")), "--rule", "rev"]);
    assert_eq!(rev.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\"agents\":2,\"categories\":[{\"capacity\":1,\"eligible_cutoff\":3,\"id\":0,\"ranking\":[0,1]}]}",
    )
    .unwrap();
    assert_eq!(reserve(&["solve", "--instance", path_str(&bad), "--rule", "da"]).status.code(), Some(2));
}
