use std::path::PathBuf;
use std::process::{Command, Output};

fn rlqdag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlqdag")).args(args).output().expect("run rlqdag")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("rlqdag-cli-{}-{}", name, std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn saturated_expansion_exits_zero() {
    let o = rlqdag(&["expand", "-q", "?s,?t <- ?s a+ ?t"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "4");
}

#[test]
fn parse_error_exits_two() {
    let o = rlqdag(&["expand", "-q", "a+/("]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn zero_budget_reports_original_plan() {
    for mode in ["rlqdag", "baseline"] {
        let o = rlqdag(&["expand", "-q", "a+/b+", "--budget-ms", "0", "--mode", mode]);
        assert_eq!(o.status.code(), Some(3), "{}", mode);
        assert_eq!(stdout(&o).trim(), "1", "{}", mode);
    }
}

#[test]
fn csv_has_header_and_one_row_per_query() {
    let o = rlqdag(&["expand", "-q", "a+", "--emit", "csv"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "query,mode,budget_ms,plans,elapsed_ms,plans_per_ms,complete");
    assert_eq!(lines.len(), 2);
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols[1], "rlqdag");
    assert_eq!(cols[2], "unlimited");
    assert_eq!(cols[3], "4");
    assert_eq!(cols[6], "true");
}

#[test]
fn modes_agree_on_saturated_counts() {
    let q = "?x <- Paris isLocatedIn+/dealsWith ?x";
    let a = rlqdag(&["expand", "-q", q, "--mode", "rlqdag"]);
    let b = rlqdag(&["expand", "-q", q, "--mode", "baseline"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn gen_writes_workspace_files_and_they_load() {
    let d = scratch("gen");
    let o = rlqdag(&["gen", "--out", d.to_str().unwrap(), "--nodes", "50", "--per-label", "20"]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["data/desk.tsv", "data/desk.stats.json", "queries/bundled.txt"] {
        assert!(d.join(f).is_file(), "{}", f);
    }
    let qfile = format!("@{}", d.join("queries/bundled.txt").display());
    let o = rlqdag(&["expand", "-q", &qfile, "--emit", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 13);
    let data = d.join("data/desk.tsv");
    let o = rlqdag(&["expand", "-q", "a1+", "--data", data.to_str().unwrap(), "--emit", "best", "--eval"]);
    assert_eq!(o.status.code(), Some(0));
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn best_plan_evaluates_like_the_query() {
    let d = scratch("eval");
    let data = d.join("g.tsv");
    std::fs::write(&data, "x\ta\ty\ny\ta\tz\nz\tb\tw\nw\tb\tx\n").unwrap();
    let data = data.to_str().unwrap();
    let q = "?s,?t <- ?s a+/b ?t";
    let orig = rlqdag(&["expand", "-q", q, "--data", data, "--eval"]);
    let best = rlqdag(&["expand", "-q", q, "--data", data, "--emit", "best", "--eval"]);
    assert_eq!(orig.status.code(), Some(0));
    assert_eq!(best.status.code(), Some(0));
    let rows = |o: &Output| {
        let mut v: Vec<String> = stdout(o).lines().skip(1).map(String::from).collect();
        v.sort();
        v
    };
    let (r, b) = (rows(&orig), rows(&best));
    assert!(!r.is_empty());
    assert_eq!(r, b);
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn dag_output_is_json() {
    let o = rlqdag(&["expand", "-q", "a+", "--emit", "dag"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], 1);
    assert!(v["classes"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn check_passes_and_detects_injected_annotation() {
    let ok = rlqdag(&["check", "-q", "a+/b+", "--dbs", "2", "--samples", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(!stdout(&ok).contains("FAIL"));
    let bad = rlqdag(&["check", "-q", "a+/b+", "--dbs", "1", "--samples", "2", "--inject-bad-annotation"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).lines().any(|l| l.starts_with("FAIL consistency")));
}

#[test]
fn check_skips_properties_of_disabled_rules() {
    let o = rlqdag(&["check", "-q", "a+", "--rules", "pf", "--dbs", "1", "--samples", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let skips = stdout(&o).lines().filter(|l| l.starts_with("SKIP")).count();
    assert!(skips >= 4, "{}", stdout(&o));
}

#[test]
fn bench_prints_both_modes() {
    let o = rlqdag(&["bench", "--from", "2", "--to", "2", "--budget-ms", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("i,query,mode"));
    assert_eq!(out.lines().count(), 3);
}
