use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const IF_TRS: &str = "# boolean conditionals
symbols: if:3 not:1 true:0 false:0
vars: x y
rules:
if(true,x,y) -> x
if(false,x,y) -> y
not(true) -> false
not(false) -> true
not(not(x)) -> x
";

const NESTED_ADD: &str = "symbols: add:2 s:1 0:0
vars: x y z
rules:
add(add(x,s(y)),s(z)) -> 0
";

fn setrw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setrw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn column(report: &str, name: &str) -> String {
    let mut lines = report.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let row: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    row[i].to_string()
}

#[test]
fn rewrite_with_every_engine() {
    let dir = tempfile::tempdir().unwrap();
    let trs = write(dir.path(), "if.trs", IF_TRS);
    let trs = trs.to_str().unwrap();
    for engine in ["stack", "reference", "reference-linear", "oracle"] {
        for relation in ["standard", "outermost"] {
            let o = setrw(&["rewrite", trs, "if(not(not(true)),false,true)", "--engine", engine, "--relation", relation]);
            assert!(o.status.success(), "{engine}: {}", String::from_utf8_lossy(&o.stderr));
            let out = stdout(&o);
            assert_eq!(column(&out, "normal_form"), "false", "{engine}");
            assert_eq!(column(&out, "rewrite_steps"), "2", "{engine}");
        }
    }
}

#[test]
fn rewrite_json_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trs = write(dir.path(), "if.trs", IF_TRS);
    let term = write(dir.path(), "t.term", "if(not(not(true)),false,true)\n");
    let o = setrw(&[
        "rewrite",
        trs.to_str().unwrap(),
        &format!("@{}", term.display()),
        "--json",
        "--trace",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["normal_form"], "false");
    assert_eq!(v["symbol_inspections"], 5);
    assert!(v["construct_ms"].is_number() && v["rewrite_ms"].is_number());
    let trace = String::from_utf8_lossy(&o.stderr);
    assert_eq!(trace.lines().filter(|l| l.starts_with("inspect\tε\tif")).count(), 1);
}

#[test]
fn domain_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let trs = write(dir.path(), "if.trs", IF_TRS);
    let trs = trs.to_str().unwrap();
    let o = setrw(&["rewrite", trs, "if(not(true),false"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("term:1:"));
    let o = setrw(&["rewrite", trs, "if(x,true,false)"]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write(dir.path(), "bad.trs", "symbols: f:1\nvars: x\nrules:\nf(x) -> g(x)\n");
    let o = setrw(&["rewrite", bad.to_str().unwrap(), "f(f(x))"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.trs:4:"));
    let looping = write(dir.path(), "loop.trs", "symbols: f:1 a:0\nvars: x\nrules:\nf(x) -> f(f(x))\n");
    let o = setrw(&["rewrite", looping.to_str().unwrap(), "f(a)", "--max-steps", "50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step limit"));
    let nonlinear = write(dir.path(), "nl.trs", "symbols: f:2 a:0\nvars: x\nrules:\nf(x,x) -> a\n");
    let o = setrw(&["rewrite", nonlinear.to_str().unwrap(), "f(a,a)", "--engine", "reference-linear"]);
    assert_eq!(o.status.code(), Some(1));
    let o = setrw(&["rewrite", nonlinear.to_str().unwrap(), "f(a,a)", "--engine", "reference"]);
    assert!(o.status.success());
    assert_eq!(column(&stdout(&o), "normal_form"), "a");
}

#[test]
fn dot_is_deterministic_and_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let trs = write(dir.path(), "add.trs", NESTED_ADD);
    let trs = trs.to_str().unwrap();
    let a = setrw(&["dot", trs]);
    let b = setrw(&["dot", trs]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("digraph"));
    let o = setrw(&["dot", trs, "--stats"]);
    let out = stdout(&o);
    assert_eq!(column(&out, "states"), "4");
    let cells: usize = column(&out, "transition_cells").parse().unwrap();
    let symbols: usize = column(&out, "symbols").parse().unwrap();
    assert_eq!(cells, symbols * 4);
}

#[test]
fn bench_checks_expected_normal_forms() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "good.trs", IF_TRS);
    write(d, "good.term", "if(not(not(true)),false,true)\n");
    write(d, "good.expected", "false\n");
    write(d, "plain.trs", IF_TRS);
    write(d, "plain.term", "not(true)\n");
    let o = setrw(&["bench", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("good\tstack\tsolved\t2\t"));
    assert!(out.contains("plain\tstack\tunchecked\t1\t"));
    assert!(out.ends_with("Total failures: 0\n"));

    write(d, "wrong.trs", IF_TRS);
    write(d, "wrong.term", "not(true)\n");
    write(d, "wrong.expected", "true\n");
    let o = setrw(&["bench", d.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert_eq!(last, r#"{"total_failures":1}"#);
}

#[test]
fn bench_marks_timeouts_as_dnf() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "loop.trs", "symbols: f:1 a:0\nvars: x\nrules:\nf(x) -> f(x)\n");
    write(d, "loop.term", "f(a)\n");
    let o = setrw(&["bench", d.to_str().unwrap(), "--timeout", "0.2"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("loop\tstack\tDNF"), "{out}");
    assert!(out.contains("Total failures: 1"));
}

#[test]
fn empty_bench_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = setrw(&["bench", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn bundled_benchmarks_pass() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks");
    let o = setrw(&["bench", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for name in ["fib20", "sieve100", "mergesort32", "bubblesort50"] {
        assert!(out.contains(&format!("{name}\tstack\tsolved")), "{out}");
    }
}

#[test]
fn selftest_is_reproducible_and_catches_mutation() {
    let a = setrw(&["selftest", "--seed", "5", "--iterations", "40"]);
    let b = setrw(&["selftest", "--seed", "5", "--iterations", "40"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let m = setrw(&["selftest", "--seed", "5", "--iterations", "40", "--skip-prune"]);
    assert_eq!(m.status.code(), Some(2));
    assert!(stdout(&m).contains("FAIL seed"));
}
