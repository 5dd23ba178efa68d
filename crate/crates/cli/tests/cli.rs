use std::path::Path;
use std::process::{Command, Output};

use presheaf_bisim::corpus::load_corpus;
use presheaf_bisim::equiv::{check_fair_bisim_fn, Bounds, FairMode};
use tempfile::TempDir;

fn psbisim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psbisim")).current_dir(dir).args(args).output().expect("binary runs")
}

fn extracted() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = psbisim(dir.path(), &["corpus", "--extract", "."]);
    assert!(out.status.success());
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn branching_witness_and_exit_code() {
    let dir = extracted();
    let out = psbisim(
        dir.path(),
        &[
            "check",
            "--kind",
            "branching-bisim-fn",
            "--map",
            "SYS_BRANCH.f.map",
            "SYS_BRANCH.f.source.aut",
            "SYS_BRANCH.f.target.aut",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("y1 -tau-> y3"));
}

#[test]
fn branching_quotient_of_chain() {
    let dir = extracted();
    let out = psbisim(dir.path(), &["quotient", "--kind", "branching", "CHAIN.aut", "--out", "q"]);
    assert_eq!(out.status.code(), Some(0));
    let aut = std::fs::read_to_string(dir.path().join("q.aut")).unwrap();
    assert!(aut.starts_with("des (0,1,2)"));
    let map = std::fs::read_to_string(dir.path().join("q.map")).unwrap();
    assert_eq!(map.lines().count(), 3);
    // The written quotient and map check out as a branching bisimulation function.
    let out = psbisim(dir.path(), &["check", "--kind", "branching-bisim-fn", "--map", "q.map", "CHAIN.aut", "q.aut"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn corpus_suite_passes() {
    let out = psbisim(Path::new("."), &["corpus"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("0 failed"));
}

#[test]
fn machine_output_matches_library_and_is_stable() {
    let dir = extracted();
    let args = [
        "check",
        "--kind",
        "fair-bisim-fn",
        "--map",
        "SYS_FAIR_REM.f.map",
        "SYS_FAIR_REM.f.source.aut",
        "SYS_FAIR_REM.f.target.aut",
        "--format",
        "machine",
    ];
    let a = psbisim(dir.path(), &args);
    let b = psbisim(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(1));
    let c = load_corpus().unwrap();
    let m = c.morphism("SYS_FAIR_REM", "f");
    let (x, y) = m.fair.as_ref().unwrap();
    let lib = check_fair_bisim_fn(&m.map, x, y, FairMode::Exact, &Bounds::default()).unwrap();
    assert_eq!(stdout(&a).trim_end(), lib.to_json());
    let keys: Vec<&str> = ["\"check\"", "\"holds\"", "\"witness\"", "\"certified_bounds\""].to_vec();
    let at: Vec<usize> = keys.iter().map(|k| stdout(&a).find(k).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn forall_fair_relations() {
    let dir = extracted();
    for (rel, code) in [("SYS_UNION.R1.rel", 0), ("SYS_UNION.R2.rel", 0)] {
        let out =
            psbisim(dir.path(), &["check", "--kind", "forall-fair-bisim", "--close", "--rel", rel, "SYS_UNION.aut"]);
        assert_eq!(out.status.code(), Some(code), "{rel}: {}", stdout(&out));
    }
    // Without closing, the listed generators are not reflexive.
    let out =
        psbisim(dir.path(), &["check", "--kind", "forall-fair-bisim", "--rel", "SYS_UNION.R1.rel", "SYS_UNION.aut"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("not reflexive"));
    let out = psbisim(
        dir.path(),
        &["quotient", "--kind", "forall-fair", "--close", "--rel", "SYS_UNION.R2.rel", "SYS_UNION.aut"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("2 states"));
}

#[test]
fn error_exit_codes() {
    let dir = extracted();
    std::fs::write(dir.path().join("bad.aut"), "des (0,1,2)\n(0,\"a\")\n").unwrap();
    let out = psbisim(dir.path(), &["check", "--kind", "simulation", "--map", "CHAIN.collapse.map", "bad.aut"]);
    assert_eq!(out.status.code(), Some(2));
    // The collapse map is not a simulation, which the strong check requires.
    let out = psbisim(dir.path(), &["check", "--kind", "strong-bisim-fn", "--map", "CHAIN.collapse.map", "CHAIN.aut"]);
    assert_eq!(out.status.code(), Some(3));
    let out = psbisim(dir.path(), &["check", "--kind", "strong-bisim-fn", "CHAIN.aut"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--map"));
}

#[test]
fn dumps_branching_semantics() {
    let dir = extracted();
    let out = psbisim(dir.path(), &["dump", "--mode", "branching", "--depth", "1", "SYS_BRANCH.aut"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("stage a: {x1 -a-> x2, y1 -a-> y2}"));
    assert!(text.contains("y1 -tau-> y3 |-> y1"));
}
