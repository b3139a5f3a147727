use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use bomatch::format::{ratio_rows, read_instance, sweep_rows, violation_rows, AuditDoc, RunDoc};
use bomatch_core::instance::ProblemClass;

fn bomatch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bomatch"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn example_three_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&bomatch(dir.path(), &["gen", "--family", "example_three", "--W", "5"]));
    assert_eq!(text.lines().count(), 3);
    for name in ["I1.json", "I2.json", "I3.json"] {
        let inst = read_instance(&dir.path().join(name)).unwrap();
        assert_eq!(inst.class, ProblemClass::General);
        assert!(text.contains(name));
    }
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.json", "b.json"] {
        let args = [
            "gen", "--family", "planted", "--mu", "0.01", "--seed", "7", "--out", out,
        ];
        let line = stdout(&bomatch(dir.path(), &args));
        assert!(line.contains("mu="), "{line}");
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_parameters_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bomatch(dir.path(), &["gen", "--family", "upper_triangular", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let out = bomatch(dir.path(), &["gen", "--family", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn class_mismatch_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&bomatch(
        dir.path(),
        &["gen", "--family", "upper_triangular", "--n", "3", "--out", "u.json"],
    ));
    let out = bomatch(dir.path(), &["run", "u.json", "single_valued"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bomatch(dir.path(), &["run", "u.json", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_query_run() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&bomatch(
        dir.path(),
        &["gen", "--family", "upper_triangular", "--n", "1", "--out", "u.json"],
    ));
    let doc = RunDoc::from_json(&stdout(&bomatch(dir.path(), &["run", "u.json", "ranking"]))).unwrap();
    assert_eq!(doc.matching, vec![(0, 0, 1)]);
    assert_eq!(doc.w, 1);
    assert!(doc.trace.is_none());

    let traced = RunDoc::from_json(&stdout(&bomatch(dir.path(), &["run", "u.json", "ranking", "--trace"]))).unwrap();
    assert_eq!(traced.trace.unwrap().len(), 1);
}

#[test]
fn general_engine_matches_ranking_on_unit_instances() {
    let dir = tempfile::tempdir().unwrap();
    let gen = [
        "gen", "--family", "random", "--class", "obm", "--n", "15", "--m", "6", "--seed", "9", "--out", "o.json",
    ];
    stdout(&bomatch(dir.path(), &gen));
    let obm = read_instance(&dir.path().join("o.json")).unwrap();
    std::fs::write(
        dir.path().join("g.json"),
        bomatch::format::instance_to_json(&obm.embed_general()),
    )
    .unwrap();
    for seed in ["1", "2", "3"] {
        let r = RunDoc::from_json(&stdout(&bomatch(
            dir.path(),
            &["run", "o.json", "ranking", "--seed", seed],
        )))
        .unwrap();
        let g = RunDoc::from_json(&stdout(&bomatch(
            dir.path(),
            &["run", "g.json", "general", "--seed", seed],
        )))
        .unwrap();
        assert_eq!(r.matching, g.matching);
    }
}

#[test]
fn injected_ranks_reproduce_the_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let gen = [
        "gen",
        "--family",
        "example_no_surpass",
        "--alpha",
        "2",
        "--k",
        "5",
        "--out",
        "e.json",
    ];
    stdout(&bomatch(dir.path(), &gen));
    std::fs::write(dir.path().join("w.json"), "[0.5, 0.5]\n").unwrap();

    let json = stdout(&bomatch(dir.path(), &["audit", "e.json", "--ranks", "w.json"]));
    let doc = AuditDoc::from_json(&json).unwrap();
    assert_eq!(doc.seed, None);
    assert!(!doc.violations.is_empty());

    let csv = stdout(&bomatch(
        dir.path(),
        &["audit", "e.json", "--ranks", "w.json", "--format", "csv"],
    ));
    assert!(csv.starts_with("# audit"));
    assert_eq!(violation_rows(&csv).unwrap().len(), doc.violations.len());
}

#[test]
fn audit_of_obm_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let gen = [
        "gen", "--family", "random", "--n", "12", "--m", "5", "--seed", "4", "--out", "o.json",
    ];
    stdout(&bomatch(dir.path(), &gen));
    let doc = AuditDoc::from_json(&stdout(&bomatch(
        dir.path(),
        &["audit", "o.json", "--trials", "40", "--seed", "5"],
    )))
    .unwrap();
    assert_eq!(doc.seed, Some(5));
    assert!(doc.violations.is_empty());
    assert!(doc.multiset_failures.is_empty());
    assert!(doc.dominance_failures.is_empty());
}

#[test]
fn ratio_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&bomatch(
        dir.path(),
        &["gen", "--family", "upper_triangular", "--n", "20", "--out", "u.json"],
    ));
    let one = stdout(&bomatch(
        dir.path(),
        &["ratio", "u.json", "ranking", "--trials", "400", "--seed", "3"],
    ));
    let four = stdout(&bomatch(
        dir.path(),
        &[
            "ratio", "u.json", "ranking", "--trials", "400", "--seed", "3", "--jobs", "4",
        ],
    ));
    assert_eq!(one, four);
    assert!(one.starts_with("# ratio seed=3\n"));
    let rows = ratio_rows(&one).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].trials, 400);
    assert!(rows[0].ratio > 0.6 && rows[0].ratio < 0.75, "{}", rows[0].ratio);
}

#[test]
fn sweep_writes_a_parseable_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&bomatch(
        dir.path(),
        &["sweep", "--mu", "0.2,0.05", "--trials", "20", "--seed", "2"],
    ));
    let rows = sweep_rows(&text).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.wf_within_mu));
}

#[test]
fn smoke_verification_passes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = bomatch(dir.path(), &["verify", "--scale", "smoke"]);
    let text = stdout(&out);
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 10);
    assert!(text.ends_with("10 of 10 criteria passed\n"), "{text}");
}
