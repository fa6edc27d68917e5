//! End-to-end runs of the `costsr` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn costsr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_costsr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const PAPER_FORMULA: &str = "p bcnf 5 3 3\nb 3 4 5 0\n1 2 3 0\n-1 4 0\n-2 5 0\n";

#[test]
fn generated_bphp_proof_checks() {
    let dir = TempDir::new().unwrap();
    let gen = costsr(dir.path(), &["gen", "bphp", "3", "2", "--proof"]);
    assert_eq!(code(&gen), 0);
    let out = costsr(
        dir.path(),
        &["check", "bphp-3-2.bcnf", "bphp-3-2.proof", "--stats"],
    );
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("verdict accepted"));
    assert!(text.contains("bound eq 1"));
    assert!(text.contains("max_flip"));
}

#[test]
fn every_generated_proof_checks() {
    let dir = TempDir::new().unwrap();
    for (args, base) in [
        (&["gen", "bphp", "4", "2", "--proof"][..], "bphp-4-2"),
        (&["gen", "hamming", "2", "--proof"][..], "hamming-2"),
        (
            &["gen", "minunsat-lift", "2", "--proof"][..],
            "minunsat-lift-2",
        ),
    ] {
        assert_eq!(code(&costsr(dir.path(), args)), 0, "{args:?}");
        let out = costsr(
            dir.path(),
            &["check", &format!("{base}.bcnf"), &format!("{base}.proof")],
        );
        assert_eq!(code(&out), 0, "{base}: {}", stdout(&out));
    }
}

#[test]
fn json_verdict() {
    let dir = TempDir::new().unwrap();
    costsr(
        dir.path(),
        &["gen", "bphp", "2", "1", "--proof", "--out", "small"],
    );
    let out = costsr(
        dir.path(),
        &["check", "small.bcnf", "small.proof", "--json"],
    );
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["verdict"], "accepted");
    assert_eq!(v["bound"], "eq");
    assert_eq!(v["k"], 1);
}

#[test]
fn bad_witness_is_rejected() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("f.bcnf"), PAPER_FORMULA).unwrap();
    // Setting b1 alone raises the cost.
    fs::write(dir.path().join("f.proof"), "3 0 w 3 t 0 #lpr\n").unwrap();
    let out = costsr(dir.path(), &["check", "f.bcnf", "f.proof"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("verdict rejected"));
    assert!(text.contains("failure step 1"));
}

#[test]
fn missing_file_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&costsr(dir.path(), &["check", "nope.bcnf", "nope.proof"])),
        2
    );
}

#[test]
fn invalid_generator_parameters() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&costsr(dir.path(), &["gen", "bphp", "2", "2"])), 2);
    assert!(!dir.path().join("bphp-2-2.bcnf").exists());
}

#[test]
fn hamming_instance_only() {
    let dir = TempDir::new().unwrap();
    let out = costsr(dir.path(), &["gen", "hamming", "1"]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("hamming-1.bcnf").exists());
    assert!(!dir.path().join("hamming-1.proof").exists());
}

#[test]
fn cost_with_optima() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("f.bcnf"), PAPER_FORMULA).unwrap();
    let out = costsr(dir.path(), &["cost", "f.bcnf", "--enumerate-optima"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("cost 1\n"));
    assert!(text.contains("optima 3\n"));
    assert!(text.contains("min_hamming 3\n"));
}

#[test]
fn cost_of_unsatisfiable_instance() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("u.bcnf"),
        "p bcnf 2 3 1\nb 2 0\n1 0\n-1 2 0\n-1 -2 0\n",
    )
    .unwrap();
    let out = costsr(dir.path(), &["cost", "u.bcnf"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("unsatisfiable"));
}

#[test]
fn cost_beyond_limits() {
    let dir = TempDir::new().unwrap();
    costsr(dir.path(), &["gen", "bphp", "5", "3"]);
    assert_eq!(
        code(&costsr(
            dir.path(),
            &["cost", "bphp-5-3.bcnf", "--budget", "0"]
        )),
        3
    );
    assert_eq!(
        code(&costsr(
            dir.path(),
            &["cost", "bphp-5-3.bcnf", "--budget", "10"]
        )),
        3
    );
}

#[test]
fn blockify_wcnf() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("a.wcnf"),
        "c two soft\nh 1 2 0\n1 -1 0\n1 -2 0\n",
    )
    .unwrap();
    let out = costsr(dir.path(), &["blockify", "a.wcnf", "--out", "a.bcnf"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("blocking 2"));
    let map = fs::read_to_string(dir.path().join("a.bcnf.map")).unwrap();
    assert!(map.contains("original_nvars 2 new_nvars 4"));
    let cost = costsr(dir.path(), &["cost", "a.bcnf"]);
    assert!(stdout(&cost).contains("cost 1\n"));

    fs::write(dir.path().join("w.wcnf"), "h 1 2 0\n3 -1 0\n").unwrap();
    assert_eq!(
        code(&costsr(
            dir.path(),
            &["blockify", "w.wcnf", "--out", "w.bcnf"]
        )),
        2
    );

    fs::write(dir.path().join("h.wcnf"), "h 1 2 0\nh -1 0\n").unwrap();
    assert_eq!(
        code(&costsr(
            dir.path(),
            &["blockify", "h.wcnf", "--out", "h.bcnf"]
        )),
        0
    );
    let text = fs::read_to_string(dir.path().join("h.bcnf")).unwrap();
    assert!(text.starts_with("p bcnf 2 2 0\n"), "{text}");
}

#[test]
fn export_scripts() {
    let dir = TempDir::new().unwrap();
    costsr(dir.path(), &["gen", "bphp", "3", "2", "--proof"]);
    let out = costsr(
        dir.path(),
        &["export", "bphp-3-2.bcnf", "bphp-3-2.proof", "--out", "p.pb"],
    );
    assert_eq!(code(&out), 0);
    let script = fs::read_to_string(dir.path().join("p.pb")).unwrap();
    assert!(script.starts_with("pseudo-Boolean proof version 2.0\n"));
    assert!(script.contains("conclusion BOUNDS 1 1"));

    fs::write(dir.path().join("f.bcnf"), PAPER_FORMULA).unwrap();
    fs::write(dir.path().join("bad.proof"), "3 0 w 3 t 0 #lpr\n").unwrap();
    assert_eq!(
        code(&costsr(
            dir.path(),
            &["export", "f.bcnf", "bad.proof", "--out", "bad.pb"]
        )),
        1
    );
    assert!(!dir.path().join("bad.pb").exists());

    fs::write(dir.path().join("trivial.proof"), "conclude geq 0\n").unwrap();
    let out = costsr(
        dir.path(),
        &["export", "f.bcnf", "trivial.proof", "--out", "t.pb"],
    );
    assert_eq!(code(&out), 0);
    let script = fs::read_to_string(dir.path().join("t.pb")).unwrap();
    assert!(script.contains("conclusion BOUNDS 0 INF"));
    assert!(!script.contains("red "));
}

#[test]
fn msr_check() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("x.bcnf"),
        "p bcnf 2 2 1\nb 2 0\n1 2 0\n-1 2 0\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("x.msr"),
        "h 2 0\ns+ 2 0\nsm 2 0\nconclude bot 1\n",
    )
    .unwrap();
    let out = costsr(dir.path(), &["check", "x.bcnf", "x.msr", "--msr"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("bound geq 1"));
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        costsr(dir.path(), &["gen", "hamming", "2", "--proof"]);
        costsr(
            dir.path(),
            &[
                "export",
                "hamming-2.bcnf",
                "hamming-2.proof",
                "--out",
                "h.pb",
            ],
        );
    }
    for name in ["hamming-2.bcnf", "hamming-2.proof", "h.pb"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let check = |d: &TempDir| {
        stdout(&costsr(
            d.path(),
            &["check", "hamming-2.bcnf", "hamming-2.proof", "--stats"],
        ))
    };
    assert_eq!(check(&a), check(&b));
}
