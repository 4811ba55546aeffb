//! End-to-end runs of the binary.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_operadix"));
    c.env_remove("OPERADIX_CONFIG");
    c
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn file(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn parse_nested_graft_prints_golden_dump() {
    let o = bin().arg("parse").arg(golden("nested_graft.op")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), std::fs::read_to_string(golden("nested_graft.dump")).unwrap());
}

#[test]
fn parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(&dir, "bad.op", "f:4; g:3; f o_2 g o_4 g2");
    let o = bin().arg("parse").arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("undeclared atom `g2`"), "{}", stderr(&o));

    let p = file(&dir, "range.op", "f:4; g:3; h:3; (f o_2 g) o_9 h");
    let o = bin().arg("parse").arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[position]"), "{}", stderr(&o));
}

#[test]
fn guard_failures_name_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(&dir, "t.trace", "new f 2 1\nnew g 1 1\ncompose f 1 g\ncompose f 1 g\n");
    let o = bin().arg("compose").arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[rg24]") && stderr(&o).contains("step 4"), "{}", stderr(&o));
}

#[test]
fn compose_reads_stdin() {
    let mut child = bin()
        .args(["compose", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"new f 4 1\nnew g 2 1\ncompose f 2 g\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), std::fs::read_to_string(golden("single_graft.dump")).unwrap());
}

#[test]
fn check_reports_violations_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(golden("nested_graft.dump")).unwrap();
    let o = bin().arg("check").arg(golden("nested_graft.dump")).output().unwrap();
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "ok\n"));

    let bad = file(&dir, "bad.dump", &good.replace("in: g->{2,3}", "in: g->{2,3,4}"));
    let o = bin().arg("check").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().any(|l| l == "SP3"), "{}", stdout(&o));
}

#[test]
fn check_decorated_gluing() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(golden("single_graft.dump")).unwrap();
    let ok = format!("{base}[inx]\ninx: f->{{1:a,4:c,5:d}}\ninx: g->{{2:p,3:q}}\n[outx]\noutx: f->a\n");
    let o = bin().arg("check").arg(file(&dir, "ok.dump", &ok)).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let bad = ok.replace("2:p,3:q", "2:p");
    let o = bin().arg("check").arg(file(&dir, "bad.dump", &bad)).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("gluing at `g`"));
}

#[test]
fn axioms_sweep() {
    let o = bin().args(["axioms", "--carrier", "2", "--max-arity", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "sequential: OK (28512 cases), parallel: OK (7744 cases)\nidentity: OK (1082 cases)\n"
    );
    let o = bin().args(["axioms", "--carrier", "4", "--max-arity", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.trace");
    let run = || {
        bin()
            .args(["simulate", "--seed", "1", "--steps", "10", "--trace"])
            .arg(&trace)
            .output()
            .unwrap()
    };
    let a = run();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), std::fs::read_to_string(golden("sim_seed1_steps10.report")).unwrap());
    assert_eq!(
        std::fs::read_to_string(&trace).unwrap(),
        std::fs::read_to_string(golden("sim_seed1_steps10.trace")).unwrap()
    );
    assert_eq!(stdout(&run()), stdout(&a));

    let o = bin().args(["simulate", "--steps", "200", "--oracle-every", "5", "--json"]).output().unwrap();
    let js: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(js["violation_count"], 0);
    assert_eq!(js["rng"], "ChaCha8");
    assert_eq!(js["oracle_checks"], 40);
}

#[test]
fn eval_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(&dir, "e.op", "f:2; g:1; f o_1 g");
    let o = bin()
        .arg("eval")
        .arg(&p)
        .args(["--fn", "f=2:0110", "--fn", "g=1:10"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "2:1001\n0 0 -> 1\n0 1 -> 0\n1 0 -> 0\n1 1 -> 1\n");
    let o = bin().arg("eval").arg(&p).args(["--fn", "f=2:0110"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_env_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = file(&dir, "small.cfg", "# tiny machine\nmax_args=2\nmax_oprd=2\n");
    let prog = file(&dir, "three.op", "a:1; b:1; c:1; a o_1 b o_1 c");
    let o = bin().arg("--config").arg(&cfg).arg("parse").arg(&prog).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[g1]"), "{}", stderr(&o));

    let o = bin().env("OPERADIX_CONFIG", &cfg).arg("parse").arg(&prog).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin()
        .env("OPERADIX_CONFIG", &cfg)
        .args(["--max-oprd", "3"])
        .arg("parse")
        .arg(&prog)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = bin().args(["--max-fol", "10", "parse"]).arg(golden("nested_graft.op")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["export", "--json"]).arg(golden("nested_graft.dump")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let js = file(&dir, "s.json", &stdout(&o));
    let back = bin().arg("export").arg(&js).output().unwrap();
    assert_eq!(stdout(&back), std::fs::read_to_string(golden("nested_graft.dump")).unwrap());
}
