use std::path::PathBuf;
use std::process::{Command, Output};

use cfm_core::Net;
use tempfile::TempDir;

const PARALLEL: &str = "high h\nC := h.B\nB := l.B\nmain := C | B\n";

fn cfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn dni_all_methods_agree_on_parallel_example() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "par.cfm", PARALLEL);
    let o = cfm(&["dni", "--method", "all", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    for m in ["definitional", "structural", "compositional"] {
        assert!(out.contains(&format!("{m}: insecure")), "{out}");
    }

    let o = cfm(&["dni", "--method", "all", "--sbndc", "--format", "json", f.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sbndc"]["secure"], true);
    assert_eq!(v["structural"]["secure"], false);
    assert_eq!(v["structural"]["witnesses"][0]["high_transition"]["pre"], "C");
}

#[test]
fn secure_spec_exits_zero() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "c.cfm", "high h\nC := h.l.C + l.C\nmain := C\n");
    for method in ["def", "struct", "comp", "rooted"] {
        let o = cfm(&["dni", "--method", method, f.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{method}");
    }
    let o = cfm(&["type", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("typed\nunfold-constant C\n"), "{out}");
    assert!(out.contains("scanned-constant C"));
}

#[test]
fn untyped_spec_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "d.cfm", "high h\nD := l.h.D\nmain := D\n");
    let o = cfm(&["type", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("untyped"));
    let o = cfm(&["type", "--format", "json", f.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["typed"], false);
}

#[test]
fn net_dot_for_single_prefix() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "a.cfm", "main := a.0\n");
    let o = cfm(&["net", "--format", "dot", f.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.matches("shape=circle").count(), 1);
    assert_eq!(out.matches("shape=box").count(), 1);
}

#[test]
fn net_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "par.cfm", PARALLEL);
    let spec = cfm_core::parse_spec(PARALLEL).unwrap();
    for extra in [None, Some("--restrict")] {
        let mut args = vec!["net", "--format", "json", f.to_str().unwrap()];
        args.extend(extra);
        let o = cfm(&args);
        assert!(o.status.success());
        let net = Net::from_json(&stdout(&o), spec.high_actions()).unwrap();
        let expected = cfm_core::build_net(&spec);
        let expected = if extra.is_some() {
            cfm_core::restrict_net(&expected, spec.high_actions())
        } else {
            expected
        };
        assert_eq!(net, expected);
    }
}

#[test]
fn parse_errors_report_position() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.cfm", "main := a.0\nB := (a.0\n");
    let o = cfm(&["net", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.cfm:2:"), "{err}");

    let o = cfm(&["net", dir.path().join("missing.cfm").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn state_cap_is_an_error() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "ring.cfm", "high h\nQ := l.R + h.R\nR := l.Q\nmain := Q | Q | Q | Q\n");
    let o = cfm(&["dni", "--method", "def", "--max-states", "3", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = cfm(&["reach", "--max-states", "0", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_runs_are_deterministic() {
    for cmd in ["net", "lts", "reach", "dni", "type"] {
        let a = cfm(&[cmd, "--seed", "17", "--format", "json"]);
        let b = cfm(&[cmd, "--seed", "17", "--format", "json"]);
        assert_ne!(a.status.code(), Some(2), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    assert_eq!(cfm(&["net"]).status.code(), Some(2));
}

#[test]
fn equiv_compares_terms() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "par.cfm", PARALLEL);
    let path = f.to_str().unwrap();
    let o = cfm(&["equiv", path, "--left", "l.B", "--right", "B"]);
    assert_eq!(o.status.code(), Some(0));
    let o = cfm(&["equiv", path, "--left", "l.B | B", "--right", "B | B | B"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cfm(&["equiv", path, "--left", "tau.B", "--right", "B", "--rooted"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cfm(&["equiv", path, "--left", "tau.B", "--right", "B"]);
    assert_eq!(o.status.code(), Some(0));
    let o = cfm(&["equiv", path, "--left", "Z", "--right", "B"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cfm(&["equiv", path, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["classes"].as_array().unwrap().len(), 2);
}

#[test]
fn lts_and_reach_outputs() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "par.cfm", PARALLEL);
    let path = f.to_str().unwrap();
    let o = cfm(&["lts", path]);
    assert!(stdout(&o).starts_with("2 states"));
    let o = cfm(&["lts", "--format", "dot", path]);
    assert!(stdout(&o).starts_with("digraph"));
    let o = cfm(&["reach", path]);
    assert_eq!(stdout(&o), "2 reachable markings\nB ⊕ C\n2·B\n");
    let o = cfm(&["reach", "--format", "dot", path]);
    assert_eq!(o.status.code(), Some(2));
}
