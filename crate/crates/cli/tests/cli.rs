use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const ROTATED: &str = r#"{"p":5,"k":2,"M1":[[1,0],[0,1]],"M2":[[0,1],[-1,0]]}"#;

fn popdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popdiff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().next().expect("one report line");
    serde_json::from_str(line).expect("valid JSON")
}

fn random_fn(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["fnio", "random", "--out", &p];
    args.extend_from_slice(extra);
    let out = popdiff(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn without_wall_time(out: &Output) -> Value {
    let mut v = report(out);
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn rotated_square_is_admissible_but_not_spectral() {
    let out = popdiff(&["check", "--spec", ROTATED]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["result"]["admissible"], true);
    assert_eq!(v["result"]["spectral"], false);
}

#[test]
fn spec_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rotated-square.json");
    std::fs::write(&path, ROTATED).unwrap();
    let v = report(&popdiff(&["check", "--spec", path.to_str().unwrap()]));
    assert_eq!(v["result"]["spectral"], false);
}

#[test]
fn cex_core_values() {
    let out = popdiff(&["cex", "core"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["result"];
    assert_eq!(r["sup"], "73/3125");
    assert_eq!(r["mean"], "2/5");
    assert_eq!(r["strict"], true);
}

#[test]
fn every_report_carries_provenance() {
    let v = report(&popdiff(&["--seed", "17", "cex", "core"]));
    for key in ["version", "config", "backend", "wall_time_ms", "seed", "ok", "result"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["seed"], 17);
    assert_eq!(v["config"]["seed"], 17);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = popdiff(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn guard_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let f = random_fn(dir.path(), "a.plgf", &["--p", "5", "--n", "3", "--kind", "indicator"]);
    let out = popdiff(&[
        "--guard",
        "100",
        "popular",
        "--spec",
        r#"{"p":5,"k":1,"M1":[[1]],"M2":[[2]]}"#,
        "--fn",
        &f,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "guard_exceeded");
    assert!(out.stdout.is_empty());
}

#[test]
fn failed_assertion_exits_two() {
    // A negative epsilon asks for more than the empty set can give.
    let dir = tempfile::tempdir().unwrap();
    let f = random_fn(
        dir.path(),
        "empty.plgf",
        &["--p", "5", "--n", "2", "--kind", "indicator", "--density", "0"],
    );
    let out = popdiff(&[
        "threept",
        "search",
        "--spec",
        r#"{"kind":"vector","p":5,"n":2,"M1":[[1]],"M2":[[2]]}"#,
        "--fn",
        &f,
        "--eps=-0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["ok"], false);
}

#[test]
fn deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let f = random_fn(dir.path(), "a.plgf", &["--seed", "5", "--p", "5", "--n", "3", "--kind", "float"]);
    let args = [
        "--backend",
        "float",
        "popular",
        "--spec",
        r#"{"p":5,"k":1,"M1":[[1]],"M2":[[3]]}"#,
        "--fn",
        &f,
        "--eps",
        "0.05",
    ];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_popdiff"))
            .env("RAYON_NUM_THREADS", threads)
            .args(args)
            .output()
            .unwrap()
    };
    let a = without_wall_time(&run("1"));
    let b = without_wall_time(&run("4"));
    let c = without_wall_time(&run("4"));
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(b.to_string(), c.to_string());

    let d = without_wall_time(&popdiff(&["--seed", "9", "cex", "report", "--n", "3", "--L", "5", "--seeds", "3"]));
    let e = without_wall_time(&popdiff(&["--seed", "9", "cex", "report", "--n", "3", "--L", "5", "--seeds", "3"]));
    assert_eq!(d.to_string(), e.to_string());
}

#[test]
fn same_seed_same_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = random_fn(dir.path(), "a.plgf", &["--seed", "3", "--p", "7", "--n", "2", "--kind", "rational"]);
    let b = random_fn(dir.path(), "b.plgf", &["--seed", "3", "--p", "7", "--n", "2", "--kind", "rational"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn file_roundtrip_for_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["rational", "float", "complex", "indicator"] {
        let f = random_fn(
            dir.path(),
            &format!("{kind}.plgf"),
            &["--p", "5", "--k", "2", "--n", "2", "--kind", kind],
        );
        let out = popdiff(&["fnio", "roundtrip", "--fn", &f]);
        assert_eq!(out.status.code(), Some(0), "{kind}");
        assert_eq!(report(&out)["result"]["bytes_equal"], true);
    }
}

#[test]
fn damaged_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = random_fn(dir.path(), "a.plgf", &["--p", "5", "--n", "2"]);
    let bytes = std::fs::read(&f).unwrap();

    let short = dir.path().join("short.plgf");
    std::fs::write(&short, &bytes[..bytes.len() - 3]).unwrap();
    let out = popdiff(&["fnio", "info", "--fn", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("length"));

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    let magic = dir.path().join("magic.plgf");
    std::fs::write(&magic, bad).unwrap();
    let out = popdiff(&["fnio", "info", "--fn", magic.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn json_flag_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.jsonl");
    let out = popdiff(&["--json", out_path.to_str().unwrap(), "cex", "core"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    assert_eq!(text.lines().count(), 1);
    let v: Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["result"]["sup"], "73/3125");
}

#[test]
fn threept_commands() {
    let v = report(&popdiff(&["threept", "bohr", "--modulus", "5", "--chars", "[[1]]", "--delta", "0.3"]));
    assert_eq!(v["result"]["elements"], serde_json::json!([0, 1, 4]));
    assert_eq!(v["result"]["measure"], "3/5");

    let out = popdiff(&[
        "threept", "bohr", "--spec", r#"{"kind":"Z_N","N":7,"M1":2,"M2":3}"#, "--chars", "[[1]]",
        "--delta", "1/5", "--derived",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["derived_matches_direct"], true);

    let out = popdiff(&["threept", "lift", "--N", "40", "--set", "even"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &report(&out)["result"];
    assert_eq!(r["p"], 41);
    assert_eq!(r["audit_ok"], true);

    let dir = tempfile::tempdir().unwrap();
    let f = random_fn(dir.path(), "z.plgf", &["--p", "31", "--n", "1"]);
    let out = popdiff(&[
        "threept", "count", "--spec", r#"{"kind":"Z_N","N":31,"M1":2,"M2":3}"#, "--fn", &f,
        "--chars", "[[1],[4]]", "--delta", "1/4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["agree"], true);

    let out = popdiff(&["threept", "decompose", "--fn", &f, "--s0", "[[1]]", "--growth", "linear"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["contracts"]["all_hold"], true);
}

#[test]
fn cex_subcommands_run() {
    let out = popdiff(&["cex", "hypergraph", "--L", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["lambda"], serde_json::json!([0, 1, 3]));
    let out = popdiff(&["cex", "eight-tuple", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let out = popdiff(&["cex", "dress", "--n", "2", "--L", "5", "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = popdiff(&["cex", "assemble", "--n", "2", "--L", "5", "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analysis_subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    let f = random_fn(dir.path(), "f.plgf", &["--p", "5", "--k", "2", "--n", "1"]);
    let out = popdiff(&["count", "--spec", ROTATED, "--fn", &f, "--d", "[[1],[0]]"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["result"]["value"].is_string());
    let out = popdiff(&["gowers", "--fn", &f, "--s", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let out = popdiff(&[
        "subspaces",
        "--spec",
        r#"{"p":5,"k":2,"M1":[[1,0],[0,1]],"M2":[[2,0],[0,3]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let factor = r#"{"p":5,"n":2,"linear":[[1,0]],"symmetric":[[[1,0],[0,1]]],"skew":[]}"#;
    let out = popdiff(&["equidist", "--factor", factor, "--kind", "linear-quadratic"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
