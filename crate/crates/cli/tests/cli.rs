use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use genfn_cli::{apply_override, describe, run, CliError, Experiment, ExperimentConfig, Kind, KINDS};
use serde_json::{json, Value};

fn genfn(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genfn"));
    cmd.args(args).env_remove("GENFN_LAB_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn list_has_thirteen_kinds() {
    let out = genfn(&["list"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 13);
    for k in KINDS {
        assert!(text.lines().any(|l| l.starts_with(k.name())), "{k}");
    }
}

#[test]
fn describe_prints_defaults() {
    let out = genfn(&["describe", "prey-predator"], &[]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = &v["params"];
    assert_eq!(p["alpha1"], json!(2.0));
    assert_eq!(p["alpha2"], json!(2.0));
    assert_eq!(p["psi1"]["tag"], json!("bump"));
    assert_eq!(p["psi2"]["tag"], json!("bump"));
    assert_eq!(p["eps_list"], json!([0.2, 0.1, 0.05, 0.025]));
    assert!(v["reproduces"].as_str().is_some_and(|s| !s.is_empty()));
}

#[test]
fn describe_unknown_kind_fails() {
    let out = genfn(&["describe", "no-such-kind"], &[]);
    assert!(!out.status.success());
    let rec: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], json!("unknown_experiment"));
    assert!(matches!(describe("no-such-kind"), Err(CliError::UnknownExperiment(_))));
}

#[test]
fn every_kind_describes_and_defaults_round_trip() {
    for k in KINDS {
        let d = k.describe();
        let cfg = ExperimentConfig::from_value(json!({"kind": k.name(), "params": d["params"].clone()})).unwrap();
        assert_eq!(cfg.experiment, Experiment::defaults(k), "{k}");
        assert_eq!(k.name().parse::<Kind>().unwrap(), k);
    }
}

#[test]
fn unknown_fields_are_rejected_with_their_path() {
    let err = ExperimentConfig::from_value(json!({"kind": "moments", "params": {"orderz": [1]}})).unwrap_err();
    match err {
        CliError::Config { path, message } => {
            assert_eq!(path, "params.orderz");
            assert!(message.contains("unknown field"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let err = ExperimentConfig::from_value(json!({"kind": "moments", "colour": 1})).unwrap_err();
    assert!(matches!(err, CliError::Config { .. }), "{err:?}");
    let err = ExperimentConfig::from_value(json!({
        "kind": "prey-predator",
        "params": {"psi1": {"tag": "bump", "width": 2}}
    }))
    .unwrap_err();
    match err {
        CliError::Config { path, .. } => assert_eq!(path, "params.psi1.width"),
        other => panic!("{other:?}"),
    }
    let err = ExperimentConfig::from_value(json!({"kind": "moments", "params": {"orders": ["x"]}})).unwrap_err();
    match err {
        CliError::Config { path, .. } => assert_eq!(path, "params.orders[0]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn overrides_follow_dot_paths() {
    let mut v = json!({"kind": "prey-predator", "params": {"psi1": {"tag": "bump"}}});
    apply_override(&mut v, "alpha1=3").unwrap();
    apply_override(&mut v, "params.psi1.tag=parabolic").unwrap();
    apply_override(&mut v, "eps_list=[0.1,0.05,0.025]").unwrap();
    apply_override(&mut v, "eps_list.0=0.2").unwrap();
    apply_override(&mut v, "deterministic=false").unwrap();
    assert_eq!(v["params"]["alpha1"], json!(3));
    assert_eq!(v["params"]["psi1"]["tag"], json!("parabolic"));
    assert_eq!(v["params"]["eps_list"], json!([0.2, 0.05, 0.025]));
    assert_eq!(v["deterministic"], json!(false));
    assert!(apply_override(&mut v, "eps_list.7=1").is_err());
    assert!(apply_override(&mut v, "alpha1").is_err());
    assert!(apply_override(&mut v, "alpha1.x=1").is_err());
}

#[test]
fn moments_run_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        &json!({"kind": "moments", "params": {"orders": [0, 1, 2]}}),
    );
    let out_dir = dir.path().join("out");
    let out = genfn(&["run", &cfg, "--out", out_dir.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&out_dir.join("results.csv"));
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("profile,n,value,abs_error"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    for r in &rows {
        let n: f64 = r[1].parse().unwrap();
        let v: f64 = r[2].parse().unwrap();
        let e: f64 = r[3].parse().unwrap();
        assert!((v - 1.0 / (n + 1.0)).abs() < 1e-12 && e < 1e-12, "{r:?}");
        // 17 significant digits.
        assert_eq!(r[2].split('e').next().unwrap().len(), 18, "{}", r[2]);
    }
    let plot = read(&out_dir.join("plot.csv"));
    assert!(plot.starts_with("n,tanh,erf,smoothstep,skewed,overshoot\n"));
    let leftovers: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn manifest_echoes_defaults_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_value(json!({"kind": "godunov-scalar", "params": {"cells": 64, "eoc_cells": []}}))
        .unwrap();
    let first = run(&cfg, Some(&dir.path().join("a"))).unwrap();
    let manifest_text = read(&first.out_dir.join("manifest.json"));
    let manifest: Value = serde_json::from_str(&manifest_text).unwrap();
    let params = &manifest["config"]["params"];
    assert_eq!(params["cells"], json!(64));
    assert_eq!(params["cfl"], json!(0.8));
    assert_eq!(params["u_l"], json!(1.0));
    assert_eq!(first.files.last().map(String::as_str), Some("manifest.json"));

    // Keys are sorted at every level.
    fn sorted(v: &Value) -> bool {
        match v {
            Value::Object(m) => m.keys().zip(m.keys().skip(1)).all(|(a, b)| a < b) && m.values().all(sorted),
            Value::Array(a) => a.iter().all(sorted),
            _ => true,
        }
    }
    assert!(sorted(&manifest));

    let replay = ExperimentConfig::from_json(&manifest_text, &[]).unwrap();
    assert_eq!(replay.experiment, cfg.experiment);
    let second = run(&replay, Some(&dir.path().join("b"))).unwrap();
    for f in ["results.csv", "plot.csv"] {
        assert_eq!(read(&first.out_dir.join(f)), read(&second.out_dir.join(f)), "{f}");
    }
    // Without --out the replay lands where the first run did.
    assert_eq!(genfn_cli::resolve_out_dir(&replay, None), first.out_dir);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.json",
        &json!({"kind": "association", "params": {"grid": {"eps0": 0.5, "k_max": 16, "tail": 8, "per_octave": 1}}}),
    );
    let mut texts = Vec::new();
    for d in ["x", "y"] {
        let o = dir.path().join(d);
        let out = genfn(&["run", &cfg, "--out", o.to_str().unwrap()], &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(
            ["results.csv", "plot.csv", "verdict.json"]
                .iter()
                .map(|f| read(&o.join(f)))
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(texts[0], texts[1]);
    let verdict: Value = serde_json::from_str(&texts[0][2]).unwrap();
    assert_eq!(verdict["aggregate"], json!("associated_not_equal"));
}

#[test]
fn env_var_sets_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", &json!({"kind": "eps-table"}));
    let root = dir.path().join("root");
    let out = genfn(&["run", &cfg], &[("GENFN_LAB_OUT", &root)]);
    assert!(out.status.success());
    assert!(root.join("eps-table").join("manifest.json").exists());
}

#[test]
fn riemann_system_emits_a_unique_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.json",
        &json!({"kind": "riemann-system", "params": {"ledger": "==~", "diagnostics": false}}),
    );
    let o = dir.path().join("o");
    let out = genfn(&["run", &cfg, "--out", o.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&read(&o.join("verdict.json"))).unwrap();
    assert_eq!(v["kind"], json!("unique"));
    assert!((v["c"].as_f64().unwrap() + 1.25).abs() < 1e-6);
    assert!((v["a"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn failures_leave_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    // A CFL number above the scheme's limit fails inside the experiment.
    let cfg = write_config(
        dir.path(),
        "g.json",
        &json!({"kind": "godunov-scalar", "params": {"cfl": 2.0}}),
    );
    let o = dir.path().join("o");
    let out = genfn(&["run", &cfg, "--out", o.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let rec: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], json!("experiment_error"));
    let file: Value = serde_json::from_str(&read(&o.join("error.json"))).unwrap();
    assert_eq!(file, rec);

    let bad = write_config(
        dir.path(),
        "b.json",
        &json!({"kind": "moments", "params": {"order": [1]}}),
    );
    let out = genfn(&["run", &bad, "--out", o.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], json!("config_error"));
    assert_eq!(rec["path"], json!("params.order"));

    let out = genfn(
        &["run", &cfg, "--out", o.to_str().unwrap(), "--override", "cfl=0.5"],
        &[],
    );
    assert!(out.status.success());
    assert!(!o.join("error.json").exists());
}
