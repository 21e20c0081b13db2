use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_phasefront");

fn run(cmd: &str, out: &Path, sets: &[&str]) -> Output {
    let mut c = Command::new(BIN);
    c.arg(cmd).arg("--out").arg(out);
    for s in sets {
        c.arg("--set").arg(s);
    }
    c.output().expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn schema_validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(phasefront::report::REPORT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn dir(t: &tempfile::TempDir, name: &str) -> PathBuf {
    t.path().join(name)
}

const SMALL: &[&str] = &["grid.half_width=10", "grid.h=0.05"];

#[test]
fn solve_front_writes_profile_and_converged_report() {
    let t = tempfile::tempdir().unwrap();
    let o = dir(&t, "a");
    let r = run("solve-front", &o, &[]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(o.join("profile.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,m");
    assert_eq!(lines.len() - 1, 1000);
    let rep = report(&o);
    assert!(rep["outputs"]["residual"].as_f64().unwrap() < 1e-10);
    assert!(rep["timings"].is_null());
    for f in ["config.toml", "profile.csv", "report.json", "plot.py"] {
        assert!(o.join(f).exists(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    for cmd in ["solve-front", "check-convexity", "solve-binary"] {
        let (a, b) = (dir(&t, &format!("{cmd}-1")), dir(&t, &format!("{cmd}-2")));
        let sets: &[&str] = if cmd == "check-convexity" {
            &["seed=11", "convexity.functional=\"free_energy\"", "convexity.to={shape = \"random\", span = 3.0}"]
        } else {
            &["seed=11"]
        };
        assert_eq!(run(cmd, &a, sets).status.code(), Some(0));
        assert_eq!(run(cmd, &b, sets).status.code(), Some(0));
        for f in ["config.toml", "report.json", "plot.py"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{cmd} {f}");
        }
        let csv = if cmd == "check-convexity" { "path.csv" } else { "profile.csv" };
        assert_eq!(std::fs::read(a.join(csv)).unwrap(), std::fs::read(b.join(csv)).unwrap());
    }
}

#[test]
fn echoed_config_reproduces_the_run() {
    let t = tempfile::tempdir().unwrap();
    let a = dir(&t, "a");
    assert_eq!(run("rearrange", &a, &["seed=5", "rearrange.modes=3"]).status.code(), Some(0));
    let b = dir(&t, "b");
    let r = Command::new(BIN).args(["rearrange", "--config"]).arg(a.join("config.toml")).arg("--out").arg(&b).output().unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
}

#[test]
fn every_command_report_matches_schema() {
    let t = tempfile::tempdir().unwrap();
    let v = schema_validator();
    let extra: &[(&str, &[&str])] = &[
        ("solve-front", &[]),
        ("solve-binary", &[]),
        ("interpolate", &[]),
        ("check-convexity", &["convexity.path=\"joint\""]),
        ("phase-diagram", &[]),
        ("surface-tension", &["surface_tension.certify_trials=5"]),
        ("solve-2d", &["grid.half_width=5", "grid.h=0.1", "multidim.y_cells=8"]),
        ("rearrange", &[]),
    ];
    for (cmd, sets) in extra {
        let o = dir(&t, cmd);
        let mut all: Vec<&str> = SMALL.to_vec();
        all.extend_from_slice(sets);
        let r = run(cmd, &o, &all);
        assert_eq!(r.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&r.stderr));
        let rep = report(&o);
        assert_eq!(rep["command"], *cmd);
        if let Err(e) = v.validate(&rep) {
            panic!("{cmd}: {e}");
        }
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = schema_validator();
    let t = tempfile::tempdir().unwrap();
    let o = dir(&t, "a");
    assert_eq!(run("phase-diagram", &o, &[]).status.code(), Some(0));
    let good = report(&o);
    assert!(v.is_valid(&good));
    let mut bad = good.clone();
    bad["outputs"].as_object_mut().unwrap().remove("beta_c");
    assert!(!v.is_valid(&bad));
    let mut bad = good.clone();
    bad["command"] = Value::from("solve-3d");
    assert!(!v.is_valid(&bad));
}

#[test]
fn timings_only_on_request() {
    let t = tempfile::tempdir().unwrap();
    let o = dir(&t, "a");
    let r = Command::new(BIN).args(["phase-diagram", "--timings", "--out"]).arg(&o).output().unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert!(report(&o)["timings"]["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn subcritical_binary_exits_2() {
    let t = tempfile::tempdir().unwrap();
    let r = run("solve-binary", &dir(&t, "a"), &["model.beta=1.0"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("subcritical beta"));
}

#[test]
fn validation_failures_exit_2() {
    let t = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[&["grid.spacing=0.1"], &["grid.h=-0.1"], &["model.components=3"], &["solver.damping=1.5"], &["kernel.shape=\"hexagon\""]];
    for sets in cases {
        let r = run("solve-front", &dir(&t, "a"), sets);
        assert_eq!(r.status.code(), Some(2), "{sets:?}");
        assert!(!r.stderr.is_empty());
    }
    let r = Command::new(BIN).args(["solve-front", "--config", "/nonexistent/phasefront.toml", "--out"]).arg(dir(&t, "b")).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    let r = Command::new(BIN).arg("no-such-command").output().unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let t = tempfile::tempdir().unwrap();
    let r = run("solve-front", &dir(&t, "a"), &["solver.max_iter=3"]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("no convergence"));
    // the binary front's tails do not fit in a window this small
    let r = run("solve-binary", &dir(&t, "b"), &["grid.half_width=5"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn convexity_verdicts() {
    let t = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &[&str])] = &[
        (&[], &["affine"]),
        (&["convexity.path=\"linear\""], &["nonconvex"]),
        (&["convexity.path=\"joint\""], &["convex", "strictly_convex"]),
        (&["convexity.functional=\"interaction\""], &["strictly_convex"]),
    ];
    for (i, (sets, expect)) in cases.iter().enumerate() {
        let o = dir(&t, &i.to_string());
        assert_eq!(run("check-convexity", &o, sets).status.code(), Some(0));
        let v = report(&o)["outputs"]["verdict"].as_str().unwrap().to_string();
        assert!(expect.contains(&v.as_str()), "{sets:?}: {v}");
        let csv = std::fs::read_to_string(o.join("path.csv")).unwrap();
        assert_eq!(csv.lines().next(), Some("lambda,value"));
        assert_eq!(csv.lines().count(), 22);
    }
}

#[test]
fn phase_diagram_branch_opens_at_critical_beta() {
    let t = tempfile::tempdir().unwrap();
    let o = dir(&t, "a");
    assert_eq!(run("phase-diagram", &o, &["phase_diagram.steps=41"]).status.code(), Some(0));
    let beta_c = report(&o)["outputs"]["beta_c"].as_f64().unwrap();
    assert!((beta_c - std::f64::consts::E).abs() < 1e-9);
    let mut rdr = csv::Reader::from_path(o.join("phase_diagram.csv")).unwrap();
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    for r in &rows {
        let split = r[2] - r[1];
        if r[0] < beta_c {
            assert_eq!(split, 0.0, "{r:?}");
        } else if r[0] > beta_c * (1.0 + 1e-9) {
            assert!(split > 0.0, "{r:?}");
        }
    }
}

#[test]
fn surface_tension_bounded_and_refines() {
    let t = tempfile::tempdir().unwrap();
    let mut sig = Vec::new();
    for (i, h) in ["0.04", "0.02"].iter().enumerate() {
        let o = dir(&t, &i.to_string());
        let set = format!("grid.h={h}");
        assert_eq!(run("surface-tension", &o, &[&set]).status.code(), Some(0));
        let rep = report(&o);
        assert_eq!(rep["inputs"]["grid"]["h"].as_f64().unwrap().to_string(), *h);
        sig.push(rep["outputs"]["surface_tension"].as_f64().unwrap());
    }
    assert!(sig.iter().all(|&s| s > 0.0 && s <= 1.0));
    assert!((sig[0] - sig[1]).abs() / sig[1] < 1e-3);
}

#[test]
fn config_file_and_overrides_combine() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[grid]\nh = 0.05\n[model]\nkappa = 0.25\n").unwrap();
    let o = dir(&t, "a");
    let r = Command::new(BIN).args(["solve-front", "--config"]).arg(&cfg).args(["--set", "grid.half_width=6", "--out"]).arg(&o).output().unwrap();
    assert_eq!(r.status.code(), Some(0));
    let rep = report(&o);
    assert_eq!(rep["seed"], 3);
    assert_eq!(rep["inputs"]["model"]["kappa"], 0.25);
    assert_eq!(rep["inputs"]["grid"]["half_width"], 6.0);
    let echo = std::fs::read_to_string(o.join("config.toml")).unwrap();
    assert!(echo.contains("kappa = 0.25"));
}
