use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// A scratch directory holding a copy of the scenario corpus.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn ringdyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringdyn"))
        .args(args)
        .current_dir(dir)
        .env_remove("RINGDYN_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by a signal")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

/// Columns of a CSV file with a header row, by name.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {}", path.display()));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn constructed_orbit_is_classified_regular() {
    let ws = workspace();
    let out = ringdyn(ws.path(), &["construct", "--config", "construct_sinusoid.json", "--out", "out/construct"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&ws.path().join("out/construct/report.json"));
    assert!(report["max_residual"].as_f64().unwrap() <= 1e-8);
    let out = ringdyn(
        ws.path(),
        &["analyze", "--config", "analyze_construct.json", "--out", "out/analyze", "--expect", "regular"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ws.path().join("out/analyze/gap_series.csv").exists());
}

#[test]
fn coincident_bodies_are_a_collision() {
    let ws = workspace();
    let out = ringdyn(ws.path(), &["simulate", "--config", "simulate_collision.json", "--out", "out"]);
    assert_eq!(code(&out), 3);
    let err = stderr_json(&out);
    assert_eq!(err["error"], "collision");
    assert_eq!(err["exit_code"], 3);
}

#[test]
fn sphere_kernel_report_is_a_success() {
    let ws = workspace();
    let out = ringdyn(ws.path(), &["check-law", "--config", "check_sphere_kernel.json", "--out", "out"]);
    assert_eq!(code(&out), 0);
    let report = read_json(&ws.path().join("out/report.json"));
    assert_eq!(report["kernel"]["status"], "not decreasing");
    // without --out the report goes to stdout
    let out = ringdyn(ws.path(), &["check-law", "--config", "check_sphere_kernel.json"]);
    assert_eq!(code(&out), 0);
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, report);
}

#[test]
fn failed_expectation_exits_four() {
    let ws = workspace();
    write(
        ws.path(),
        "scatter.json",
        r#"{"space": "flat", "t_end": 1, "sample_dt": 0.1, "bodies": [
            {"position": [0, 0], "velocity": [0, 0.1], "mass": 0.1},
            {"position": [2, 0], "velocity": [0, -0.1], "mass": 0.1},
            {"position": [0.5, 3], "velocity": [0.1, 0], "mass": 0.1}]}"#,
    );
    write(ws.path(), "analyze.json", r#"{"trajectory": "sim/trajectory.csv"}"#);
    assert_eq!(code(&ringdyn(ws.path(), &["simulate", "--config", "scatter.json", "--out", "sim"])), 0);
    let out = ringdyn(ws.path(), &["analyze", "--config", "analyze.json", "--out", "an", "--expect", "regular"]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_json(&out)["error"], "expectation");
    // the report is still written, and records why
    let report = read_json(&ws.path().join("an/report.json"));
    assert_eq!(report["ring"], false);
}

#[test]
fn misuse_of_the_command_line_exits_two() {
    let ws = workspace();
    assert_eq!(code(&ringdyn(ws.path(), &["simulate", "--config", "simulate_sphere.json"])), 2);
    assert_eq!(code(&ringdyn(ws.path(), &["launch", "--config", "simulate_sphere.json"])), 2);
    let out = ringdyn(ws.path(), &["analyze", "--config", "analyze_construct.json", "--out", "x", "--expect", "round"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_config_file_is_an_io_failure() {
    let ws = workspace();
    let out = ringdyn(ws.path(), &["construct", "--config", "nowhere.json", "--out", "out"]);
    assert_eq!(code(&out), 3);
    assert_eq!(stderr_json(&out)["error"], "io");
}

/// Applies one `change` to the value at the JSON `pointer`.
fn mutate(doc: &Value, pointer: &str, change: Change) -> Value {
    let mut doc = doc.clone();
    let (parent, key) = pointer.rsplit_once('/').unwrap();
    let target = doc.pointer_mut(parent).unwrap();
    match change {
        Change::Set(v) => match target {
            Value::Object(map) => {
                map.insert(key.to_string(), v);
            }
            Value::Array(items) => items[key.parse::<usize>().unwrap()] = v,
            _ => panic!("{pointer} has no parent container"),
        },
        Change::Remove => {
            target.as_object_mut().unwrap().remove(key);
        }
        Change::Rename(to) => {
            let map = target.as_object_mut().unwrap();
            let v = map.remove(key).unwrap();
            map.insert(to.to_string(), v);
        }
    }
    doc
}

enum Change {
    Set(Value),
    Remove,
    Rename(&'static str),
}

#[test]
fn mutated_configs_are_rejected_with_a_field_path() {
    use serde_json::json;
    use Change::*;
    let cases: Vec<(&str, &str, &str, Change, &str)> = vec![
        ("construct", "construct_sinusoid.json", "/n", Set(json!("five")), "n"),
        ("construct", "construct_sinusoid.json", "/a", Remove, "a"),
        ("construct", "construct_sinusoid.json", "/span", Set(json!([0.0])), "span"),
        ("construct", "construct_sinusoid.json", "/sample_dt", Rename("sample_step"), "sample_step"),
        ("construct", "construct_sinusoid.json", "/law/kind", Set(json!("coulomb")), "law.kind"),
        ("construct", "construct_central.json", "/central_argument", Set(json!("cubed")), "central_argument"),
        ("construct", "construct_central.json", "/central_mass", Set(json!([1.0])), "central_mass"),
        ("simulate", "simulate_sphere.json", "/space", Set(json!("torus")), "space"),
        ("simulate", "simulate_sphere.json", "/t_end", Remove, "t_end"),
        ("simulate", "simulate_sphere.json", "/bodies/1/velocity", Rename("speed"), "bodies[1].speed"),
        ("simulate", "simulate_sphere.json", "/bodies/2/position/0", Set(json!("x")), "bodies[2].position[0]"),
        ("simulate", "simulate_sphere.json", "/bodies/0/mass", Remove, "bodies[0].mass"),
        ("simulate", "simulate_resimulate.json", "/tolerances/rel", Set(json!("tight")), "tolerances.rel"),
        ("simulate", "simulate_resimulate.json", "/tolerances/atol", Set(json!(1e-9)), "tolerances.atol"),
        ("analyze", "analyze_construct.json", "/window", Set(json!(-3)), "window"),
        ("analyze", "analyze_construct.json", "/trajectory", Set(json!(7)), "trajectory"),
        ("check-law", "check_quasihomogeneous.json", "/grid", Set(json!(2.5)), "grid"),
        ("check-law", "check_quasihomogeneous.json", "/s_range", Rename("range"), "range"),
        ("solve-config", "solve_mixed.json", "/masses/2", Set(json!(null)), "masses[2]"),
        ("solve-config", "solve_mixed.json", "/seed", Set(json!("random")), "seed"),
    ];
    assert_eq!(cases.len(), 20);
    let ws = workspace();
    for (i, (cmd, file, pointer, change, field)) in cases.into_iter().enumerate() {
        let base = read_json(&ws.path().join(file));
        let name = format!("mutated_{i}.json");
        write(ws.path(), &name, &mutate(&base, pointer, change).to_string());
        let out = ringdyn(ws.path(), &[cmd, "--config", &name, "--out", "out"]);
        assert_eq!(code(&out), 2, "{file} {pointer}: {}", String::from_utf8_lossy(&out.stderr));
        let err = stderr_json(&out);
        assert_eq!(err["error"], "config", "{file} {pointer}");
        assert_eq!(err["field"], field, "{file} {pointer}");
        assert!(err["message"].as_str().unwrap().starts_with(field));
    }
}

fn round_trip(ws: &Path, construct: &str, n: usize) -> Value {
    let out = ringdyn(ws, &["construct", "--config", construct, "--out", "c"]);
    assert_eq!(code(&out), 0, "{construct}: {}", String::from_utf8_lossy(&out.stderr));
    let masses = vec![r#"{"table": "c/masses.csv"}"#; n].join(", ");
    write(
        ws,
        "resim.json",
        &format!(
            r#"{{"space": "flat", "initial_trajectory": "c/trajectory.csv", "masses": [{masses}],
                "t_end": 5, "sample_dt": 0.01}}"#
        ),
    );
    let out = ringdyn(ws, &["simulate", "--config", "resim.json", "--out", "s"]);
    assert_eq!(code(&out), 0, "{construct}: {}", String::from_utf8_lossy(&out.stderr));
    // the integrator's own tolerance, not the constructor's, limits the match
    write(ws, "an.json", r#"{"trajectory": "s/trajectory.csv", "homographic_tol": 1e-6}"#);
    let out = ringdyn(ws, &["analyze", "--config", "an.json", "--out", "a"]);
    assert_eq!(code(&out), 0, "{construct}: {}", String::from_utf8_lossy(&out.stderr));
    read_json(&ws.join("a/report.json"))
}

#[test]
fn resimulated_constructions_stay_homographic_and_regular() {
    let ws = workspace();
    let times: Vec<f64> = (0..=120).map(|k| k as f64 * 0.05).collect();
    let table: String = times
        .iter()
        .map(|t| format!("{t},{}\n", 1.1 + 0.15 * (0.9 * t).cos()))
        .collect();
    write(ws.path(), "radius.csv", &format!("t,r\n{table}"));
    write(
        ws.path(),
        "constant.json",
        r#"{"n": 4, "r": {"kind": "constant", "value": 1.2}, "a": 1.5, "span": [0, 6], "sample_dt": 0.01}"#,
    );
    write(
        ws.path(),
        "table.json",
        r#"{"n": 3, "r": {"kind": "table", "path": "radius.csv"}, "a": 1.0, "span": [0, 6], "sample_dt": 0.01}"#,
    );
    for (config, n, equilibrium) in [
        ("construct_sinusoid.json", 5, false),
        ("constant.json", 4, true),
        ("table.json", 3, false),
    ] {
        let report = round_trip(ws.path(), config, n);
        assert_eq!(report["homographic"], true, "{config}: {report}");
        assert_eq!(report["regular"], true, "{config}: {report}");
        assert_eq!(report["relative_equilibrium"], equilibrium, "{config}: {report}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let ws = workspace();
    for rep in ["a", "b"] {
        for (cmd, cfg) in [
            ("construct", "construct_central.json"),
            ("simulate", "simulate_sphere.json"),
            ("solve-config", "solve_mixed.json"),
        ] {
            let out = format!("{rep}/{cmd}");
            assert_eq!(code(&ringdyn(ws.path(), &[cmd, "--config", cfg, "--out", &out, "--plotdata"])), 0);
        }
    }
    for (cmd, file) in [
        ("construct", "trajectory.csv"),
        ("construct", "masses.csv"),
        ("construct", "report.json"),
        ("construct", "plotdata.csv"),
        ("simulate", "trajectory.csv"),
        ("simulate", "diagnostics.json"),
        ("simulate", "plotdata.csv"),
        ("solve-config", "report.json"),
    ] {
        let a = fs::read(ws.path().join(format!("a/{cmd}/{file}"))).unwrap();
        let b = fs::read(ws.path().join(format!("b/{cmd}/{file}"))).unwrap();
        assert!(a == b, "{cmd}/{file} differs");
    }
}

#[test]
fn seed_variable_overrides_the_config() {
    let ws = workspace();
    write(ws.path(), "seeded.json", r#"{"masses": [1, 1, 1, 1, 1], "r": 1, "starts": 8, "seed": 9}"#);
    write(ws.path(), "unseeded.json", r#"{"masses": [1, 1, 1, 1, 1], "r": 1, "starts": 8}"#);
    let run = |cfg: &str, seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ringdyn"));
        cmd.args(["solve-config", "--config", cfg]).current_dir(ws.path());
        match seed {
            Some(s) => cmd.env("RINGDYN_SEED", s),
            None => cmd.env_remove("RINGDYN_SEED"),
        };
        cmd.output().unwrap()
    };
    let configured = run("seeded.json", None);
    let overridden = run("unseeded.json", Some("9"));
    assert_eq!(code(&configured), 0);
    assert_eq!(configured.stdout, overridden.stdout);
    let report: Value = serde_json::from_slice(&configured.stdout).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["solutions"].as_array().unwrap().len(), 1);
    assert_eq!(code(&run("seeded.json", Some("abc"))), 2);
}

#[test]
fn plotdata_columns() {
    let ws = workspace();
    write(
        ws.path(),
        "polygon.json",
        r#"{"n": 6, "r": {"kind": "constant", "value": 1.0}, "a": 1.0, "span": [0, 3], "sample_dt": 0.05}"#,
    );
    for (cfg, out) in [
        ("polygon.json", "polygon"),
        ("construct_sinusoid.json", "sinusoid"),
    ] {
        assert_eq!(code(&ringdyn(ws.path(), &["construct", "--config", cfg, "--out", out, "--plotdata"])), 0);
    }
    let mu = column(&ws.path().join("polygon/plotdata.csv"), "mu");
    assert!(mu.iter().all(|m| (m - std::f64::consts::PI / 3.0).abs() <= 1e-12));

    let plot = ws.path().join("sinusoid/plotdata.csv");
    for (t, r) in column(&plot, "t").into_iter().zip(column(&plot, "r")) {
        assert!((r - (1.0 + 0.3 * (0.7 * t).sin())).abs() <= 1e-12, "t = {t}");
    }

    assert_eq!(
        code(&ringdyn(ws.path(), &["simulate", "--config", "simulate_sphere.json", "--out", "sphere", "--plotdata"])),
        0
    );
    let drift = column(&ws.path().join("sphere/plotdata.csv"), "constraint_drift");
    assert_eq!(drift.len(), 201);
    assert!(drift.iter().all(|d| *d <= 1e-8));
}
