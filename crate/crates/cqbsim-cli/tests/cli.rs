// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cqb(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqb"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CQB_SEED")
        .env_remove("CQB_WORKERS")
        .output()
        .expect("spawn cqb")
}

fn ok(args: &[&str], out: &Path) {
    let o = cqb(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn calibrate_reports_quarter_period_shift() {
    let d = tempfile::tempdir().unwrap();
    ok(&["calibrate"], d.path());
    let g = json(d.path().join("gate_set.json"));
    assert!((f(&g["t_xy"]) - 3.823e-9).abs() <= 1e-10, "{}", g["t_xy"]);
    let m = cqbsim::experiment::ResultManifest::load(d.path()).unwrap();
    m.verify(d.path()).unwrap();
    assert_eq!(m.files.len(), 4);
}

#[test]
fn noiseless_rb_is_perfect() {
    let d = tempfile::tempdir().unwrap();
    ok(&["rb", "--noiseless", "--seed", "5"], d.path());
    let fid = f(&json(d.path().join("rb_report.json"))["fit"]["fidelity"]["value"]);
    // Only the coherent error of the calibrated pulses remains.
    assert_eq!(format!("{fid:.3}"), "1.000");
    ok(&["rb", "--noiseless", "--seed", "5", "--set", "executor=depolarizing"], d.path());
    let fit = &json(d.path().join("rb_report.json"))["fit"]["fidelity"];
    assert!((1.0 - f(&fit["value"])).abs() <= 2.0 * f(&fit["stderr"]) + 1e-12, "{fit}");
}

#[test]
fn echo_outlives_ramsey() {
    let d = tempfile::tempdir().unwrap();
    let (r, e) = (d.path().join("r"), d.path().join("e"));
    ok(&["coherence", "--protocol", "ramsey", "--seed", "11"], &r);
    ok(&["coherence", "--protocol", "echo", "--seed", "11"], &e);
    let t2r = f(&json(r.join("coherence.json"))["t2"]);
    let t2e = f(&json(e.join("coherence.json"))["t2"]);
    assert!(t2e > t2r, "{t2e} vs {t2r}");
}

#[test]
fn single_cell_scan() {
    let d = tempfile::tempdir().unwrap();
    ok(
        &["scan2d", "--set", "epsilon_max_hz=0", "--set", "epsilon_points=1", "--set", "freq_points=1"],
        d.path(),
    );
    let csv = std::fs::read_to_string(d.path().join("scan2d.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    let cell: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(cell, 0.0);
}

#[test]
fn errors_are_json_with_class_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32, &str); 4] = [
        (&["rb"], 2, "config"),
        (&["scan2d", "--set", "epsilon_points=0"], 2, "config"),
        (&["init", "--spec", "/nonexistent/spec.json"], 5, "io"),
        (&["scan2d", "--shots", "10"], 2, "config"),
    ];
    for (args, code, class) in cases {
        let o = cqb(args, d.path());
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"]["class"], class);
        assert!(err["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[test]
fn env_overrides_flags() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cqb"))
        .args(["rb", "--set", "executor=depolarizing", "--out"])
        .arg(d.path())
        .env("CQB_SEED", "9")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(d.path().join("manifest.json"))["seed"], 9);
}

fn strip_clock(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_clock_s");
    v
}

#[test]
fn outputs_independent_of_worker_count() {
    let d = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["rb", "--seed", "3", "--shots", "500"],
        &["coherence", "--seed", "3", "--protocol", "echo", "--set", "points=11"],
        &["scan2d", "--set", "epsilon_points=21", "--set", "freq_points=21"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let dirs: Vec<_> = ["1", "3"]
            .iter()
            .map(|w| {
                let p = d.path().join(format!("{k}_{w}"));
                let mut a = args.to_vec();
                a.extend(["--workers", w]);
                ok(&a, &p);
                p
            })
            .collect();
        let m0 = json(dirs[0].join("manifest.json"));
        assert_eq!(strip_clock(m0.clone()), strip_clock(json(dirs[1].join("manifest.json"))));
        for file in m0["files"].as_array().unwrap() {
            let name = file["path"].as_str().unwrap();
            let a = std::fs::read(dirs[0].join(name)).unwrap();
            let b = std::fs::read(dirs[1].join(name)).unwrap();
            assert!(a == b, "{args:?}: {name} differs");
        }
    }
}

#[test]
fn compile_single_and_pair_circuits() {
    let d = tempfile::tempdir().unwrap();
    let single = d.path().join("single.txt");
    std::fs::write(&single, "X+\nY-\nZ 1.5707963267948966\nC17\n").unwrap();
    ok(&["compile", "--circuit", single.to_str().unwrap()], &d.path().join("s"));
    let r = json(d.path().join("s/compile.json"));
    assert!(f(&r["infidelity"]) < 1e-3, "{}", r["infidelity"]);
    let pair = d.path().join("pair.txt");
    std::fs::write(&pair, "A X+\nB Y+\nCZ\nB X-\n").unwrap();
    ok(&["compile", "--circuit", pair.to_str().unwrap()], &d.path().join("p"));
    let r = json(d.path().join("p/compile.json"));
    assert!(f(&r["infidelity"]) < 1e-2, "{}", r["infidelity"]);
    let csv = std::fs::read_to_string(d.path().join("p/program.csv")).unwrap();
    assert!(csv.starts_with("time_s,epsilon_a_hz,epsilon_b_hz,pair_detuning_hz,zeta_hz\n"));
}

#[test]
fn init_and_cz_reports() {
    let d = tempfile::tempdir().unwrap();
    ok(&["init"], &d.path().join("i"));
    let r = json(d.path().join("i/init.json"));
    assert!(r["initialization"]["adiabatic"].as_bool().unwrap());
    let ro = &r["readout_after_ramp"];
    assert!(f(&ro["p0"]) > 0.98);
    assert!(r["readout_at_degeneracy"]["p0"].is_null());
    ok(&["cz"], &d.path().join("c"));
    let r = json(d.path().join("c/cz.json"));
    assert!(f(&r["phase_error_rad"]).abs() < 1e-3);
    assert!((f(&r["calibration"]["duration"]) - 290e-9).abs() < 1e-12);
    assert!(f(&r["raw_infidelity"]) < 1e-2);
}
