use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_keplerdrag");

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn keplerdrag(args: &[&str], jobs_env: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("KEPLERDRAG_JOBS");
    if let Some(j) = jobs_env {
        cmd.env("KEPLERDRAG_JOBS", j);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SHORT_ORBITS: &str = r#"{
    "delta": 1.0,
    "mode": "simulate",
    "initial_conditions": { "explicit": [
        { "chart": { "chart": "C1", "c": [1.2, 0.1, 0.2] } },
        { "physical": { "r": 1.0, "rdot": 0.3, "l": 0.3 } }
    ] },
    "terminal": { "l_cut": 0.05 },
    "h_infinity": { "measure": "normalized" },
    "output": { "sample_stride": 50 }
}"#;

#[test]
fn verify_passes_and_fault_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ok");
    let o = keplerdrag(
        &[
            "verify",
            "--config",
            scenario("verify.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep: Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));

    let bad = tmp.path().join("bad");
    let o = keplerdrag(
        &[
            "verify",
            "--config",
            scenario("verify_fault.json").to_str().unwrap(),
            "--out",
            bad.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL h1_dot"));
    assert!(bad.join("verify.json").exists());
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let o = keplerdrag(
        &[
            "simulate",
            "--config",
            scenario("empty.json").to_str().unwrap(),
            "--out",
            out,
        ],
        None,
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no initial conditions"));

    let unknown = write(
        tmp.path(),
        "unknown.json",
        r#"{ "delta": 1.0, "mode": "verify", "tolerance": 1e-9 }"#,
    );
    assert_eq!(
        code(&keplerdrag(
            &[
                "verify",
                "--config",
                unknown.to_str().unwrap(),
                "--out",
                out
            ],
            None
        )),
        1
    );

    let missing = tmp.path().join("missing.json");
    assert_eq!(
        code(&keplerdrag(
            &["verify", "--config", missing.to_str().unwrap()],
            None
        )),
        1
    );

    let wrong_mode = scenario("verify.json");
    assert_eq!(
        code(&keplerdrag(
            &[
                "portrait",
                "--config",
                wrong_mode.to_str().unwrap(),
                "--out",
                out
            ],
            None
        )),
        1
    );

    let neg = keplerdrag(
        &[
            "verify",
            "--config",
            wrong_mode.to_str().unwrap(),
            "--delta",
            "-1",
            "--out",
            out,
        ],
        None,
    );
    assert_eq!(code(&neg), 1);

    assert_eq!(
        code(&keplerdrag(
            &[
                "verify",
                "--config",
                wrong_mode.to_str().unwrap(),
                "--out",
                out
            ],
            Some("0")
        )),
        1
    );
    assert_eq!(code(&keplerdrag(&["frobnicate"], None)), 1);
}

#[test]
fn failed_orbit_exits_2_with_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SHORT_ORBITS.replace(
        r#""terminal""#,
        r#""tolerances": { "max_steps": 20 }, "terminal""#,
    );
    let path = write(tmp.path(), "starved.json", &cfg);
    let out = tmp.path().join("out");
    let o = keplerdrag(
        &[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 2);
    let s: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["failed"], 2);
    assert!(s["orbits"][0]["error"]
        .as_str()
        .unwrap()
        .contains("step budget"));
}

#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "orbits.json", SHORT_ORBITS);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = keplerdrag(
        &[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out",
            a.to_str().unwrap(),
            "--jobs",
            "1",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // the environment wins over the flag
    let o = keplerdrag(
        &[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
            "--jobs",
            "1",
        ],
        Some("2"),
    );
    assert_eq!(code(&o), 0);

    for f in ["summary.json", "orbit_0000.csv", "orbit_0001.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }

    let s: Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["orbit_count"], 2);
    assert_eq!(s["completed"], 2);
    for orbit in s["orbits"].as_array().unwrap() {
        for key in [
            "initial_condition",
            "h_infinity",
            "events",
            "itinerary",
            "accepted_steps",
            "final_point",
            "trajectory_file",
        ] {
            assert!(!orbit[key].is_null(), "{key} missing");
        }
        let h = orbit["h_infinity"]["value"].as_f64().unwrap();
        assert!(h > 0.0 && h < 0.5);
    }

    let csv = fs::read_to_string(a.join("orbit_0000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tau,t_phys,chart,c1,c2,c3,r,rdot,l,theta,E,H_or_H2,ecc_norm"
    );
    assert!(lines.count() >= 2);
}

#[test]
fn portrait_series_manifold_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let o = keplerdrag(
        &[
            "portrait",
            "--config",
            scenario("portrait.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    assert!(out.join("portrait.json").exists());
    let again = tmp.path().join("p2");
    keplerdrag(
        &[
            "portrait",
            "--config",
            scenario("portrait.json").to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ],
        None,
    );
    for e in fs::read_dir(&out).unwrap() {
        let name = e.unwrap().file_name();
        assert_eq!(
            fs::read(out.join(&name)).unwrap(),
            fs::read(again.join(&name)).unwrap()
        );
    }

    let out = tmp.path().join("s");
    let o = keplerdrag(
        &[
            "series",
            "--config",
            scenario("series.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let coeffs = fs::read_to_string(out.join("series_coefficients.csv")).unwrap();
    assert_eq!(coeffs.lines().count(), 41);
    assert_eq!(
        fs::read_to_string(out.join("manifold_points.csv"))
            .unwrap()
            .lines()
            .count(),
        5
    );

    let cfg = write(
        tmp.path(),
        "center.json",
        r#"{ "delta": 2.0, "mode": "manifold", "manifold": { "center": { "nu_range": [0.05, 0.3] } } }"#,
    );
    let out = tmp.path().join("m");
    let o = keplerdrag(
        &[
            "manifold",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let m: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifold.json")).unwrap()).unwrap();
    assert!((m["center"]["c"].as_f64().unwrap() + 0.5).abs() < 1e-3);

    let nothing = write(
        tmp.path(),
        "nothing.json",
        r#"{ "delta": 1.0, "mode": "manifold" }"#,
    );
    assert_eq!(
        code(&keplerdrag(
            &[
                "manifold",
                "--config",
                nothing.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ],
            None
        )),
        1
    );
}
