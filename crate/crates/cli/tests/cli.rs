use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use levirotor::config::DEFAULT_CONFIG;
use levirotor::report::read_csv;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levirotor"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn levitate_reports_height_and_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["levitate"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("levitate.json"));
    for key in ["h_V_m", "omega_V_Hz", "omega_L_Hz"] {
        assert!(v[key].is_f64(), "missing {key}");
    }
    let h = v["h_V_m"].as_f64().unwrap();
    assert!(h > 0.75e-3 && h < 0.91e-3, "{h}");
    assert_eq!(v["header"]["command"], "levitate");
}

#[test]
fn scalar_output_as_csv_and_table_as_json() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["skin-depth", "--format", "csv"], dir.path())
        .status
        .success());
    let text = fs::read_to_string(dir.path().join("skin-depth.csv")).unwrap();
    assert!(text.starts_with("# levirotor"));
    let ratio = read_csv(&text)
        .unwrap()
        .column("ratio_perp_over_parallel")
        .unwrap()[0];
    assert!((ratio - 25.50).abs() < 0.3);

    assert!(run(&["spindown", "--format", "json"], dir.path())
        .status
        .success());
    let v = json(&dir.path().join("spindown.json"));
    assert_eq!(v["columns"][0], "t_s");
    assert!(v["rows"].as_array().unwrap().len() > 1000);
}

#[test]
fn empty_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let o = run(&["levitate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn schema_violation_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        DEFAULT_CONFIG.replace("inner_radius_mm = 4.05", "inner_radius_mm = 10"),
    )
    .unwrap();
    let o = run(&["levitate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("inner_radius"));
    assert!(!dir.path().join("levitate.json").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(
        run(&["levitate", "--format", "xml"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["analyze"], dir.path()).status.code(), Some(1));
}

#[test]
fn solver_failures_exit_with_three() {
    // a marker turning half a revolution per sample cannot be unwrapped
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("t_s,x_m,y_m\n");
    for i in 0..200 {
        let a = std::f64::consts::PI * i as f64;
        text.push_str(&format!(
            "{},{},{}\n",
            i as f64 * 0.5,
            4e-3 * a.cos(),
            4e-3 * a.sin()
        ));
    }
    let trace = dir.path().join("trace.csv");
    fs::write(&trace, text).unwrap();
    let o = run(&["analyze", "--input", trace.to_str().unwrap()], dir.path());
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    assert!(run(&["spindown", "--seed", "11"], a.path())
        .status
        .success());
    let o = Command::new(env!("CARGO_BIN_EXE_levirotor"))
        .args(["spindown", "--seed", "11", "--out"])
        .arg(b.path())
        .env("LEVIROTOR_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(run(&["spindown", "--seed", "12"], c.path())
        .status
        .success());
    let read = |d: &Path| fs::read(d.join("spindown.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
    let digest = |d: &Path| json(&d.join("run-report.json"))["digest"].clone();
    assert_eq!(digest(a.path()), digest(b.path()));
    assert_ne!(digest(a.path()), digest(c.path()));
}

#[test]
fn analyze_recovers_simulated_rate() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["spindown"], dir.path()).status.success());
    let trace = dir.path().join("spindown.csv");
    assert!(
        run(&["analyze", "--input", trace.to_str().unwrap()], dir.path())
            .status
            .success()
    );
    let g = json(&dir.path().join("analyze.json"))["gamma_Hz"]
        .as_f64()
        .unwrap();
    assert!((g / 1e-3 - 1.0).abs() < 0.02, "{g}");
}

#[test]
fn pipeline_gives_free_molecular_line_over_eddy_plateau() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(&["eddy-sweep"], d).status.success());
    assert!(run(&["gas-curve"], d).status.success());
    let gas = d.join("gas-curve.csv");
    let eddy = d.join("eddy-fit.json");
    let o = run(
        &[
            "compose",
            "--gas",
            gas.to_str().unwrap(),
            "--eddy",
            eddy.to_str().unwrap(),
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let table = read_csv(&fs::read_to_string(d.join("compose.csv")).unwrap()).unwrap();
    let p = table.column("pressure_Pa").unwrap();
    let total = table.column("gamma_total_Hz").unwrap();
    let gas_rate = table.column("gamma_gas_Hz").unwrap();
    assert!(total.windows(2).all(|w| w[1] >= w[0]));
    // plateau at the lowest pressure
    assert!((total[0] / 5.5e-5 - 1.0).abs() < 1e-3);
    // the gas part is linear in P well inside the free-molecular range
    let fm: Vec<(f64, f64)> = p
        .iter()
        .zip(&gas_rate)
        .filter(|(p, _)| **p <= 1e-2)
        .map(|(p, g)| (*p, *g))
        .collect();
    let k = fm[0].1 / fm[0].0;
    assert!(fm.iter().all(|(p, g)| (g / (k * p) - 1.0).abs() < 1e-12));

    let s = json(&d.join("compose-summary.json"));
    let cross = s["crossover_pressure_Pa"].as_f64().unwrap();
    assert!((cross / 3.4e-2 - 1.0).abs() < 0.1, "{cross}");
    assert_eq!(s["config_digest_matches"], true);
    let swept = s["residual_offset_swept_m"].as_f64().unwrap();
    assert!(swept > 5e-6 && swept < 50e-6, "{swept}");
}

#[test]
fn remaining_commands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (cmd, file) in [
        ("field", "field.csv"),
        ("verify-zero-current", "zero-current.json"),
        ("mesh-convergence", "mesh-convergence.csv"),
        ("tilt-collapse", "tilt-fit.json"),
    ] {
        let o = run(&[cmd], d);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let text = fs::read_to_string(d.join(file)).unwrap();
        assert!(
            text.starts_with("# levirotor") || text.starts_with("{\n  \"header\""),
            "{file}"
        );
    }
    let fit = json(&d.join("tilt-fit.json"));
    assert!((fit["center_x_deg"].as_f64().unwrap() + 0.544).abs() < 0.02);
    assert_eq!(json(&d.join("zero-current.json"))["passed"], true);
}
