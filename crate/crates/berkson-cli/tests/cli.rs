//! End-to-end tests driving the `berkson` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_berkson")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn tables_reproduces_reference_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table_1d_n50.csv");
    let output = run(&[
        "tables",
        "--config",
        config_path("table_1d_n50.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "density,sigma_eps2,n,h_y,h_x,mise_hy,mise_hx,mise_zero,ratio_zero,ratio_hx,display"
    );
    // 4 densities × 5 variances
    assert_eq!(text.lines().count(), 21);
    let normal_s2 = text.lines().find(|l| l.starts_with("Normal,2")).unwrap();
    assert!(normal_s2.ends_with("\"(1.02,1.18)\""), "line: {normal_s2}");
    let trimodal_last = text.lines().find(|l| l.starts_with("Trimodal,1.25")).unwrap();
    assert!(trimodal_last.ends_with("\"(1.77,1)\"") || trimodal_last.ends_with("\"(1.77,1.00)\""));
}

#[test]
fn tables_output_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for (threads, out) in [("1", &out1), ("4", &out2)] {
        let output = run(&[
            "tables",
            "--threads",
            threads,
            "--config",
            config_path("table_1d_n50.json").to_str().unwrap(),
            "--sigma-eps2",
            "0.5,0.25",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn bandwidth_prints_spot_values() {
    let output = run(&[
        "bandwidth", "--density", "normal", "--sigma-eps2", "2", "--n", "50", "--target", "both",
    ]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let grab = |target: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(&format!("{target},")))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((grab("y") - 0.26).abs() < 0.005);
    assert!((grab("x") - 0.52).abs() < 0.005);
}

#[test]
fn estimate_curve_integrates_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1\n");
    // deterministic spread-out sample
    for i in 0..60 {
        csv.push_str(&format!("{}\n", -2.5 + 0.085 * i as f64));
    }
    let sample = write(dir.path(), "sample.csv", &csv);
    let out = dir.path().join("curve.csv");
    let output = run(&[
        "estimate",
        "--sample",
        sample.to_str().unwrap(),
        "--sigma-eps2",
        "1",
        "--rule",
        "hy-rot",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    // trapezoid is enough for a 1e-3 sanity check on the emitted grid
    let integral: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
}

#[test]
fn sample_csv_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad_value = write(dir.path(), "bad.csv", "x1,x2\n1.0,2.0\n1.0,abc\n");
    let output = run(&[
        "estimate", "--sample", bad_value.to_str().unwrap(), "--sigma-eps2", "1",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("line 3"), "stderr: {err}");

    let ragged = write(dir.path(), "ragged.csv", "x1,x2\n1.0\n");
    let output = run(&["estimate", "--sample", ragged.to_str().unwrap(), "--sigma-eps2", "1"]);
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("line 2"), "stderr: {err}");

    let empty = write(dir.path(), "empty.csv", "x1\n");
    let output = run(&["estimate", "--sample", empty.to_str().unwrap(), "--sigma-eps2", "1"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8(output.stderr).unwrap().contains("no data rows"));
}

#[test]
fn no2_pipeline_writes_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("wk,wb\n");
    for i in 0..80 {
        let z = -1.5 + 0.038 * i as f64;
        csv.push_str(&format!("{},{}\n", z.exp(), (0.5 * z).exp()));
    }
    let sample = write(dir.path(), "no2.csv", &csv);
    let stem = dir.path().join("no2");
    let output = run(&[
        "no2",
        "--sample",
        sample.to_str().unwrap(),
        "--sigma-eps2",
        "0.06",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for suffix in ["zero", "silverman", "rot"] {
        let path = dir.path().join(format!("no2_{suffix}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().count() > 500, "{suffix} too short");
    }
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("h_silverman"), "stderr: {err}");
}

#[test]
fn no2_rejects_nonpositive_rows_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sample = write(dir.path(), "no2.csv", "wk,wb\n1.0,1.0\n-3.0,1.0\n");
    let output = run(&[
        "no2",
        "--sample",
        sample.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("row 2"), "stderr: {err}");
}

#[test]
fn bands_uses_config_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bands.csv");
    let output = run(&[
        "bands",
        "--config",
        config_path("bands_normal.json").to_str().unwrap(),
        "--replicates",
        "20",
        "--rule",
        "zero",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("y,value,lower,upper,truth\n"));
    assert_eq!(text.lines().count(), 513);
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let output = run(&["tables", "--no-such-flag"]);
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.to_lowercase().contains("usage"), "stderr: {err}");
}

#[test]
fn unknown_density_exits_one() {
    let output = run(&["bandwidth", "--density", "cauchy", "--sigma-eps2", "1", "--n", "50"]);
    assert_eq!(output.status.code(), Some(1));
}
