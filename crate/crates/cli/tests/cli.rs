use std::path::Path;
use std::process::{Command, Output};

use fastadj::synthetic_chart;
use fastadj_cli::io::{encode_pgm, format_csv_column};
use serde_json::Value;

fn fastadj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastadj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn adjoint_check_passes_for_true_adjoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = fastadj(&[
        "adjoint-check", "--op", "wavelet", "--wavelet", "cdf97", "--ext", "sym", "--stages", "3", "--n", "64",
        "--out-dir", dir_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("adjoint_check.json"));
    assert_eq!(report["schema"], 1);
    assert!(report["max_discrepancy"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn adjoint_check_flags_pinv_approximation() {
    let dir = tempfile::tempdir().unwrap();
    let out = fastadj(&[
        "adjoint-check", "--op", "wavelet", "--wavelet", "cdf97", "--adjoint-mode", "pinv-approx", "--out-dir",
        dir_str(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    let report = json(&dir.path().join("adjoint_check.json"));
    assert!(report["max_discrepancy"].as_f64().unwrap() > 1e-3);
    assert_eq!(report["passed"], false);
}

#[test]
fn usage_errors_exit_one() {
    let out = fastadj(&["adjoint-check", "--wavelet", "nope"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    assert_eq!(code(&fastadj(&["deblur", "--input", "/definitely/missing.pgm"])), 1);
    assert_eq!(code(&fastadj(&["deblur"])), 1);
    assert_eq!(code(&fastadj(&["bce", "--synthetic", "5", "9"])), 1);
    assert_eq!(code(&fastadj(&["frobnicate"])), 1);
    assert_eq!(code(&fastadj(&["--help"])), 0);
}

#[test]
fn deblur_writes_outputs_deterministically() {
    let runs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &runs {
        let out = fastadj(&[
            "deblur", "--synthetic-chart", "32", "32", "--stages", "2", "--iters", "40", "--record-every", "5",
            "--seed", "3", "--out-dir", dir_str(dir.path()),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["deblurred.pgm", "observed.pgm", "trace.csv", "summary.json"] {
        let a = std::fs::read(runs[0].path().join(name)).unwrap();
        let b = std::fs::read(runs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let trace = std::fs::read_to_string(runs[0].path().join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "iteration,objective,rel_err,ssim,nnz_fraction");
    assert_eq!(lines.len(), 1 + 9);
    assert!(lines.last().unwrap().starts_with("40,"));
    let summary = json(&runs[0].path().join("summary.json"));
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["wavelet"], "haar");
    assert_eq!(summary["adjoint_mode"], "true");
    assert!(summary["output_max"].as_f64().unwrap() > summary["output_min"].as_f64().unwrap());
}

#[test]
fn deblur_adjoint_modes_give_comparable_traces() {
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, mode) in dirs.iter().zip(["true", "pinv-approx"]) {
        let out = fastadj(&[
            "deblur", "--synthetic-chart", "32", "32", "--wavelet", "cdf97", "--stages", "1", "--iters", "20",
            "--adjoint-mode", mode, "--out-dir", dir_str(dir.path()),
        ]);
        assert_eq!(code(&out), 0);
    }
    let read = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("trace.csv")).unwrap();
    let (a, b) = (read(&dirs[0]), read(&dirs[1]));
    assert_eq!(a.lines().count(), b.lines().count());
    assert_ne!(a, b);
}

#[test]
fn deblur_huge_lambda_gives_zero_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = fastadj(&[
        "deblur", "--synthetic-chart", "24", "24", "--stages", "1", "--iters", "10", "--lambda", "1e9",
        "--out-dir", dir_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["final"]["nnz_fraction"], 0.0);
    assert_eq!(summary["output_min"], 0.0);
    assert_eq!(summary["output_max"], 0.0);
}

#[test]
fn deblur_reads_pgm_input() {
    let dir = tempfile::tempdir().unwrap();
    let chart = synthetic_chart(24, 24, 2).unwrap();
    let input = dir.path().join("chart.pgm");
    std::fs::write(&input, encode_pgm(&chart, false).0).unwrap();
    let out = fastadj(&[
        "deblur", "--input", dir_str(&input), "--stages", "1", "--iters", "10", "--pgm-bits", "8",
        "--out-dir", dir_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = std::fs::read(dir.path().join("deblurred.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n24 24\n255\n"));
    assert_eq!(pgm.len(), b"P5\n24 24\n255\n".len() + 24 * 24);

    std::fs::write(&input, b"P5\n24 24\n255\n").unwrap();
    assert_eq!(code(&fastadj(&["deblur", "--input", dir_str(&input)])), 1);
}

#[test]
fn bce_synthetic_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = fastadj(&[
        "bce", "--synthetic", "12", "40", "2", "0.005", "4", "--iters", "300", "--out-dir", dir_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["h_1.csv", "h_2.csv", "hs_1.csv", "hs_2.csv", "s.csv", "trace.csv", "summary.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["monotone"], true);
    assert_eq!(summary["weights"]["lambda_h"], 0.1);
    assert_eq!(summary["misfit"].as_array().unwrap().len(), 2);
    assert!(summary["alignment_s"].as_f64().unwrap() > 0.9);
    let hs = std::fs::read_to_string(dir.path().join("hs_1.csv")).unwrap();
    assert_eq!(hs.lines().count(), 12 + 40 - 1);
}

#[test]
fn bce_noiseless_truth_starts_at_penalty_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = fastadj(&[
        "bce", "--synthetic", "8", "20", "2", "0", "9", "--init", "truth", "--lambda-h-tv", "0", "--iters", "5",
        "--out-dir", dir_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let summary = json(&dir.path().join("summary.json"));
    let data = fastadj::bce_synthesize_data(8, 20, 2, 0.2, 0.0, 9).unwrap();
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let penalty = 0.1 * l1(&data.h.concat()) + 0.01 * l1(&data.s);
    let f0 = summary["initial_objective"].as_f64().unwrap();
    assert!((f0 - penalty).abs() <= 1e-12 * penalty.max(1.0), "{f0} vs {penalty}");
}

#[test]
fn bce_large_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir_str(dir.path());
    let ok = fastadj(&[
        "bce", "--synthetic", "844", "1767", "2", "0.005", "1", "--k-est", "844", "--n-est", "1767", "--dry-run",
        "--out-dir", d,
    ]);
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&dir.path().join("summary.json"))["observed_len"], 2610);
    // a different split of the same length is accepted too
    let shifted = fastadj(&[
        "bce", "--synthetic", "844", "1767", "2", "0.005", "1", "--k-est", "900", "--n-est", "1711", "--dry-run",
        "--out-dir", d,
    ]);
    assert_eq!(code(&shifted), 0);
    let bad = fastadj(&[
        "bce", "--synthetic", "844", "1767", "2", "0.005", "1", "--k-est", "844", "--n-est", "1768", "--dry-run",
        "--out-dir", d,
    ]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn bce_csv_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = fastadj::bce_synthesize_data(6, 15, 2, 0.4, 0.001, 2).unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("x{i}.csv"))).collect();
    for (p, x) in paths.iter().zip(&data.x) {
        std::fs::write(p, format_csv_column(x)).unwrap();
    }
    let out_dir = dir.path().join("out");
    let base = [
        "bce", "--observed", dir_str(&paths[0]), "--observed", dir_str(&paths[1]), "--out-dir", dir_str(&out_dir),
    ];
    // lengths are required with CSV data
    assert_eq!(code(&fastadj(&base)), 1);
    let mut args = base.to_vec();
    args.extend(["--k-est", "6", "--n-est", "15", "--iters", "50"]);
    let out = fastadj(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out_dir.join("summary.json"))["alignment_s"], Value::Null);

    std::fs::write(&paths[1], format_csv_column(&data.x[1][1..])).unwrap();
    assert_eq!(code(&fastadj(&args)), 1);
}
