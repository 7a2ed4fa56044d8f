//! End-to-end tests of the command-line binary: configuration validation,
//! fit/estimate round trips, the bi-fidelity pipeline over external command
//! models, sample export, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use ddgpce::archive::SurrogateArchive;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_ddgpce")
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn gaussian_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    write(
        &path,
        &format!(
            r#"{{
                "input_model": {{
                    "marginals": [ {{"kind": "normal", "mean": 0.0, "std": 1.0, "repeat": 3}} ],
                    "correlation": {{"kind": "equicorrelated", "rho": 0.5}}
                }},
                "basis": {{"interaction_order": 1, "degree": 2, "link_degree": 1}},
                "samples": {{"risk": 20000, "design": 40, "pairs": 16, "moments": 4000}},
                "betas": [0.95, 0.99],
                "seed": 12345
                {extra}
            }}"#
        ),
    );
    path
}

#[test]
fn fit_estimate_roundtrip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = gaussian_config(
        dir.path(),
        r#", "model": {"kind": "linear", "weights": [1.0, -2.0, 0.5]}"#,
    );
    let archive_path = dir.path().join("surrogate.json");
    let report_path = dir.path().join("fit.txt");

    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        archive_path.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first_bytes = std::fs::read(&archive_path).unwrap();
    let archive = SurrogateArchive::load(&archive_path).unwrap();
    assert_eq!(archive.input_dimension, 3);
    assert!(std::fs::read_to_string(&report_path)
        .unwrap()
        .contains("model evaluations: 40"));

    // Rerun with the same seed: byte identical.
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        archive_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(first_bytes, std::fs::read(&archive_path).unwrap());

    let report_base = dir.path().join("risk");
    let cdf_path = dir.path().join("cdf.csv");
    let out = run(&[
        "estimate",
        "--config",
        config.to_str().unwrap(),
        "--archive",
        archive_path.to_str().unwrap(),
        "--out",
        report_base.to_str().unwrap(),
        "--cdf",
        cdf_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(report_base.with_extension("csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "beta,var,cvar,samples,k_beta,estimator,seed");
    assert_eq!(lines.len(), 3);
    let cvar_at = |line: &str| -> f64 { line.split(',').nth(2).unwrap().parse().unwrap() };
    assert!(cvar_at(lines[2]) >= cvar_at(lines[1]), "CVaR monotone in beta");

    let json = std::fs::read_to_string(report_base.with_extension("json")).unwrap();
    assert!(json.contains("\"beta\": 0.95"));

    let cdf = std::fs::read_to_string(&cdf_path).unwrap();
    assert!(cdf.starts_with("value,probability\n"));
    assert_eq!(cdf.lines().count(), 20_001);
}

#[test]
fn bifit_over_external_commands_counts_evaluations() {
    let dir = tempfile::tempdir().unwrap();
    let low_script = dir.path().join("low.py");
    write(
        &low_script,
        "import sys\nrows = sys.stdin.read().strip().splitlines()[1:]\nfor row in rows:\n    xs = [float(v) for v in row.split(',')]\n    print(sum(xs))\n",
    );
    let high_script = dir.path().join("high.py");
    write(
        &high_script,
        "import sys\nrows = sys.stdin.read().strip().splitlines()[1:]\nfor row in rows:\n    xs = [float(v) for v in row.split(',')]\n    print(2.0 * sum(xs) + 3.0)\n",
    );
    let config = gaussian_config(
        dir.path(),
        &format!(
            r#", "low_model": {{"kind": "command", "argv": ["python3", "{}"]}},
               "high_model": {{"kind": "command", "argv": ["python3", "{}"]}},
               "budget": {{"total": 100.0, "high_cost": 1.0, "low_cost": 0.5}}"#,
            low_script.display(),
            high_script.display()
        ),
    );
    let archive_path = dir.path().join("bifi.json");
    let report_base = dir.path().join("bifi-report");
    let out = run(&[
        "bifit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        archive_path.to_str().unwrap(),
        "--report",
        report_base.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("high-fidelity evaluations: 16"),
        "report must state the high-fidelity budget:\n{stdout}"
    );
    assert!(stdout.contains("low-fidelity evaluations: 56 (40 design + 16 link pairs)"));
    assert!(stdout.contains("feasible"));

    let archive = SurrogateArchive::load(&archive_path).unwrap();
    assert!(archive.link.is_some());
    let loaded = archive.instantiate().unwrap();
    // The link corrects the low model onto 2*low + 3.
    let points = nalgebra::DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, -1.0, 0.5, 0.0]);
    let values = loaded.evaluate(&points);
    for (v, x) in values.iter().zip([0.6, -0.5]) {
        let want = 2.0 * x + 3.0;
        assert!((v - want).abs() < 1e-6, "{v} vs {want}");
    }
}

#[test]
fn identical_fidelities_match_single_fidelity_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let config_single = gaussian_config(
        dir.path(),
        r#", "model": {"kind": "linear", "weights": [1.0, 1.0, 1.0]}"#,
    );
    std::fs::rename(&config_single, dir.path().join("single.json")).unwrap();
    let config_single = dir.path().join("single.json");
    let config_bifi = gaussian_config(
        dir.path(),
        r#", "low_model": {"kind": "linear", "weights": [1.0, 1.0, 1.0]},
            "high_model": {"kind": "linear", "weights": [1.0, 1.0, 1.0]}"#,
    );

    let single_archive = dir.path().join("single-archive.json");
    let out = run(&[
        "fit",
        "--config",
        config_single.to_str().unwrap(),
        "--out",
        single_archive.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let single_report = dir.path().join("single-risk");
    let out = run(&[
        "estimate",
        "--config",
        config_single.to_str().unwrap(),
        "--archive",
        single_archive.to_str().unwrap(),
        "--out",
        single_report.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let bifi_archive = dir.path().join("bifi-archive.json");
    let bifi_report = dir.path().join("bifi-risk");
    let out = run(&[
        "bifit",
        "--config",
        config_bifi.to_str().unwrap(),
        "--out",
        bifi_archive.to_str().unwrap(),
        "--report",
        bifi_report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let single_csv = std::fs::read_to_string(single_report.with_extension("csv")).unwrap();
    let bifi_csv = std::fs::read_to_string(bifi_report.with_extension("csv")).unwrap();
    let parse_cvar = |text: &str| -> Vec<f64> {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect()
    };
    for (a, b) in parse_cvar(&single_csv).iter().zip(parse_cvar(&bifi_csv)) {
        let rel = (a - b).abs() / a.abs().max(1e-300);
        assert!(rel < 1e-9, "single {a} vs bi-fidelity {b}");
    }
}

#[test]
fn trials_report_contains_mrd_per_beta() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    write(
        &path,
        r#"{
            "input_model": {
                "marginals": [ {"kind": "normal", "mean": 0.0, "std": 1.0, "repeat": 3} ],
                "correlation": {"kind": "identity"}
            },
            "basis": {"interaction_order": 1, "degree": 1},
            "samples": {"risk": 4000, "design": 30, "moments": 1000},
            "betas": [0.9],
            "seed": 5,
            "trials": {"count": 5},
            "model": {"kind": "linear", "weights": [2.0, -1.0, 1.0]}
        }"#,
    );
    let report = dir.path().join("trials");
    let out = run(&[
        "trials",
        "--config",
        path.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(report.with_extension("csv")).unwrap();
    assert!(csv.starts_with(
        "beta,benchmark_var,benchmark_cvar,mean_trial_cvar,mrd,trials,design_size"
    ));
    assert_eq!(csv.lines().count(), 2);
    let mrd: f64 = csv.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((0.0..0.2).contains(&mrd), "linear model MRD should be small, got {mrd}");
}

#[test]
fn sample_export_has_header_and_uniform_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let config = gaussian_config(
        dir.path(),
        r#", "model": {"kind": "constant", "value": 1.0}"#,
    );
    let out_path = dir.path().join("samples.csv");
    let out = run(&[
        "sample",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--count",
        "50",
        "--scheme",
        "lhs",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x1,x2,x3,p");
    assert_eq!(lines.len(), 51);
    for line in &lines[1..] {
        let p: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(p, 0.02);
    }
}

#[test]
fn validate_prints_model_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    write(
        &path,
        r#"{
            "input_model": {
                "marginals": [
                    {"kind": "uniform", "lower": 0.0, "upper": 1.0},
                    {"kind": "lognormal", "mean": 0.144, "cov": 0.06, "repeat": 2}
                ],
                "correlation": {"kind": "dense", "rows": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.5], [0.0, 0.5, 1.0]]}
            },
            "basis": {"interaction_order": 2, "degree": 2},
            "samples": {"risk": 5000, "design": 60, "moments": 1000},
            "betas": [0.95],
            "seed": 7
        }"#,
    );
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("configuration: ok"));
    assert!(stdout.contains("max KS statistic"));
    assert!(stdout.contains("Gaussian-copula correlations"), "{stdout}");
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = gaussian_config(dir.path(), r#", "betas_override": 1"#);
    // No model reference at all -> config error for fit.
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("a.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
}

#[test]
fn model_failures_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad_script = dir.path().join("bad.py");
    write(&bad_script, "import sys\nsys.exit(9)\n");
    let config = gaussian_config(
        dir.path(),
        &format!(
            r#", "model": {{"kind": "command", "argv": ["python3", "{}"]}}"#,
            bad_script.display()
        ),
    );
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("a.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
