use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use renyi_quant::theory;
use renyi_quant::Density;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renyi-quant"))
        .args(args)
        .env("RENYI_QUANT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn predicted(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .parse()
        .unwrap()
}

#[test]
fn predict_uniform_prints_one_twelfth() {
    let o = run(&["predict", "--config", &config("uniform.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "Q=0.0833333333"), "{out}");
    assert!(out.lines().any(|l| l == "beta1=0.6"), "{out}");
    assert!(out.lines().any(|l| l == "beta2=5"), "{out}");
}

#[test]
fn predict_matches_library_values() {
    let o = run(&["predict", "-c", &config("mismatch_gaussian.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let g = Density::gaussian(0.0, 2.0).unwrap();
    let f = Density::gaussian(0.0, 1.0).unwrap();
    let expect = [
        ("Q", theory::quantization_coefficient(&g, 0.5, 2.0).unwrap()),
        ("Q_mismatch", theory::quantization_coefficient(&f, 0.5, 2.0).unwrap()),
        ("renyi_divergence", theory::renyi_divergence(&f, &g, 0.5).unwrap()),
        ("kl_divergence", theory::kullback_leibler(&f, &g).unwrap()),
        ("entropy_shift", theory::mismatch_entropy_shift(&g, &f, 0.5, 2.0).unwrap()),
        ("distortion_limit", theory::mismatch_distortion_limit(&g, &f, 0.5, 2.0).unwrap()),
        ("mismatch_loss", theory::mismatch_loss(&g, &f, 0.5, 2.0).unwrap()),
    ];
    for (key, value) in expect {
        let printed = predicted(&out, key);
        assert!((printed / value - 1.0).abs() <= 5e-9, "{key}: {printed} vs {value}");
    }
}

#[test]
fn asymptotics_writes_named_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested");
    let o = run(&["asymptotics", "--config", &config("gaussian.json"), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = std::fs::read_to_string(out.join("gaussian_asymptotics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("n,H_alpha,D,eRH_D,ratio"), "{}", lines[0]);
    assert_eq!(lines.len(), 10);
    assert!(lines[9].starts_with("4096,"));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("gaussian_asymptotics_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], Value::Bool(true));
    let q = theory::quantization_coefficient(&Density::gaussian(0.0, 1.0).unwrap(), 0.5, 2.0).unwrap();
    assert_eq!(summary["limit"].as_f64().unwrap(), q);
}

#[test]
fn mismatch_summary_has_one_forty_eighth() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["mismatch", "-c", &config("mismatch_uniform.json"), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("mismatch_uniform_mismatch_summary.json")).unwrap();
    assert!(text.contains("\"limit\": 0.0208333"), "{text}");
    let summary: Value = serde_json::from_str(&text).unwrap();
    assert!((summary["limit"].as_f64().unwrap() - 1.0 / 48.0).abs() <= 1e-12);
}

#[test]
fn tolerance_failure_exits_two_with_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let pass = dir.path().join("pass");
    let fail = dir.path().join("fail");
    let cfg = config("gaussian.json");
    let o = run(&["asymptotics", "-c", &cfg, "-o", pass.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["asymptotics", "-c", &cfg, "-o", fail.to_str().unwrap(), "tolerances.ratio=0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL ratio"));
    let a = std::fs::read(pass.join("gaussian_asymptotics.csv")).unwrap();
    let b = std::fs::read(fail.join("gaussian_asymptotics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_errors_exit_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: &[(&[&str], &str)] = &[
        (&["n_grid=[8, 4]"], "n_grid[1]"),
        (&["tolerances.ratio=-1"], "tolerances.ratio"),
        (&["alpha=1.5"], "alpha"),
        (&["bogus=1"], "bogus"),
        (&["source.sigma=\"wide\""], "source"),
    ];
    let cfg = config("gaussian.json");
    for (overrides, field) in cases {
        let mut args = vec!["asymptotics", "-c", &cfg, "-o", d];
        args.extend_from_slice(overrides);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{overrides:?}");
        let err = stderr(&o);
        assert!(err.contains(&format!("`{field}`")), "{overrides:?}: {err}");
    }
    let o = run(&["predict", "-c", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`config`"), "{}", stderr(&o));
}

#[test]
fn malformed_json_names_the_file_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"source\": ").unwrap();
    let o = run(&["predict", "-c", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`config`"));
}

#[test]
fn hypothesis_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "mismatch",
        "-c",
        &config("mismatch_gaussian.json"),
        "-o",
        dir.path().to_str().unwrap(),
        "source.sigma=0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hypothesis"), "{}", stderr(&o));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn name_field_sets_the_output_stem() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["asymptotics", "-c", &config("uniform.json"), "-o", dir.path().to_str().unwrap(), "name=flat", "n_grid=[4, 8]"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("flat_asymptotics.csv").exists());
    assert!(dir.path().join("flat_asymptotics_summary.json").exists());
}

#[test]
fn lemma_check_passes() {
    let o = run(&["lemma-check", "-c", &config("gaussian.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("split_bound_strict"));
}

#[test]
fn every_experiment_runs_on_the_checked_in_configs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (cmd, cfg) in [
        ("entropy-density", "uniform.json"),
        ("distortion-density", "gaussian.json"),
        ("sanity", "laplacian.json"),
        ("asymptotics", "laplacian.json"),
        ("mismatch", "mismatch_gaussian.json"),
    ] {
        let o = run(&[cmd, "-c", &config(cfg), "-o", d]);
        assert_eq!(o.status.code(), Some(0), "{cmd} {cfg}: {}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn help_documents_defaults_and_usage_errors_exit_one() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = stdout(&o);
    for needle in ["[default: 2]", "n_grid", "RENYI_QUANT_THREADS", "trend_floor 1e-9", "EXIT STATUS"] {
        assert!(help.contains(needle), "missing {needle}");
    }
    let o = run(&["asymptotics", "-o", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["transmogrify"]);
    assert_eq!(o.status.code(), Some(1));
}
