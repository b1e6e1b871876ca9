use approx::assert_abs_diff_eq;

use super::*;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

const UNIFORM: &str = r#"{
    "source": {"family": "uniform", "a": 0.0, "b": 1.0},
    "alpha": 0.5, "r": 2.0, "n_grid": [2, 4, 8, 16],
    "interval": {"lo": 0.0, "hi": 0.5}
}"#;

#[test]
fn uniform_asymptotics_exact() {
    let report = run_asymptotics(&cfg(UNIFORM)).unwrap();
    for p in &report.records {
        assert_abs_diff_eq!(p.normalized_distortion, 1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.ratio_to_limit, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p.max_cell_probability, 1.0 / p.n as f64, epsilon = 1e-15);
    }
    assert!(report.passed, "{:?}", report.checks);
    let wide = ExperimentConfig::from_json_with_overrides(UNIFORM, &["source.b=2", "interval.hi=1", "n_grid=[4]"]).unwrap();
    let report = run_asymptotics(&wide).unwrap();
    assert_abs_diff_eq!(report.records[0].normalized_distortion, 1.0 / 3.0, epsilon = 1e-12);
}

#[test]
fn uniform_distortion_share_by_symmetry() {
    let c = ExperimentConfig::from_json_with_overrides(UNIFORM, &["n_grid=[4]"]).unwrap();
    let report = run_distortion_density(&c).unwrap();
    let p = &report.records[0];
    assert_abs_diff_eq!(p.distortion_share, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(report.limits.tilted_mass, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(p.coincidence_ratio, 1.0, epsilon = 1e-12);
    assert!(p.identity_residual < 1e-12);
}

#[test]
fn uniform_entropy_density() {
    let report = run_entropy_density(&cfg(UNIFORM)).unwrap();
    let p = report.last();
    assert_abs_diff_eq!(p.entropy_density_ratio_a1, 0.5f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(p.partition_sum, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(report.limits.entropy_density_limits[0], 0.5f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(p.restricted_normalized_distortion / report.limits.restricted_q, 1.0, epsilon = 1e-9);
    assert!(report.passed, "{:?}", report.checks);
}

#[test]
fn matched_mismatch_is_trivial() {
    let c = ExperimentConfig::from_json_with_overrides(
        UNIFORM,
        &[r#"mismatch_source={"family": "uniform", "a": 0.0, "b": 1.0}"#],
    )
    .unwrap();
    let report = run_mismatch(&c).unwrap();
    for p in &report.records {
        assert_abs_diff_eq!(p.mismatch_entropy_shift.unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.normalized_distortion, report.limits.q, epsilon = 1e-12);
    }
    let m = report.limits.mismatch.as_ref().unwrap();
    assert_abs_diff_eq!(m.loss, 1.0, epsilon = 1e-9);
}

#[test]
fn uniform_pair_mismatch_limits() {
    let c = ExperimentConfig::from_json_with_overrides(
        UNIFORM,
        &[r#"mismatch_source={"family": "uniform", "a": 0.0, "b": 0.5}"#, "n_grid=[64, 128]", "interval.hi=0.25"],
    )
    .unwrap();
    let report = run_mismatch(&c).unwrap();
    let m = report.limits.mismatch.as_ref().unwrap();
    assert_abs_diff_eq!(m.entropy_shift, 0.5f64.sqrt(), epsilon = 1e-9);
    assert_abs_diff_eq!(m.distortion_limit, 1.0 / 48.0, epsilon = 1e-12);
    assert_abs_diff_eq!(report.limits.limit, 1.0 / 48.0, epsilon = 1e-12);
    assert_abs_diff_eq!(report.last().mismatch_entropy_shift.unwrap(), 0.5f64.sqrt(), epsilon = 1e-9);
    assert_abs_diff_eq!(report.last().ratio_to_limit, 1.0, epsilon = 1e-9);
}

#[test]
fn sanity_uniform_max_cell() {
    let report = run_sanity(&cfg(UNIFORM)).unwrap();
    for p in &report.records {
        assert_eq!(p.max_cell_probability, 1.0 / p.n as f64);
    }
    assert_eq!(report.eval_points, vec![0.5, 0.5]);
}

#[test]
fn reports_are_deterministic() {
    let c = cfg(r#"{"source": {"family": "gaussian", "sigma": 1.0}, "alpha": 0.5, "n_grid": [4, 16, 64]}"#);
    let a = run_asymptotics(&c).unwrap();
    let b = run_asymptotics(&c).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.summary_json(), b.summary_json());
    let lines: Vec<_> = a.to_csv().lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("n,H_alpha,D,eRH_D,ratio,"));
    assert!(lines[1].starts_with("4,"));
}

#[test]
fn gaussian_ratio_approaches_one() {
    let c = cfg(r#"{"source": {"family": "gaussian", "sigma": 1.0}, "alpha": 0.5, "n_grid": [64, 512]}"#);
    let report = run_asymptotics(&c).unwrap();
    let dev: Vec<f64> = report.records.iter().map(|p| (p.ratio_to_limit - 1.0).abs()).collect();
    assert!(dev[1] < dev[0], "{dev:?}");
    assert!(report.records.iter().all(|p| p.identity_residual < 1e-9));
}

#[test]
fn precondition_errors() {
    let field = |r: Result<ConvergenceReport>| match r {
        Err(Error::Config { field, .. }) => field,
        other => panic!("{other:?}"),
    };
    assert_eq!(field(run_mismatch(&cfg(UNIFORM))), "mismatch_source");
    let zero = ExperimentConfig::from_json_with_overrides(UNIFORM, &["alpha=0"]).unwrap();
    assert_eq!(field(run_asymptotics(&zero)), "alpha");
    assert!(run_sanity(&zero).is_ok());
    let full = ExperimentConfig::from_json_with_overrides(UNIFORM, &["interval.lo=-1", "interval.hi=2"]).unwrap();
    assert_eq!(field(run_entropy_density(&full)), "interval");
}

#[test]
fn hypothesis_failures_abort() {
    let bimodal = cfg(r#"{
        "source": {"family": "mixture", "components": [
            {"weight": 0.5, "density": {"family": "uniform", "a": 0.0, "b": 1.0}},
            {"weight": 0.5, "density": {"family": "uniform", "a": 2.0, "b": 3.0}}
        ]},
        "alpha": 0.5, "n_grid": [4]
    }"#);
    assert!(matches!(run_asymptotics(&bimodal), Err(Error::Hypothesis(_))));
    assert!(run_sanity(&bimodal).is_ok());
    let unbounded = cfg(r#"{
        "source": {"family": "gaussian", "sigma": 1.0},
        "mismatch_source": {"family": "gaussian", "sigma": 2.0},
        "alpha": 0.5, "n_grid": [4]
    }"#);
    match run_mismatch(&unbounded) {
        Err(Error::Hypothesis(msg)) => assert!(msg.contains("x ="), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn lemma_check_passes() {
    let c = cfg(r#"{"source": {"family": "gaussian", "sigma": 1.0}, "alpha": 0.5}"#);
    let report = run_lemma_check(&c).unwrap();
    assert!(report.passed, "{:?}", report.checks);
}

#[test]
fn refined_codepoints_do_not_hurt() {
    let plain = cfg(r#"{"source": {"family": "gaussian", "sigma": 1.0}, "alpha": 0.5, "n_grid": [8]}"#);
    let mut refined = plain.clone();
    refined.refine_codepoints = true;
    let a = run_asymptotics(&plain).unwrap();
    let b = run_asymptotics(&refined).unwrap();
    assert!(b.records[0].distortion <= a.records[0].distortion);
    assert_eq!(a.records[0].entropy, b.records[0].entropy);
}
