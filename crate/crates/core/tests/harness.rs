use pradial::harness::{
    emit_results, render, run_experiment, run_lp_convergence, ConfigBuilder, ExperimentConfig, ExperimentKind,
    OutputFormat, ResultRow,
};
use pradial::Error;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

const XI: &str = r#"
experiment = "xi-decay"
p = 1.0
n_grid = [64, 256, 1024, 4096]
samples_per_measure = 20000
seed = 3
"#;

#[test]
fn config_defaults() {
    let c = cfg("experiment = \"lp-convergence\"\np = 1.5\nseed = 1\n");
    assert_eq!(c.n_grid, vec![16, 64, 256, 1024]);
    assert_eq!(c.frame_replicates, 10);
    assert_eq!(c.samples(), 2000);
    assert_eq!(cfg("experiment = \"moment-audit\"\np = 1.5\n").samples(), 100_000);
    assert_eq!(c.output_format(), OutputFormat::Csv);
}

#[test]
fn config_invariants_are_enforced() {
    let base = "experiment = \"lp-convergence\"\np = 1.0\nk = 2\nseed = 1\n";
    let bad = [
        "n_grid = [64, 16]",
        "n_grid = [16, 16]",
        "n_grid = [1, 16]",
        "n_grid = []",
        "samples_per_measure = 99",
        "frame_replicates = 0",
        "regime = { kind = \"beta\", beta = 1.0, kappa = 0.5 }",
        "regime = { kind = \"beta\", beta = 1.0, kappa = 1.0 }",
        "regime = { kind = \"alpha\", alpha = 1.0 }",
        "bogus = 3",
    ];
    for extra in bad {
        let r = ExperimentConfig::from_toml(&format!("{base}{extra}\n"));
        assert!(matches!(r, Err(Error::Config(_))), "{extra} accepted: {r:?}");
    }
    assert!(matches!(ExperimentConfig::from_toml("p = 1.0\n"), Err(Error::Config(_))));
    assert!(ExperimentConfig::from_toml("experiment = \"rate-eval\"\np = 1.0\n").is_err());
}

#[test]
fn regime_must_match_wspec_growth() {
    let ok = r#"
experiment = "xi-decay"
p = 1.0
regime = { kind = "beta", beta = 2.0, kappa = 2.0 }
wspec = { kind = "gamma", shape = { rule = "growing", lambda = 2.0, kappa = 2.0 }, rate = "1/p" }
"#;
    assert!(ExperimentConfig::from_toml(ok).is_ok());
    let alpha = r#"
experiment = "gaussian-limit"
p = 3.0
regime = { kind = "alpha", alpha = 0.5 }
wspec = { kind = "gamma", shape = { rule = "growing", lambda = 0.5, kappa = 1.0 }, rate = "1/p" }
"#;
    assert!(ExperimentConfig::from_toml(alpha).is_ok());
    assert!(ExperimentConfig::from_toml(&alpha.replace("alpha = 0.5 }", "alpha = 0.0 }")).is_err());
}

#[test]
fn overrides_use_field_names() {
    let mut b = ConfigBuilder::from_toml(XI).unwrap();
    b.set("n_grid", "[8, 32]").unwrap();
    b.set("regime", "{kind = \"alpha\", alpha = 0.0}").unwrap();
    b.set("output", "out/result.json").unwrap();
    b.set("experiment", "moment-audit").unwrap();
    let c = b.build().unwrap();
    assert_eq!(c.n_grid, vec![8, 32]);
    assert_eq!(c.experiment, ExperimentKind::MomentAudit);
    assert_eq!(c.output_format(), OutputFormat::Json);
    assert!(b.set("nonsense", "1").is_err());
    assert!(b.set("p", "[").is_err());
}

#[test]
fn emit_rejects_empty_and_writes_one_line_per_row() {
    assert!(render(&[], OutputFormat::Csv).is_err());
    let row = ResultRow::new(ExperimentKind::XiDecay, 16, "xi_mean", 0.25, 9).with_stderr(0.01);
    let csv = String::from_utf8(render(std::slice::from_ref(&row), OutputFormat::Csv).unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["experiment,n,replicate,statistic,value,stderr,seed", "xi-decay,16,,xi_mean,0.25,0.01,9"]);
    let json: serde_json::Value = serde_json::from_slice(&render(&[row], OutputFormat::Json).unwrap()).unwrap();
    let obj = json.as_array().unwrap()[0].as_object().unwrap();
    let keys: Vec<&String> = obj.keys().collect();
    assert_eq!(keys.len(), 7);
    for k in ["experiment", "n", "replicate", "statistic", "value", "stderr", "seed"] {
        assert!(obj.contains_key(k));
    }
    assert!(obj["replicate"].is_null());
}

#[test]
fn emit_reports_io_path() {
    let row = ResultRow::new(ExperimentKind::XiDecay, 16, "xi_mean", 0.25, 9);
    let path = std::path::Path::new("/nonexistent-dir/x.csv");
    match emit_results(&[row], OutputFormat::Csv, path) {
        Err(e @ Error::Io { .. }) => assert!(e.to_string().contains("/nonexistent-dir/x.csv")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

#[test]
fn non_finite_rows_are_refused() {
    let row = ResultRow::new(ExperimentKind::XiDecay, 16, "xi_mean", f64::NAN, 9);
    assert!(render(&[row], OutputFormat::Csv).is_err());
    let row = ResultRow::new(ExperimentKind::XiDecay, 16, "xi_mean", 1.0, 9).with_stderr(-1.0);
    assert!(render(&[row], OutputFormat::Json).is_err());
}

#[test]
fn xi_decay_passes_and_is_deterministic() {
    let c = cfg(XI);
    let a = run_experiment(&c).unwrap();
    assert!(a.passed(), "{:?}", a.checks);
    let b = run_experiment(&c).unwrap();
    for f in [OutputFormat::Csv, OutputFormat::Json] {
        assert_eq!(render(&a.rows, f).unwrap(), render(&b.rows, f).unwrap());
    }
    let other = run_experiment(&cfg(&XI.replace("seed = 3", "seed = 4"))).unwrap();
    assert_ne!(render(&a.rows, OutputFormat::Csv).unwrap(), render(&other.rows, OutputFormat::Csv).unwrap());
    assert!(a.rows.iter().all(|r| r.stderr.unwrap() >= 0.0));
}

#[test]
fn cone_lp_convergence_decreases() {
    let c = cfg(r#"
experiment = "lp-convergence"
p = 1.0
k = 2
wspec = { kind = "dirac-zero" }
n_grid = [16, 64, 256, 1024]
samples_per_measure = 500
frame_replicates = 3
seed = 11
"#);
    let out = run_lp_convergence(&c).unwrap();
    let med: Vec<f64> = c.n_grid.iter().map(|&n| out.value(n, "lp_median").unwrap()).collect();
    assert!(med.windows(2).all(|w| w[1] < w[0]), "{med:?}");
    for &n in &c.n_grid {
        assert!(out.value(n, "lp_max").unwrap() >= out.value(n, "lp_median").unwrap());
        let reps = out.rows.iter().filter(|r| r.n == n && r.statistic == "lp").count();
        assert_eq!(reps, 3);
    }
}

#[test]
fn gaussian_limit_covariance_scales_with_alpha() {
    let base = r#"
experiment = "gaussian-limit"
p = 1.0
k = 1
n_grid = [512]
samples_per_measure = 40000
seed = 5
"#;
    let a0 = run_experiment(&cfg(base)).unwrap();
    let with_alpha = format!(
        "{base}regime = {{ kind = \"alpha\", alpha = 1.0 }}\nwspec = {{ kind = \"gamma\", shape = {{ rule = \"growing\", lambda = 1.0, kappa = 1.0 }}, rate = \"1/p\" }}\n"
    );
    let a1 = run_experiment(&cfg(&with_alpha)).unwrap();
    assert!(a0.passed() && a1.passed(), "{:?} {:?}", a0.checks, a1.checks);
    let ratio = a1.value(512, "cov_0_0").unwrap() / a0.value(512, "cov_0_0").unwrap();
    assert!((ratio - 0.25).abs() < 0.015, "ratio {ratio}");
}

#[test]
fn moment_audit_passes() {
    for p in ["1.0", "1.5", "2.0", "3.0"] {
        let out = run_experiment(&cfg(&format!(
            "experiment = \"moment-audit\"\np = {p}\nk = 3\nn_grid = [256]\nframe_replicates = 4\nseed = 8\n"
        )))
        .unwrap();
        assert!(out.passed(), "p={p}: {:?}", out.checks);
    }
}

#[test]
fn rate_eval_reads_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    std::fs::write(&path, "1 1\n0.7071067811865476\n").unwrap();
    let text = format!(
        "experiment = \"rate-eval\"\np = 1.0\nrate_matrix = \"{}\"\nsamples_per_measure = 20000\nseed = 2\n",
        path.display()
    );
    let out = run_experiment(&cfg(&text)).unwrap();
    assert!((out.value(0, "rate").unwrap() - 0.5 * 2f64.ln()).abs() < 1e-12);
    assert!((out.value(0, "sigma_sq").unwrap() - 2.0).abs() < 1e-12);
    assert!(out.passed());
    let k_mismatch = text.replace("p = 1.0", "p = 1.0\nk = 2");
    assert!(run_experiment(&cfg(&k_mismatch.replace("n_grid", "x"))).is_err());
}

#[test]
fn mp_bound_rejects_atoms_and_flags_exponential() {
    let base = "experiment = \"mp-bound\"\np = 4.0\nn_grid = [4, 16, 64]\nsamples_per_measure = 1000\nseed = 1\n";
    let out = run_experiment(&cfg(base)).unwrap();
    assert!(!out.passed());
    assert!(out.checks.iter().any(|c| c.name == "neg-moment-bounded-in-n" && !c.passed));
    let dirac = format!("{base}wspec = {{ kind = \"dirac-zero\" }}\n");
    assert!(matches!(run_experiment(&cfg(&dirac)), Err(Error::Unsupported(_))));
}
