use std::path::Path;
use std::process::{Command, Output};

fn lptx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lptx"))
        .args(args)
        .env_remove("LPTX_OUT")
        .output()
        .expect("spawn lptx")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn list_names_every_experiment_with_its_statement() {
    let o = lptx(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("commutator → Lemma 2.2"), "{text}");
    assert!(text.contains("log-loss → Theorem 1.1"), "{text}");
}

#[test]
fn verify_writes_deterministic_rows_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--out", out, "--grid", "32", "--seed", "7", "verify", "trifrequency", "--bank-size", "4"];
    let first = lptx(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let csv = dir.path().join("trifrequency.csv");
    let bytes = std::fs::read(&csv).unwrap();
    assert_eq!(code(&lptx(&args)), 0);
    assert_eq!(std::fs::read(&csv).unwrap(), bytes);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trifrequency.json")).unwrap()).unwrap();
    assert!(json["generated_unix"].as_u64().unwrap() > 0);
    assert_eq!(json["provenance"]["seed"], 7);
}

#[test]
fn missing_coefficient_spec_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lptx(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--coefficients",
        "/nonexistent/spec.toml",
        "verify",
        "simplex",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/nonexistent/spec.toml"));
}

#[test]
fn unknown_config_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "seed = 3\nbogus = 1\n").unwrap();
    let o = lptx(&["--config", config.to_str().unwrap(), "verify", "simplex"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
}

#[test]
fn bad_flags_and_unknown_experiments_exit_one() {
    assert_eq!(code(&lptx(&["--no-such-flag", "list"])), 1);
    assert_eq!(code(&lptx(&["verify", "no-such-experiment"])), 1);
    assert_eq!(code(&lptx(&["--help"])), 0);
}

#[test]
fn decoupled_log_loss_ratio_shrinks_and_a_failed_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = lptx(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--grid",
        "32",
        "--nt",
        "32",
        "--delta0",
        "0",
        "probe-log-loss",
        "--lambda",
        "4,16,64",
    ]);
    // With a = 0 there is no logarithmic loss to fit, so the curvature check fails.
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let ratio = csv_column(&dir.path().join("log-loss.csv"), "ratio");
    assert_eq!(ratio.len(), 3);
    assert!(ratio.windows(2).all(|w| w[1] < w[0]), "{ratio:?}");
}

#[test]
fn flags_override_config_and_config_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let from_file = dir.path().join("file-out");
    let from_env = dir.path().join("env-out");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!("experiment = \"simplex\"\nseed = 5\nsamples = 2\nout = {:?}\n", from_file.to_str().unwrap()),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lptx"))
        .args(["--config", config.to_str().unwrap(), "--seed", "9", "verify"])
        .env("LPTX_OUT", &from_env)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!from_env.exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(from_file.join("simplex.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["seed"], 9);
}

#[test]
fn env_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lptx"))
        .args(["verify", "simplex", "--samples", "2"])
        .env("LPTX_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("simplex.csv").exists());
}

#[test]
fn solve_writes_a_dump_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for method in ["rk4", "picard"] {
        let name = format!("u-{method}");
        let o = lptx(&[
            "--out", out, "--grid", "16", "--nt", "16", "solve", "--method", method, "--lambda", "8", "--name", &name,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(dir.path().join(format!("{name}.lptx")).exists());
        let sidecar: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{name}.json"))).unwrap()).unwrap();
        assert!(sidecar.is_object());
    }
}
