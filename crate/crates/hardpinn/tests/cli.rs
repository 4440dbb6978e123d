//! End-to-end checks of the `hardpinn` binary: exit codes, artifact
//! layout, and the output-directory override.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardpinn"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tiny_run_config(out_dir: &Path) -> String {
    format!(
        r#"{{
  "problem": "poisson1d",
  "mode": "hard",
  "network": {{"main_hidden": [8], "subnet_hidden": [4]}},
  "n_f": 8,
  "adam": {{"iters": 10, "lr": 0.002}},
  "seed": 1,
  "n_test": 8,
  "out_dir": "{}"
}}"#,
        out_dir.display()
    )
}

fn run_ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_subcommand_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("artifacts");
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config(&out_dir));
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    let stdout = run_ok(&out);
    assert!(stdout.contains("run finished"), "{stdout}");
    assert!(stdout.contains("MAE"), "{stdout}");
    for name in ["metrics.csv", "model_final.json", "metrics_summary.json", "run_meta.json"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
}

#[test]
fn env_var_overrides_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let configured = dir.path().join("configured");
    let overridden = dir.path().join("overridden");
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config(&configured));
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .env("HARDPINN_OUT_DIR", &overridden)
        .output()
        .unwrap();
    run_ok(&out);
    assert!(overridden.join("metrics.csv").exists());
    assert!(!configured.exists(), "configured dir must be ignored under the override");
}

#[test]
fn config_problems_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();

    // unknown key, with a line-anchored message
    let cfg = write_config(
        dir.path(),
        "bad_key.json",
        "{\"problem\": \"poisson1d\", \"mode\": \"hard\",\n \"n_f\": 4,\n \"bogus\": 1}",
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus") && stderr.contains("line 3"), "{stderr}");

    // invariant violation: hard mode takes no boundary points
    let cfg = write_config(
        dir.path(),
        "hard_nb.json",
        "{\"problem\": \"poisson1d\", \"mode\": \"hard\", \"n_f\": 4, \"n_b\": 2}",
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // missing file
    let out = bin().arg("run").arg(dir.path().join("nope.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("blowup");
    // an absurd learning rate overflows the loss within a few steps
    let cfg = write_config(
        dir.path(),
        "blowup.json",
        &format!(
            r#"{{
  "problem": "poisson1d",
  "mode": "hard",
  "network": {{"main_hidden": [8], "subnet_hidden": [4]}},
  "n_f": 8,
  "adam": {{"iters": 50, "lr": 1e200}},
  "seed": 1,
  "out_dir": "{}"
}}"#,
            out_dir.display()
        ),
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn ablate_subcommand_emits_the_ratio_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ablate");
    let cfg = write_config(
        dir.path(),
        "ablate.json",
        &format!(
            r#"{{
  "problem": "poisson1d",
  "mode": "soft",
  "network": {{"main_hidden": [8], "subnet_hidden": [4]}},
  "n_f": 8,
  "n_b": 2,
  "adam": {{"iters": 20, "lr": 0.002}},
  "seed": 1,
  "n_test": 8,
  "out_dir": "{}"
}}"#,
            out_dir.display()
        ),
    );
    let out = bin().arg("ablate").arg(&cfg).output().unwrap();
    let stdout = run_ok(&out);
    assert!(stdout.contains("ablation finished"), "{stdout}");
    // 20 iterations sit inside the warmup, so the series is empty but the
    // artifacts still appear
    let ratio = std::fs::read_to_string(out_dir.join("ratio.csv")).unwrap();
    assert_eq!(ratio, "iteration,ratio\n");
    assert!(out_dir.join("no_extra/metrics.csv").exists());
    assert!(out_dir.join("extra_fields/metrics.csv").exists());
    assert!(out_dir.join("ablate_meta.json").exists());
}

#[test]
fn sweep_subcommand_parses_comma_lists() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        &format!(
            r#"{{
  "problem": "poisson1d",
  "mode": "hard",
  "network": {{"main_hidden": [8], "subnet_hidden": [4]}},
  "n_f": 8,
  "adam": {{"iters": 5, "lr": 0.002}},
  "seed": 1,
  "n_test": 8,
  "out_dir": "{}"
}}"#,
            out_dir.display()
        ),
    );
    let out = bin()
        .arg("sweep")
        .arg(&cfg)
        .args(["--beta-s", "1,5", "--beta-t", "10"])
        .output()
        .unwrap();
    let stdout = run_ok(&out);
    assert!(stdout.contains("2 cells"), "{stdout}");
    let table = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("beta_s,beta_t,mae,mape,wmape,final_loss\n"));
}
