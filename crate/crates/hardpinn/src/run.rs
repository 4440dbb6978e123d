//! Config-driven orchestration: single runs, the extra-fields ablation,
//! and hardness sweeps.
//!
//! Every artifact except `run_meta.json` is a pure function of (config,
//! seed): reruns produce byte-identical metrics, model, ratio and sweep
//! files. Wall-clock time lives only in the meta file.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::ansatz::{assemble, soft_assemble, AnsatzOptions, ModelParams, NetworkLayout};
use crate::config::{ConfigError, LrSchedule, Mode, RunConfig};
use crate::network::MlpParams;
use crate::problems::{builtin, evaluate_metrics, Metrics, ProblemSpec, TruthSource};
use crate::training::{
    coefficient_of_variation, hc_loss, loss_group_count, movvar_ratio, sample_collocation,
    sample_soft_batch, soft_loss, train, warmup_len, LbfgsConfig, MetricsRow, PlateauConfig,
    StopReason, TrainError, TrainSchedule,
};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "HARDPINN_OUT_DIR";

/// Window for the gradient moving-variance and moving-average filters.
pub const MOVVAR_WINDOW: usize = 500;

const TEST_SEED_OFFSET: u64 = 0x7E57;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for failures
    /// during execution.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Runtime(_) => 2,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> RunError {
        RunError::Config(e.to_string())
    }
}

impl From<TrainError> for RunError {
    fn from(e: TrainError) -> RunError {
        RunError::Runtime(e.to_string())
    }
}

fn cfg_err(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

fn rt_err(e: impl std::fmt::Display) -> RunError {
    RunError::Runtime(e.to_string())
}

/// Output directory: environment override, then the config, then a local
/// default.
pub fn resolve_out_dir(cfg: &RunConfig) -> PathBuf {
    resolve_out_dir_with(cfg, std::env::var(OUT_DIR_ENV).ok().as_deref())
}

fn resolve_out_dir_with(cfg: &RunConfig, env_override: Option<&str>) -> PathBuf {
    if let Some(dir) = env_override {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(cfg.out_dir.as_deref().unwrap_or("hardpinn_out"))
}

const CSV_HEADER: &str = "iteration,lr,total,pde,equilibrium,bc,ic,mean_abs_grad,movvar\n";

fn push_row(csv: &mut String, row: &MetricsRow) {
    let b = &row.breakdown;
    let _ = write!(
        csv,
        "{},{},{},{},{},{},{},{},",
        row.iteration, row.lr, b.total, b.pde, b.equilibrium, b.bc, b.ic, row.mean_abs_grad
    );
    if let Some(mv) = row.movvar {
        let _ = write!(csv, "{mv}");
    }
    csv.push('\n');
}

enum Trained {
    Hard(crate::ansatz::HardConstraintAnsatz, ModelParams),
    Soft(crate::ansatz::SoftAnsatz, MlpParams),
}

struct ExecSummary {
    final_loss: f64,
    total_iterations: usize,
    lbfgs_stop: Option<StopReason>,
    metrics: Option<Metrics>,
    /// Per-Adam-iteration mean |gradient| of the PDE-system part.
    instrumented: Vec<f64>,
    n_params: usize,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    problem: &'a str,
    mode: &'a str,
    seed: u64,
    n_params: usize,
    loss_groups: usize,
    final_loss: f64,
    total_iterations: usize,
    lbfgs_stop: Option<StopReason>,
    wall_ms: u64,
    config: &'a RunConfig,
}

fn schedule_from(cfg: &RunConfig) -> TrainSchedule {
    let plateau = match cfg.lr_schedule {
        LrSchedule::Plateau => PlateauConfig::default(),
        LrSchedule::Constant => PlateauConfig::off(),
    };
    TrainSchedule {
        adam_iters: cfg.adam.iters,
        adam_lr: cfg.adam.lr,
        plateau,
        lbfgs: LbfgsConfig {
            memory: cfg.lbfgs.memory,
            max_iters: cfg.lbfgs.max_iters,
            ..LbfgsConfig::default()
        },
        checkpoint_every: cfg.checkpoint_every,
        ..TrainSchedule::default()
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| rt_err(format!("writing {}: {e}", path.display())))
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String, RunError> {
    let mut s = serde_json::to_string_pretty(value).map_err(rt_err)?;
    s.push('\n');
    Ok(s)
}

/// Train one model per the config and write all artifacts into `out_dir`:
/// metrics.csv, model_final.json, metrics_summary.json (when the problem
/// has a reference solution), run_meta.json, and periodic checkpoints.
fn execute(
    problem: &ProblemSpec,
    cfg: &RunConfig,
    instrument: bool,
    out_dir: &Path,
) -> Result<ExecSummary, RunError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| rt_err(format!("creating {}: {e}", out_dir.display())))?;
    let start = Instant::now();
    let layout = NetworkLayout {
        main_hidden: cfg.network.main_hidden.clone(),
        subnet_hidden: cfg.network.subnet_hidden.clone(),
    };
    let schedule = schedule_from(cfg);
    let transient = problem.time_horizon.is_some();
    let mut csv = String::from(CSV_HEADER);

    let write_checkpoint = |it: usize, text: String| -> Result<(), TrainError> {
        let path = out_dir.join(format!("checkpoint_{it:06}.json"));
        std::fs::write(path, text).map_err(TrainError::Io)
    };

    let (trained, outcome) = match cfg.mode {
        Mode::Hard => {
            let opts = AnsatzOptions {
                beta_s: cfg.beta_s,
                beta_t: cfg.beta_t,
                ..AnsatzOptions::default()
            };
            let (ansatz, params) = assemble(problem, &layout, &opts, cfg.seed).map_err(cfg_err)?;
            let batch = sample_collocation(problem, cfg.n_f, cfg.seed)?;
            let cell = RefCell::new(params);
            let mut theta = cell.borrow().flatten();
            let outcome = train(
                |flat| {
                    let mut p = cell.borrow_mut();
                    p.assign_flat(flat);
                    hc_loss(&ansatz, &p, problem, &batch)
                },
                &mut theta,
                &schedule,
                |row| {
                    push_row(&mut csv, row);
                    Ok(())
                },
                |it, flat| {
                    if cfg.checkpoint_every == 0 {
                        return Ok(());
                    }
                    let mut p = cell.borrow_mut();
                    p.assign_flat(flat);
                    let text = serde_json::to_string_pretty(&*p)
                        .map_err(|e| TrainError::Invalid(e.to_string()))?;
                    write_checkpoint(it, text)
                },
            )?;
            let mut params = cell.into_inner();
            params.assign_flat(&theta);
            (Trained::Hard(ansatz, params), outcome)
        }
        Mode::Soft | Mode::SoftExtraFields => {
            let extra = cfg.mode.extra_fields();
            if !extra && problem.domain.dim() != 1 {
                return Err(RunError::Config(format!(
                    "mode=soft solves the second-order residual form, which is only \
                     available for one spatial dimension; {} has dim {} — use \
                     soft_extra_fields",
                    problem.name,
                    problem.domain.dim()
                )));
            }
            let n_i = cfg.n_i.unwrap_or(0);
            if transient && n_i == 0 {
                return Err(RunError::Config(format!(
                    "{} is transient; soft modes need n_i initial points",
                    problem.name
                )));
            }
            let n_b = cfg.n_b.unwrap_or(0);
            let (soft, params) =
                soft_assemble(problem, &layout, extra, cfg.seed).map_err(cfg_err)?;
            let batch = sample_soft_batch(problem, cfg.n_f, n_b, n_i, cfg.seed)?;
            let cell = RefCell::new(params);
            let mut theta = cell.borrow().flat.clone();
            let outcome = train(
                |flat| {
                    let mut p = cell.borrow_mut();
                    p.flat.copy_from_slice(flat);
                    soft_loss(&soft, &p, problem, &batch, instrument)
                },
                &mut theta,
                &schedule,
                |row| {
                    push_row(&mut csv, row);
                    Ok(())
                },
                |it, flat| {
                    if cfg.checkpoint_every == 0 {
                        return Ok(());
                    }
                    let mut p = cell.borrow_mut();
                    p.flat.copy_from_slice(flat);
                    let text = serde_json::to_string_pretty(&*p)
                        .map_err(|e| TrainError::Invalid(e.to_string()))?;
                    write_checkpoint(it, text)
                },
            )?;
            let mut params = cell.into_inner();
            params.flat.copy_from_slice(&theta);
            (Trained::Soft(soft, params), outcome)
        }
    };

    write_file(&out_dir.join("metrics.csv"), &csv)?;
    let model_json = match &trained {
        Trained::Hard(_, p) => to_pretty(p)?,
        Trained::Soft(_, p) => to_pretty(p)?,
    };
    write_file(&out_dir.join("model_final.json"), &model_json)?;

    let metrics = match &problem.truth {
        Some(truth) => {
            let points = problem
                .domain
                .sample_interior(cfg.n_test, cfg.seed.wrapping_add(TEST_SEED_OFFSET))
                .map_err(rt_err)?;
            let names = problem.field_names();
            let m = evaluate_metrics(
                |x, t| match &trained {
                    Trained::Hard(a, p) => a.predict(p, x, t),
                    Trained::Soft(s, p) => s.predict(p, x, t),
                },
                &TruthSource::Analytic(truth.clone()),
                &points,
                &names,
                problem.time_horizon,
            )
            .map_err(rt_err)?;
            write_file(&out_dir.join("metrics_summary.json"), &to_pretty(&m)?)?;
            Some(m)
        }
        None => None,
    };

    let n_params = match &trained {
        Trained::Hard(_, p) => p.n_params(),
        Trained::Soft(_, p) => p.flat.len(),
    };
    let meta = RunMeta {
        problem: &problem.name,
        mode: cfg.mode.as_str(),
        seed: cfg.seed,
        n_params,
        loss_groups: loss_group_count(problem, cfg.mode == Mode::Hard, cfg.mode.extra_fields()),
        final_loss: outcome.final_loss,
        total_iterations: outcome.total_iterations,
        lbfgs_stop: outcome.lbfgs.as_ref().map(|o| o.reason),
        wall_ms: start.elapsed().as_millis() as u64,
        config: cfg,
    };
    write_file(&out_dir.join("run_meta.json"), &to_pretty(&meta)?)?;

    Ok(ExecSummary {
        final_loss: outcome.final_loss,
        total_iterations: outcome.total_iterations,
        lbfgs_stop: outcome.lbfgs.map(|o| o.reason),
        metrics,
        instrumented: outcome.instrumented_series,
        n_params,
    })
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub final_loss: f64,
    pub total_iterations: usize,
    pub lbfgs_stop: Option<StopReason>,
    pub metrics: Option<Metrics>,
    pub n_params: usize,
}

/// Train per the config and write artifacts to the resolved output
/// directory.
pub fn run(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    config.validate()?;
    let problem = builtin(&config.problem).map_err(cfg_err)?;
    let out_dir = resolve_out_dir(config);
    let s = execute(&problem, config, false, &out_dir)?;
    Ok(RunArtifacts {
        out_dir,
        final_loss: s.final_loss,
        total_iterations: s.total_iterations,
        lbfgs_stop: s.lbfgs_stop,
        metrics: s.metrics,
        n_params: s.n_params,
    })
}

#[derive(Debug)]
pub struct AblateArtifacts {
    pub out_dir: PathBuf,
    /// Per-iteration ratio MovVar(plain arm) / MovVar(auxiliary arm) after
    /// both smoothing windows; first sample is iteration warmup+1.
    pub ratio: Vec<f64>,
    pub warmup: usize,
    pub share_above_one: f64,
    pub cv_no_extra: f64,
    pub cv_extra: f64,
}

#[derive(Serialize)]
struct AblateMeta {
    window: usize,
    warmup: usize,
    iterations: usize,
    share_above_one: f64,
    cv_no_extra: f64,
    cv_extra: f64,
    final_loss_no_extra: f64,
    final_loss_extra: f64,
}

/// Run the two ablation arms derived from one config (plain second-order
/// residuals vs auxiliary first-order system) and emit the gradient
/// moving-variance ratio series.
pub fn ablate(config: &RunConfig) -> Result<AblateArtifacts, RunError> {
    let mut plain = config.clone();
    plain.mode = Mode::Soft;
    let mut extra = config.clone();
    extra.mode = Mode::SoftExtraFields;
    ablate_pair(&plain, &extra)
}

/// Ablation over an explicit pair of configs. Both arms must agree on the
/// problem, seed, point counts and Adam iteration count. L-BFGS is
/// disabled and the learning rate is held constant: the instrumentation
/// compares gradient variance under plain fixed-rate Adam, and scheduler
/// drops would freeze a trajectory and crush its variance.
pub fn ablate_pair(
    plain_cfg: &RunConfig,
    extra_cfg: &RunConfig,
) -> Result<AblateArtifacts, RunError> {
    plain_cfg.validate()?;
    extra_cfg.validate()?;
    if plain_cfg.adam.iters != extra_cfg.adam.iters {
        return Err(RunError::Config(format!(
            "ablation arms must share the iteration count, got {} vs {}",
            plain_cfg.adam.iters, extra_cfg.adam.iters
        )));
    }
    if plain_cfg.seed != extra_cfg.seed {
        return Err(RunError::Config(format!(
            "ablation arms must share the seed, got {} vs {}",
            plain_cfg.seed, extra_cfg.seed
        )));
    }
    if plain_cfg.problem != extra_cfg.problem {
        return Err(RunError::Config(format!(
            "ablation arms must share the problem, got {} vs {}",
            plain_cfg.problem, extra_cfg.problem
        )));
    }
    if (plain_cfg.n_f, plain_cfg.n_b, plain_cfg.n_i)
        != (extra_cfg.n_f, extra_cfg.n_b, extra_cfg.n_i)
    {
        return Err(RunError::Config(
            "ablation arms must share n_f, n_b and n_i".into(),
        ));
    }
    let problem = builtin(&plain_cfg.problem).map_err(cfg_err)?;
    let out_dir = resolve_out_dir(plain_cfg);

    let mut a = plain_cfg.clone();
    a.lbfgs.max_iters = 0;
    a.lr_schedule = LrSchedule::Constant;
    let mut b = extra_cfg.clone();
    b.lbfgs.max_iters = 0;
    b.lr_schedule = LrSchedule::Constant;
    let arm_a = execute(&problem, &a, true, &out_dir.join("no_extra"))?;
    let arm_b = execute(&problem, &b, true, &out_dir.join("extra_fields"))?;

    let ratio = movvar_ratio(&arm_a.instrumented, &arm_b.instrumented, MOVVAR_WINDOW)?;
    let warmup = warmup_len(MOVVAR_WINDOW);
    let mut csv = String::from("iteration,ratio\n");
    for (k, r) in ratio.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", warmup + 1 + k, r);
    }
    write_file(&out_dir.join("ratio.csv"), &csv)?;

    let mut gcsv = String::from("iteration,mean_abs_grad_f_no_extra,mean_abs_grad_f_extra\n");
    for (k, (ga, gb)) in arm_a.instrumented.iter().zip(&arm_b.instrumented).enumerate() {
        let _ = writeln!(gcsv, "{},{},{}", k + 1, ga, gb);
    }
    write_file(&out_dir.join("grad_stats.csv"), &gcsv)?;

    let finite: Vec<f64> = ratio.iter().copied().filter(|r| r.is_finite()).collect();
    let share_above_one = if finite.is_empty() {
        0.0
    } else {
        finite.iter().filter(|r| **r > 1.0).count() as f64 / finite.len() as f64
    };
    let cv_no_extra = coefficient_of_variation(&arm_a.instrumented);
    let cv_extra = coefficient_of_variation(&arm_b.instrumented);
    let meta = AblateMeta {
        window: MOVVAR_WINDOW,
        warmup,
        iterations: plain_cfg.adam.iters,
        share_above_one,
        cv_no_extra,
        cv_extra,
        final_loss_no_extra: arm_a.final_loss,
        final_loss_extra: arm_b.final_loss,
    };
    write_file(&out_dir.join("ablate_meta.json"), &to_pretty(&meta)?)?;

    Ok(AblateArtifacts {
        out_dir,
        ratio,
        warmup,
        share_above_one,
        cv_no_extra,
        cv_extra,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepCell {
    pub beta_s: f64,
    pub beta_t: f64,
    pub mae: f64,
    pub mape: f64,
    pub wmape: f64,
    pub final_loss: f64,
}

#[derive(Debug)]
pub struct SweepArtifacts {
    pub out_dir: PathBuf,
    pub cells: Vec<SweepCell>,
}

/// Metrics slice that summarizes a run: the time average for transient
/// problems, the single steady slice otherwise.
fn summary_label(problem: &ProblemSpec) -> &'static str {
    if problem.time_horizon.is_some() {
        "average"
    } else {
        "steady"
    }
}

fn mean_over_fields(metrics: &Metrics, label: &str) -> Option<(f64, f64, f64)> {
    let mut n = 0.0;
    let (mut mae, mut mape, mut wmape) = (0.0, 0.0, 0.0);
    for f in &metrics.fields {
        let s = f.slices.iter().find(|s| s.label == label)?;
        mae += s.mae;
        mape += s.mape;
        wmape += s.wmape;
        n += 1.0;
    }
    if n == 0.0 {
        return None;
    }
    Some((mae / n, mape / n, wmape / n))
}

/// One full run per (β_s, β_t) grid cell, same seed everywhere, with a
/// summary table of the accuracy metrics per cell.
pub fn sweep(
    config: &RunConfig,
    beta_s_list: &[f64],
    beta_t_list: &[f64],
) -> Result<SweepArtifacts, RunError> {
    config.validate()?;
    if beta_s_list.is_empty() || beta_t_list.is_empty() {
        return Err(RunError::Config("sweep grid must be non-empty".into()));
    }
    if config.mode != Mode::Hard {
        return Err(RunError::Config(
            "the hardness parameters only enter the hard-constraint ansatz; set mode=hard"
                .into(),
        ));
    }
    if beta_s_list.iter().chain(beta_t_list).any(|b| !(*b > 0.0)) {
        return Err(RunError::Config("hardness parameters must be positive".into()));
    }
    let problem = builtin(&config.problem).map_err(cfg_err)?;
    if problem.truth.is_none() {
        return Err(RunError::Config(format!(
            "{} has no reference solution; the sweep table needs accuracy metrics",
            problem.name
        )));
    }
    let out_dir = resolve_out_dir(config);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| rt_err(format!("creating {}: {e}", out_dir.display())))?;
    let label = summary_label(&problem);

    let mut cells = Vec::with_capacity(beta_s_list.len() * beta_t_list.len());
    let mut csv = String::from("beta_s,beta_t,mae,mape,wmape,final_loss\n");
    for &bs in beta_s_list {
        for &bt in beta_t_list {
            let mut cfg = config.clone();
            cfg.beta_s = bs;
            cfg.beta_t = bt;
            let cell_dir = out_dir.join(format!("beta_s_{bs}_beta_t_{bt}"));
            let s = execute(&problem, &cfg, false, &cell_dir)?;
            let metrics = s
                .metrics
                .as_ref()
                .expect("problem has a reference solution");
            let (mae, mape, wmape) = mean_over_fields(metrics, label)
                .ok_or_else(|| rt_err(format!("summary slice {label} missing")))?;
            let _ = writeln!(csv, "{bs},{bt},{mae},{mape},{wmape},{}", s.final_loss);
            cells.push(SweepCell { beta_s: bs, beta_t: bt, mae, mape, wmape, final_loss: s.final_loss });
        }
    }
    write_file(&out_dir.join("sweep.csv"), &csv)?;
    Ok(SweepArtifacts { out_dir, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(problem: &str, mode: &str, out: &Path) -> RunConfig {
        let json = format!(
            r#"{{
                "problem": "{problem}",
                "mode": "{mode}",
                "network": {{"main_hidden": [8], "subnet_hidden": [4]}},
                "n_f": 8,
                {}
                "adam": {{"iters": 12, "lr": 0.002}},
                "seed": 3,
                "n_test": 16,
                "out_dir": "{}"
            }}"#,
            if mode == "hard" { "" } else { "\"n_b\": 3, \"n_i\": 4," },
            out.display()
        );
        RunConfig::from_json(&json).unwrap()
    }

    #[test]
    fn run_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg("poisson1d", "hard", dir.path());
        let art = run(&cfg).unwrap();
        assert_eq!(art.total_iterations, 12);
        assert!(art.final_loss.is_finite());

        let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 13, "header plus one row per iteration");
        assert_eq!(lines[0], "iteration,lr,total,pde,equilibrium,bc,ic,mean_abs_grad,movvar");
        assert!(lines[1].starts_with("1,0.002,"));

        let model = std::fs::read_to_string(dir.path().join("model_final.json")).unwrap();
        let parsed: ModelParams = serde_json::from_str(&model).unwrap();
        assert_eq!(parsed.n_params(), art.n_params);

        let summary = std::fs::read_to_string(dir.path().join("metrics_summary.json")).unwrap();
        let m: Metrics = serde_json::from_str(&summary).unwrap();
        assert!(m.get("u", "steady").is_some());

        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_meta.json")).unwrap())
                .unwrap();
        assert_eq!(meta["loss_groups"], 2);
        assert_eq!(meta["mode"], "hard");
        assert!(meta["wall_ms"].is_u64());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run(&tiny_cfg("poisson1d", "hard", d1.path())).unwrap();
        run(&tiny_cfg("poisson1d", "hard", d2.path())).unwrap();
        for name in ["metrics.csv", "model_final.json", "metrics_summary.json"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn soft_modes_run_and_record_bc_terms() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg("poisson1d", "soft_extra_fields", dir.path());
        let art = run(&cfg).unwrap();
        assert!(art.final_loss.is_finite());
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_meta.json")).unwrap())
                .unwrap();
        assert_eq!(meta["loss_groups"], 3);

        let dir2 = tempfile::tempdir().unwrap();
        let cfg2 = tiny_cfg("poisson1d", "soft", dir2.path());
        run(&cfg2).unwrap();
    }

    #[test]
    fn config_errors_get_exit_code_one() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg("poisson1d", "hard", dir.path());
        cfg.problem = "no_such_problem".into();
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);

        // second-order path is one-dimensional only
        let mut cfg = tiny_cfg("robin_annulus", "soft", dir.path());
        cfg.n_i = None;
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("soft_extra_fields"), "{err}");

        // transient soft runs need initial points
        let mut cfg = tiny_cfg("schrodinger", "soft_extra_fields", dir.path());
        cfg.n_i = None;
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("n_i"), "{err}");
    }

    #[test]
    fn checkpoints_follow_the_cadence() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg("poisson1d", "hard", dir.path());
        cfg.checkpoint_every = 5;
        run(&cfg).unwrap();
        assert!(dir.path().join("checkpoint_000005.json").exists());
        assert!(dir.path().join("checkpoint_000010.json").exists());
        assert!(dir.path().join("checkpoint_000012.json").exists());
        assert!(!dir.path().join("checkpoint_000003.json").exists());
    }

    #[test]
    fn ablate_pair_rejects_mismatches() {
        let dir = tempfile::tempdir().unwrap();
        let a = tiny_cfg("poisson1d", "soft", dir.path());
        let mut b = tiny_cfg("poisson1d", "soft_extra_fields", dir.path());
        b.adam.iters = 99;
        let err = ablate_pair(&a, &b).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("iteration count"), "{err}");

        let mut c = tiny_cfg("poisson1d", "soft_extra_fields", dir.path());
        c.seed = 4;
        let err = ablate_pair(&a, &c).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn identical_ablation_arms_give_unit_ratio() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg("poisson1d", "soft", dir.path());
        cfg.adam.iters = warmup_len(MOVVAR_WINDOW) + 6;
        let art = ablate_pair(&cfg, &cfg).unwrap();
        assert_eq!(art.ratio.len(), 6);
        assert!(art.ratio.iter().all(|r| *r == 1.0), "{:?}", art.ratio);
        assert_eq!(art.share_above_one, 0.0);
        let csv = std::fs::read_to_string(dir.path().join("ratio.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iteration,ratio"));
        assert!(lines.next().unwrap().starts_with("999,"));
    }

    #[test]
    fn sweep_single_cell_matches_a_plain_run() {
        let sweep_dir = tempfile::tempdir().unwrap();
        let run_dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg("poisson1d", "hard", sweep_dir.path());
        let art = sweep(&cfg, &[5.0], &[10.0]).unwrap();
        assert_eq!(art.cells.len(), 1);

        let plain = tiny_cfg("poisson1d", "hard", run_dir.path());
        let plain_art = run(&plain).unwrap();
        let m = plain_art.metrics.unwrap();
        let s = m.get("u", "steady").unwrap();
        assert_eq!(art.cells[0].mae, s.mae);
        assert_eq!(art.cells[0].final_loss, plain_art.final_loss);

        let csv = std::fs::read_to_string(sweep_dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn sweep_grid_shape_and_guards() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg("poisson1d", "hard", dir.path());
        let art = sweep(&cfg, &[1.0, 5.0], &[2.0, 10.0, 20.0]).unwrap();
        assert_eq!(art.cells.len(), 6);
        let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 7);

        assert_eq!(sweep(&cfg, &[], &[10.0]).unwrap_err().exit_code(), 1);
        let soft = tiny_cfg("poisson1d", "soft", dir.path());
        assert!(matches!(sweep(&soft, &[5.0], &[10.0]), Err(RunError::Config(_))));
        let battery = tiny_cfg("battery_pack", "hard", dir.path());
        let err = sweep(&battery, &[5.0], &[10.0]).unwrap_err();
        assert!(err.to_string().contains("reference solution"), "{err}");
    }

    #[test]
    fn out_dir_resolution_order() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg("poisson1d", "hard", dir.path());
        assert_eq!(resolve_out_dir_with(&cfg, None), dir.path());
        assert_eq!(resolve_out_dir_with(&cfg, Some("elsewhere")), PathBuf::from("elsewhere"));
        assert_eq!(resolve_out_dir_with(&cfg, Some("")), dir.path());
        let mut bare = cfg;
        bare.out_dir = None;
        assert_eq!(resolve_out_dir_with(&bare, None), PathBuf::from("hardpinn_out"));
    }
}
