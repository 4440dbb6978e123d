//! Acceptance gate: ten numbered end-to-end criteria covering the analytic
//! boundary machinery, gradient correctness, trained-model accuracy, the
//! stability instrumentation, and byte-level determinism. Each test prints
//! exactly one `criterion N: PASS/FAIL` line. The four expensive trained
//! runs are executed twice through shared statics so the determinism
//! criterion reuses their artifacts instead of training a third time.

use std::path::Path;
use std::sync::LazyLock;

use hardpinn::ansatz::{assemble, AnsatzOptions, ModelParams, NetworkLayout};
use hardpinn::autodiff::{Dual, Tape};
use hardpinn::boundary::{general_solution, householder_basis, normalize, BoundaryCondition, ParamFn};
use hardpinn::config::RunConfig;
use hardpinn::network::{MlpParams, MlpSpec, TapeNet};
use hardpinn::problems::{self, ProblemSpec};
use hardpinn::run::{ablate, run, AblateArtifacts, RunArtifacts, OUT_DIR_ENV};
use hardpinn::training::{hc_loss, sample_collocation};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn report(n: usize, pass: bool, detail: &str) {
    println!("criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> =
            (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------- trained runs

struct RunPair {
    first: TempDir,
    second: TempDir,
    art: RunArtifacts,
}

fn run_into(json: &str, dir: &Path) -> RunArtifacts {
    std::env::remove_var(OUT_DIR_ENV);
    let mut cfg = RunConfig::from_json(json).expect("valid acceptance config");
    cfg.out_dir = Some(dir.to_string_lossy().into_owned());
    run(&cfg).expect("acceptance run")
}

fn run_twice(json: &str) -> RunPair {
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    let art = run_into(json, first.path());
    run_into(json, second.path());
    RunPair { first, second, art }
}

fn identical(a: &Path, b: &Path, rel: &str) -> bool {
    std::fs::read(a.join(rel)).unwrap() == std::fs::read(b.join(rel)).unwrap()
}

static POISSON: LazyLock<RunPair> = LazyLock::new(|| {
    run_twice(
        r#"{"problem":"poisson1d","mode":"hard","n_f":128,
            "adam":{"iters":10000,"lr":0.001},"seed":0,"n_test":512}"#,
    )
});

static HEAT: LazyLock<RunPair> = LazyLock::new(|| {
    run_twice(
        r#"{"problem":"highdim_heat(5)","mode":"hard",
            "network":{"main_hidden":[64,64],"subnet_hidden":[20,20]},
            "n_f":500,"adam":{"iters":3000,"lr":0.01},
            "lbfgs":{"max_iters":500,"memory":50},"seed":0,"n_test":512}"#,
    )
});

static ANNULUS: LazyLock<RunPair> = LazyLock::new(|| {
    run_twice(
        r#"{"problem":"robin_annulus","mode":"hard","n_f":256,"beta_s":5.0,
            "adam":{"iters":5000,"lr":0.001},
            "lbfgs":{"max_iters":200,"memory":50},"seed":0,"n_test":512}"#,
    )
});

struct AblatePair {
    first: TempDir,
    second: TempDir,
    art: AblateArtifacts,
}

static ABLATION: LazyLock<AblatePair> = LazyLock::new(|| {
    let json = r#"{"problem":"poisson1d","mode":"soft","n_f":128,"n_b":2,
                   "adam":{"iters":10000,"lr":0.001},"seed":0}"#;
    let ablate_into = |dir: &Path| {
        std::env::remove_var(OUT_DIR_ENV);
        let mut cfg = RunConfig::from_json(json).expect("valid ablation config");
        cfg.out_dir = Some(dir.to_string_lossy().into_owned());
        ablate(&cfg).expect("acceptance ablation")
    };
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    let art = ablate_into(first.path());
    ablate_into(second.path());
    AblatePair { first, second, art }
});

// -------------------------------------------------------------------- criteria

#[test]
fn criterion_01_boundary_projectors_have_rank_d() {
    let mut worst_pn = 0.0f64;
    let mut worst_idem = 0.0f64;
    let mut worst_eig = 0.0f64;
    for &d in &[1usize, 2, 3, 10] {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001 + d as u64);
        for _ in 0..10_000 {
            let n_tilde = unit_vector(&mut rng, d + 1);
            let b = householder_basis(&n_tilde).unwrap();
            let pn: Vec<f64> = b.iter().map(|row| dot(row, &n_tilde)).collect();
            worst_pn = worst_pn.max(dot(&pn, &pn).sqrt());
            for i in 0..=d {
                for j in 0..=d {
                    let mut s = 0.0;
                    for k in 0..=d {
                        s += b[i][k] * b[k][j];
                    }
                    worst_idem = worst_idem.max((s - b[i][j]).abs());
                }
            }
            let m = nalgebra::DMatrix::from_fn(d + 1, d + 1, |i, j| b[i][j]);
            let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
            worst_eig = worst_eig.max(eig[0].abs());
            for lam in &eig[1..] {
                worst_eig = worst_eig.max((lam - 1.0).abs());
            }
        }
    }
    report(
        1,
        worst_pn <= 1e-12 && worst_idem <= 1e-12 && worst_eig <= 1e-10,
        &format!(
            "over 10^4 normals x d in {{1,2,3,10}}: max |Bn| {worst_pn:.2e}, \
             max |B^2-B| {worst_idem:.2e}, max eigenvalue deviation from {{1 x d, 0}} {worst_eig:.2e}"
        ),
    );
}

#[test]
fn criterion_02_general_solutions_satisfy_their_conditions() {
    let annulus = problems::robin_annulus();
    let battery = problems::battery_pack();
    let battery_robin = battery
        .bcs
        .iter()
        .find(|d| d.bc.region == "cell_00")
        .map(|d| d.bc.clone())
        .unwrap();

    // (label, condition, domain to sample, zero normal for b == 0, time-dependent)
    let cases: Vec<(&str, BoundaryCondition, &ProblemSpec, bool, bool)> = vec![
        ("dirichlet", BoundaryCondition::dirichlet("inner", 0, ParamFn::Const(1.7)), &annulus, true, false),
        ("neumann", BoundaryCondition::neumann("outer", 0, ParamFn::Const(-0.6)), &annulus, false, false),
        ("battery robin", battery_robin, &battery, false, true),
    ];

    let mut worst = 0.0f64;
    for (ci, (_, bc, problem, zero_normal, timed)) in cases.iter().enumerate() {
        let (pts, normals) =
            problem.domain.sample_region_boundary(&bc.region, 1000, 0xACCE_0002 + ci as u64).unwrap();
        let mut trng = ChaCha8Rng::seed_from_u64(0x7100 + ci as u64);
        let dim = problem.domain.dim();
        let width = dim + 1;
        let in_w = dim + usize::from(*timed);
        for param_seed in 0..10u64 {
            let spec = MlpSpec::tanh(vec![in_w, 20, 20, width]);
            let params = MlpParams::init(spec, 0xBC00 + 17 * ci as u64 + param_seed).unwrap();
            let tape = Tape::new();
            let net = TapeNet::bind(&tape, &params, false);
            for (p, n) in pts.iter().zip(&normals) {
                let normal: Vec<f64> =
                    if *zero_normal { vec![0.0; dim] } else { n.clone() };
                let mut xt = p.clone();
                if *timed {
                    xt.push(1.0 - trng.gen::<f64>());
                }
                let xt_d: Vec<Dual<'_>> =
                    xt.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
                let normal_d: Vec<Dual<'_>> =
                    normal.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
                let w = net.forward(&xt_d).unwrap();
                let ptilde = general_solution(bc, &normal_d, &w, &xt_d).unwrap();
                let (n_tilde, g_tilde) = normalize(bc, &xt, &normal).unwrap();
                let vals: Vec<f64> = ptilde.iter().map(|v| v.value()).collect();
                worst = worst.max((dot(&n_tilde, &vals) - g_tilde).abs());
            }
        }
    }
    report(
        2,
        worst <= 1e-10,
        &format!("max |n.p - g| {worst:.2e} over 10^3 points x 10 parameterizations x 3 condition kinds"),
    );
}

#[test]
fn criterion_03_initial_conditions_are_exact_at_t_zero() {
    let layout = NetworkLayout { main_hidden: vec![12, 12], subnet_hidden: vec![8, 8] };
    let cases: Vec<(ProblemSpec, u64, usize)> = vec![
        (problems::schrodinger(), 10, 50),
        (problems::highdim_heat(5).unwrap(), 10, 50),
        (problems::battery_pack(), 2, 50),
    ];
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for (problem, n_seeds, n_pts) in &cases {
        for seed in 0..*n_seeds {
            let (ansatz, params) =
                assemble(problem, &layout, &AnsatzOptions::default(), 0xACCE_0003 + seed).unwrap();
            let pts = problem.domain.sample_interior(*n_pts, 31 + seed).unwrap();
            for x in &pts {
                let u = ansatz.predict(&params, x, Some(0.0)).unwrap();
                for (j, ic) in problem.ics.iter().enumerate() {
                    worst = worst.max((u[j] - ic.eval(x)).abs());
                }
                pairs += 1;
            }
        }
    }
    report(
        3,
        worst <= 1e-12 && pairs >= 1000,
        &format!("max |u(x,0) - f(x)| {worst:.2e} over {pairs} random (x, theta) draws"),
    );
}

#[test]
fn criterion_04_battery_residuals_shrink_with_hardness() {
    let problem = problems::battery_pack();
    let layout = NetworkLayout { main_hidden: vec![16, 16], subnet_hidden: vec![8, 8] };
    let regions: Vec<String> = problem.bcs.iter().map(|d| d.bc.region.clone()).collect();
    // beta_t large enough that the initial-condition blend cannot mask the
    // spatial cross-talk even at beta_s = 10.
    let mut maxima = Vec::new();
    for beta_s in [1.0, 2.0, 5.0, 10.0] {
        let opts = AnsatzOptions { beta_s, beta_t: 30.0, ..AnsatzOptions::default() };
        let (a, params) = assemble(&problem, &layout, &opts, 99).unwrap();
        let mut worst = 0.0f64;
        for (ri, region) in regions.iter().enumerate() {
            let (pts, _) =
                problem.domain.sample_region_boundary(region, 12, 5000 + ri as u64).unwrap();
            for p in &pts {
                let tape = Tape::new();
                let bound = a.bind(&tape, &params, false).unwrap();
                let xd: Vec<Dual<'_>> =
                    p.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
                let td = Dual::constant(&tape, 0.5, 0);
                let r = bound.boundary_residual(0, region, &xd, Some(&td)).unwrap();
                worst = worst.max(r.value().abs());
            }
        }
        maxima.push(worst);
    }
    let strictly_decreasing = maxima.windows(2).all(|w| w[1] < w[0]);
    report(
        4,
        strictly_decreasing,
        &format!(
            "max residual over 18 regions at beta_s {{1,2,5,10}}: {:.3e}, {:.3e}, {:.3e}, {:.3e}",
            maxima[0], maxima[1], maxima[2], maxima[3]
        ),
    );
}

#[test]
fn criterion_05_loss_gradients_match_finite_differences() {
    let layout = NetworkLayout { main_hidden: vec![12, 12], subnet_hidden: vec![8, 8] };
    let cases = [
        ("poisson1d", problems::poisson1d()),
        ("robin_annulus", problems::robin_annulus()),
        ("schrodinger", problems::schrodinger()),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, problem) in &cases {
        let (ansatz, mut params) =
            assemble(problem, &layout, &AnsatzOptions::default(), 17).unwrap();
        let batch = sample_collocation(problem, 24, 40).unwrap();
        let theta0 = params.flatten();
        let lg = hc_loss(&ansatz, &params, problem, &batch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0005);
        let idx: Vec<usize> = (0..20).map(|_| rng.gen_range(0..theta0.len())).collect();
        let mut num = 0.0f64;
        let mut den_fd = 0.0f64;
        let mut den_ad = 0.0f64;
        for &i in &idx {
            let h = 1e-6 * theta0[i].abs().max(1.0);
            let mut t = theta0.clone();
            t[i] = theta0[i] + h;
            params.assign_flat(&t);
            let fp = hc_loss(&ansatz, &params, problem, &batch).unwrap().breakdown.total;
            t[i] = theta0[i] - h;
            params.assign_flat(&t);
            let fm = hc_loss(&ansatz, &params, problem, &batch).unwrap().breakdown.total;
            let fd = (fp - fm) / (2.0 * h);
            num += (fd - lg.grad[i]).powi(2);
            den_fd += fd * fd;
            den_ad += lg.grad[i].powi(2);
        }
        let rel = num.sqrt() / den_fd.sqrt().max(den_ad.sqrt()).max(1e-300);
        pass &= rel <= 1e-5;
        details.push(format!("{name} {rel:.2e}"));
    }
    report(
        5,
        pass,
        &format!("relative gradient error over 20 parameters each: {}", details.join(", ")),
    );
}

#[test]
fn criterion_06_poisson_hard_constraint_converges() {
    let m = POISSON.art.metrics.as_ref().unwrap().get("u", "steady").unwrap().clone();
    report(6, m.mae <= 1e-2, &format!("MAE {:.3e} vs sin(2x) on 512 test points (bound 1e-2)", m.mae));
}

#[test]
fn criterion_07_heat_d5_hits_one_percent_mape() {
    let m = HEAT.art.metrics.as_ref().unwrap().get("u", "average").unwrap().clone();
    report(
        7,
        m.mape <= 0.01,
        &format!("average MAPE {:.4}% at d=5 after Adam+L-BFGS (bound 1.00%)", 100.0 * m.mape),
    );
}

/// Full-scale counterpart of criterion 7: the published d=10 protocol
/// (N_f=1000, 5000 Adam at lr 0.01, then L-BFGS), passing when the average
/// MAPE lands within 5x of the reported 0.10%.
#[test]
#[ignore = "takes on the order of an hour"]
fn criterion_07_full_scale_heat_d10() {
    let dir = TempDir::new().unwrap();
    let art = run_into(
        r#"{"problem":"highdim_heat(10)","mode":"hard",
            "network":{"main_hidden":[50,50,50,50],"subnet_hidden":[20,20,20]},
            "n_f":1000,"adam":{"iters":5000,"lr":0.01},
            "lbfgs":{"max_iters":2000,"memory":50},"seed":0,"n_test":10000}"#,
        dir.path(),
    );
    let m = art.metrics.as_ref().unwrap().get("u", "average").unwrap().clone();
    report(
        7,
        m.mape <= 5.0 * 0.0010,
        &format!("full-scale d=10 average MAPE {:.4}% (bound 0.50%)", 100.0 * m.mape),
    );
}

#[test]
fn criterion_08_extra_fields_stabilize_the_gradient() {
    let a = &ABLATION.art;
    report(
        8,
        a.share_above_one >= 0.6,
        &format!(
            "{:.1}% of {} post-warmup MovVar-ratio samples above 1 (bound 60%)",
            100.0 * a.share_above_one,
            a.ratio.len()
        ),
    );
}

#[test]
fn criterion_09_annulus_accuracy_and_residual_bound() {
    let art = &ANNULUS.art;
    let m = art.metrics.as_ref().unwrap().get("u", "steady").unwrap().clone();

    // Rebuild the identical ansatz and reload the trained weights, then bound
    // every boundary residual by the damped observed cross-talk.
    let text = std::fs::read_to_string(ANNULUS.first.path().join("model_final.json")).unwrap();
    let params: ModelParams = serde_json::from_str(&text).unwrap();
    let problem = problems::robin_annulus();
    let opts = AnsatzOptions { beta_s: 5.0, ..AnsatzOptions::default() };
    let (ansatz, _) = assemble(&problem, &NetworkLayout::default(), &opts, 0).unwrap();
    let damping = (-5.0f64).exp();

    let mut violations = 0usize;
    let mut region_stats = Vec::new();
    for region in ["inner", "outer"] {
        let (pts, _) = problem.domain.sample_region_boundary(region, 200, 0xC9).unwrap();
        let mut max_resid = 0.0f64;
        let mut max_leak = 0.0f64;
        for p in &pts {
            let tape = Tape::new();
            let bound = ansatz.bind(&tape, &params, false).unwrap();
            let xd: Vec<Dual<'_>> = p.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
            let r = bound.boundary_residual(0, region, &xd, None).unwrap().value().abs();
            let s = bound.boundary_leakage(0, region, &xd, None).unwrap();
            if r > damping * s + 1e-6 {
                violations += 1;
            }
            max_resid = max_resid.max(r);
            max_leak = max_leak.max(s);
        }
        region_stats.push(format!(
            "{region}: max residual {max_resid:.3e} vs e^-5 * {max_leak:.3e} + 1e-6 = {:.3e}",
            damping * max_leak + 1e-6
        ));
    }
    report(
        9,
        m.mae <= 5e-2 && violations == 0,
        &format!("MAE {:.3e} (bound 5e-2); {}; {violations} pointwise violations", m.mae, region_stats.join("; ")),
    );
}

#[test]
fn criterion_10_reruns_are_byte_identical() {
    let run_files = ["metrics.csv", "metrics_summary.json", "model_final.json"];
    let mut diffs = Vec::new();
    for (label, pair) in
        [("poisson", &*POISSON), ("heat", &*HEAT), ("annulus", &*ANNULUS)]
    {
        for f in run_files {
            if !identical(pair.first.path(), pair.second.path(), f) {
                diffs.push(format!("{label}/{f}"));
            }
        }
    }
    let ab = &*ABLATION;
    for f in [
        "ratio.csv",
        "ablate_meta.json",
        "no_extra/metrics.csv",
        "no_extra/metrics_summary.json",
        "no_extra/model_final.json",
        "extra_fields/metrics.csv",
        "extra_fields/metrics_summary.json",
        "extra_fields/model_final.json",
    ] {
        if !identical(ab.first.path(), ab.second.path(), f) {
            diffs.push(format!("ablation/{f}"));
        }
    }
    report(
        10,
        diffs.is_empty(),
        &if diffs.is_empty() {
            "all metric and model files byte-identical across same-seed reruns of criteria 6-9".to_string()
        } else {
            format!("files differing across reruns: {}", diffs.join(", "))
        },
    );
}
