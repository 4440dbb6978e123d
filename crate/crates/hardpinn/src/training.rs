//! Loss assembly, optimizers, and gradient-stability instrumentation.
//!
//! The hard-constraint loss contains exactly two groups: mean-square PDE
//! residuals and the equilibrium penalty tying each auxiliary gradient to
//! the actual input derivatives of its field. The soft loss adds boundary
//! and initial penalties over separately sampled point sets. Gradients are
//! exact: every collocation point contributes one reverse sweep over its
//! own sub-graph, accumulated into shared parameter adjoints, so memory
//! stays bounded by the largest single-point graph.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{
    AnsatzError, HardConstraintAnsatz, ModelParams, ResidualCtx, SecondOrderCtx, SoftAnsatz,
};
use crate::autodiff::{AdError, Dual, Tape};
use crate::geometry::GeometryError;
use crate::network::MlpParams;
use crate::problems::{ProblemError, ProblemSpec};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { iteration: usize, what: String },
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("series lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pde: f64,
    pub equilibrium: f64,
    pub bc: f64,
    pub ic: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn new(pde: f64, equilibrium: f64, bc: f64, ic: f64) -> LossBreakdown {
        LossBreakdown { pde, equilibrium, bc, ic, total: pde + equilibrium + bc + ic }
    }
}

/// Loss value plus its parameter gradient; `pde_grad` carries the gradient
/// of the PDE-system part alone when requested (the quantity whose moving
/// variance the stability instrumentation tracks).
pub struct LossGrad {
    pub breakdown: LossBreakdown,
    pub grad: Vec<f64>,
    pub pde_grad: Option<Vec<f64>>,
}

/// Number of additive groups in the training loss for a given setup.
pub fn loss_group_count(problem: &ProblemSpec, hard: bool, extra_fields: bool) -> usize {
    if hard {
        return 2;
    }
    let ic_groups = if problem.time_horizon.is_some() { problem.fields.len() } else { 0 };
    1 + usize::from(extra_fields) + problem.bcs.len() + ic_groups
}

/// Interior collocation points, with one time sample per point for
/// transient problems.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub points: Vec<Vec<f64>>,
    pub times: Option<Vec<f64>>,
}

pub fn sample_collocation(
    problem: &ProblemSpec,
    n: usize,
    seed: u64,
) -> Result<Collocation, TrainError> {
    if n == 0 {
        return Err(TrainError::Invalid("need at least one collocation point".into()));
    }
    let points = problem.domain.sample_interior(n, seed)?;
    let times = problem.time_horizon.map(|th| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x7137));
        (0..n).map(|_| th * (1.0 - rng.gen::<f64>())).collect()
    });
    Ok(Collocation { points, times })
}

/// Sampled boundary points for one boundary condition of the problem.
#[derive(Debug, Clone)]
pub struct BoundaryBatch {
    pub bc_index: usize,
    pub points: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
    pub times: Option<Vec<f64>>,
}

/// Point sets for the soft-constraint loss: interior, per-condition
/// boundary, and initial-time samples.
#[derive(Debug, Clone)]
pub struct SoftBatch {
    pub interior: Collocation,
    pub boundary: Vec<BoundaryBatch>,
    pub initial: Vec<Vec<f64>>,
}

pub fn sample_soft_batch(
    problem: &ProblemSpec,
    n_f: usize,
    n_b: usize,
    n_i: usize,
    seed: u64,
) -> Result<SoftBatch, TrainError> {
    if n_b == 0 {
        return Err(TrainError::Invalid("soft training needs boundary points".into()));
    }
    let transient = problem.time_horizon.is_some();
    if transient && n_i == 0 {
        return Err(TrainError::Invalid(
            "transient soft training needs initial points".into(),
        ));
    }
    let interior = sample_collocation(problem, n_f, seed)?;
    let mut boundary = Vec::with_capacity(problem.bcs.len());
    for (i, def) in problem.bcs.iter().enumerate() {
        let s = seed.wrapping_add(1000 + 2 * i as u64);
        let (points, normals) = problem.domain.sample_region_boundary(&def.bc.region, n_b, s)?;
        let times = problem.time_horizon.map(|th| {
            let mut rng = ChaCha8Rng::seed_from_u64(s.wrapping_add(1));
            (0..n_b).map(|_| th * (1.0 - rng.gen::<f64>())).collect()
        });
        boundary.push(BoundaryBatch { bc_index: i, points, normals, times });
    }
    let initial = if transient {
        problem.domain.sample_interior(n_i, seed.wrapping_add(7777))?
    } else {
        Vec::new()
    };
    Ok(SoftBatch { interior, boundary, initial })
}

fn is_zero(b: &crate::boundary::ParamFn) -> bool {
    matches!(b, crate::boundary::ParamFn::Const(v) if *v == 0.0)
}

fn append_time(x: &[f64], t: Option<f64>) -> Vec<f64> {
    let mut xt = x.to_vec();
    if let Some(tv) = t {
        xt.push(tv);
    }
    xt
}

/// Hard-constraint loss and gradient over a collocation batch: mean over
/// points of squared PDE residuals plus the equilibrium penalty
/// ‖p̂_j − ∇û_j‖², nothing else.
pub fn hc_loss(
    ansatz: &HardConstraintAnsatz,
    params: &ModelParams,
    problem: &ProblemSpec,
    batch: &Collocation,
) -> Result<LossGrad, TrainError> {
    let n = batch.points.len();
    if n == 0 {
        return Err(TrainError::Invalid("empty collocation batch".into()));
    }
    let dim = ansatz.dim();
    let nd = dim + usize::from(ansatz.time_horizon().is_some());
    let tape = Tape::new();
    let bound = ansatz.bind(&tape, params, true)?;
    let mark = tape.mark();
    let mut adj: Vec<f64> = Vec::new();
    let inv = 1.0 / n as f64;
    let mut pde_sum = 0.0;
    let mut eq_sum = 0.0;
    for (i, x) in batch.points.iter().enumerate() {
        let xd: Vec<Dual<'_>> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| Dual::input(&tape, v, k, nd))
            .collect();
        let t = batch.times.as_ref().map(|ts| ts[i]);
        let td = t.map(|tv| Dual::input(&tape, tv, dim, nd));
        let fields = bound.evaluate(&xd, td.as_ref())?;
        let ctx = ResidualCtx { fields: &fields, x, t, dim, tape: &tape };
        let mut pde = tape.constant(0.0);
        for r in problem.residuals.eval(&ctx) {
            pde = pde + r.square();
        }
        let mut eq = tape.constant(0.0);
        for fe in &fields {
            for (k, pk) in fe.p.iter().enumerate() {
                eq = eq + (pk.var() - fe.u.tangent(k)).square();
            }
        }
        pde_sum += pde.value();
        eq_sum += eq.value();
        let root = pde + eq;
        tape.finalize();
        tape.sweep_accumulate(root, inv, &mut adj, mark)?;
        tape.reset_to(mark);
    }
    let mut grad = Vec::new();
    tape.param_adjoints(&adj, &mut grad);
    Ok(LossGrad {
        breakdown: LossBreakdown::new(pde_sum * inv, eq_sum * inv, 0.0, 0.0),
        grad,
        pde_grad: None,
    })
}

/// Soft-constraint loss: PDE residuals (plus equilibrium when the ansatz
/// carries auxiliary fields) on interior points, squared raw boundary
/// residuals a·û + b·n·∇û − g per condition, and squared initial mismatch,
/// all with unit weights. Without auxiliary fields the PDE term uses each
/// residual set's second-order form.
pub fn soft_loss(
    soft: &SoftAnsatz,
    params: &MlpParams,
    problem: &ProblemSpec,
    batch: &SoftBatch,
    want_pde_grad: bool,
) -> Result<LossGrad, TrainError> {
    let n = batch.interior.points.len();
    if n == 0 {
        return Err(TrainError::Invalid("empty collocation batch".into()));
    }
    let extra = soft.extra_fields();
    let dim = soft.dim();
    let transient = problem.time_horizon.is_some();
    let nd = dim + usize::from(transient);
    let tape = Tape::new();
    let bound = soft.bind(&tape, params, true)?;
    let mark = tape.mark();
    let mut adj: Vec<f64> = Vec::new();
    let mut adj_pde: Vec<f64> = Vec::new();
    let mut pde_sum = 0.0;
    let mut eq_sum = 0.0;

    let inv = 1.0 / n as f64;
    for (i, x) in batch.interior.points.iter().enumerate() {
        let t = batch.interior.times.as_ref().map(|ts| ts[i]);
        let root = if extra {
            let xd: Vec<Dual<'_>> = x
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual::input(&tape, v, k, nd))
                .collect();
            let td = t.map(|tv| Dual::input(&tape, tv, dim, nd));
            let fields = bound.evaluate(&xd, td.as_ref())?;
            let ctx = ResidualCtx { fields: &fields, x, t, dim, tape: &tape };
            let mut pde = tape.constant(0.0);
            for r in problem.residuals.eval(&ctx) {
                pde = pde + r.square();
            }
            let mut eq = tape.constant(0.0);
            for fe in &fields {
                for (k, pk) in fe.p.iter().enumerate() {
                    eq = eq + (pk.var() - fe.u.tangent(k)).square();
                }
            }
            pde_sum += pde.value();
            eq_sum += eq.value();
            pde + eq
        } else {
            let jets = bound.evaluate_jet2(x[0], t)?;
            let ctx = SecondOrderCtx { fields: &jets, x, t, tape: &tape };
            let rs = problem.residuals.eval_second_order(&ctx).ok_or_else(|| {
                TrainError::Invalid(format!(
                    "{} has no second-order residual form; it needs the auxiliary fields",
                    problem.name
                ))
            })?;
            let mut pde = tape.constant(0.0);
            for r in rs {
                pde = pde + r.square();
            }
            pde_sum += pde.value();
            pde
        };
        tape.finalize();
        tape.sweep_accumulate(root, inv, &mut adj, mark)?;
        if want_pde_grad {
            tape.sweep_accumulate(root, inv, &mut adj_pde, mark)?;
        }
        tape.reset_to(mark);
    }

    let mut bc_sum = 0.0;
    for bb in &batch.boundary {
        let def = &problem.bcs[bb.bc_index];
        let m = bb.points.len();
        let inv_b = 1.0 / m as f64;
        for (i, x) in bb.points.iter().enumerate() {
            let t = bb.times.as_ref().map(|ts| ts[i]);
            let xt_plain = append_time(x, t);
            let a = def.bc.a.eval(&xt_plain);
            let b = def.bc.b.eval(&xt_plain);
            let g = def.bc.g.eval(&xt_plain);
            let xd: Vec<Dual<'_>> = x
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual::input(&tape, v, k, nd))
                .collect();
            let td = t.map(|tv| Dual::input(&tape, tv, dim, nd));
            let fields = bound.evaluate(&xd, td.as_ref())?;
            let fe = &fields[def.bc.field];
            let mut r = fe.u.var() * a + tape.constant(-g);
            if !is_zero(&def.bc.b) {
                let mut flux = tape.constant(0.0);
                for k in 0..dim {
                    let dk = if extra { fe.p[k].var() } else { fe.u.tangent(k) };
                    flux = flux + dk * bb.normals[i][k];
                }
                r = r + flux * b;
            }
            let root = r.square();
            bc_sum += root.value() * inv_b;
            tape.finalize();
            tape.sweep_accumulate(root, inv_b, &mut adj, mark)?;
            tape.reset_to(mark);
        }
    }

    let mut ic_sum = 0.0;
    if transient && !batch.initial.is_empty() {
        let inv_i = 1.0 / batch.initial.len() as f64;
        for x in &batch.initial {
            let xd: Vec<Dual<'_>> = x.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
            let td = Dual::constant(&tape, 0.0, 0);
            let fields = bound.evaluate(&xd, Some(&td))?;
            let mut root = tape.constant(0.0);
            for (j, fe) in fields.iter().enumerate() {
                let f0 = problem.ics[j].eval(x);
                root = root + (fe.u.var() + tape.constant(-f0)).square();
            }
            ic_sum += root.value() * inv_i;
            tape.finalize();
            tape.sweep_accumulate(root, inv_i, &mut adj, mark)?;
            tape.reset_to(mark);
        }
    }

    let mut grad = Vec::new();
    tape.param_adjoints(&adj, &mut grad);
    let pde_grad = if want_pde_grad {
        let mut g = Vec::new();
        tape.param_adjoints(&adj_pde, &mut g);
        Some(g)
    } else {
        None
    };
    Ok(LossGrad {
        breakdown: LossBreakdown::new(pde_sum * inv, eq_sum * inv, bc_sum, ic_sum),
        grad,
        pde_grad,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> AdamConfig {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, cfg: AdamConfig) -> Adam {
        Adam { cfg, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One bias-corrected update in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.cfg.beta1.powi(self.t);
        let c2 = 1.0 - self.cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.cfg.beta1 * self.m[i] + (1.0 - self.cfg.beta1) * grad[i];
            self.v[i] = self.cfg.beta2 * self.v[i] + (1.0 - self.cfg.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + self.cfg.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    pub rel_improvement: f64,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> PlateauConfig {
        PlateauConfig { factor: 0.5, patience: 100, rel_improvement: 1e-4, min_lr: 1e-6 }
    }
}

impl PlateauConfig {
    /// A configuration that never changes the rate.
    pub fn off() -> PlateauConfig {
        PlateauConfig { factor: 1.0, min_lr: 0.0, ..PlateauConfig::default() }
    }
}

/// Reduce-on-plateau: the rate shrinks by `factor` whenever `patience`
/// consecutive observations fail to improve the best loss by a relative
/// `rel_improvement`.
pub struct Plateau {
    cfg: PlateauConfig,
    lr: f64,
    best: f64,
    since: usize,
}

impl Plateau {
    pub fn new(cfg: PlateauConfig, lr0: f64) -> Plateau {
        Plateau { cfg, lr: lr0, best: f64::INFINITY, since: 0 }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn observe(&mut self, loss: f64) -> f64 {
        if loss < self.best * (1.0 - self.cfg.rel_improvement) {
            self.best = loss;
            self.since = 0;
        } else {
            self.since += 1;
            if self.since >= self.cfg.patience {
                self.lr = (self.lr * self.cfg.factor).max(self.cfg.min_lr);
                self.since = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub rel_loss_tol: f64,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub max_line_steps: usize,
}

impl Default for LbfgsConfig {
    fn default() -> LbfgsConfig {
        LbfgsConfig {
            memory: 50,
            max_iters: 500,
            grad_tol: 1e-9,
            rel_loss_tol: 1e-12,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_line_steps: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradTol,
    LossTol,
    MaxIters,
    LineSearchStall,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub loss: f64,
    pub iters: usize,
    pub reason: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mean_abs(a: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().map(|v| v.abs()).sum::<f64>() / a.len() as f64
}

fn check_finite(loss: f64, grad: &[f64], iteration: usize) -> Result<(), TrainError> {
    if !loss.is_finite() {
        return Err(TrainError::NonFinite { iteration, what: "loss".into() });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(TrainError::NonFinite { iteration, what: "gradient".into() });
    }
    Ok(())
}

/// L-BFGS with two-loop recursion and Armijo backtracking. `on_accept` sees
/// every accepted iterate: (iteration, step length, loss, gradient).
pub fn lbfgs<F, C>(
    mut f: F,
    x: &mut Vec<f64>,
    cfg: &LbfgsConfig,
    mut on_accept: C,
) -> Result<LbfgsOutcome, TrainError>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), TrainError>,
    C: FnMut(usize, f64, f64, &[f64]) -> Result<(), TrainError>,
{
    let (mut fx, mut g) = f(x)?;
    check_finite(fx, &g, 0)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    for k in 1..=cfg.max_iters {
        if norm2(&g) <= cfg.grad_tol {
            return Ok(LbfgsOutcome { loss: fx, iters: k - 1, reason: StopReason::GradTol });
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // not a descent direction; fall back to steepest descent
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.max_line_steps {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&xt)?;
            if ft.is_finite() && ft <= fx + cfg.armijo_c1 * step * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            step *= cfg.backtrack;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return Ok(LbfgsOutcome { loss: fx, iters: k - 1, reason: StopReason::LineSearchStall });
        };
        check_finite(fn_, &gn, k)?;

        let s: Vec<f64> = xn.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm2(&s) * norm2(&y) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let rel_change = (fx - fn_).abs() / fx.abs().max(1.0);
        *x = xn;
        fx = fn_;
        g = gn;
        on_accept(k, step, fx, &g)?;
        if rel_change <= cfg.rel_loss_tol {
            return Ok(LbfgsOutcome { loss: fx, iters: k, reason: StopReason::LossTol });
        }
    }
    Ok(LbfgsOutcome { loss: fx, iters: cfg.max_iters, reason: StopReason::MaxIters })
}

/// Mean-gradient history with the paper's stability statistics: a moving
/// variance over a fixed window, and the coefficient of variation of the
/// whole series.
pub struct GradStats {
    window: usize,
    history: Vec<f64>,
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n
}

impl GradStats {
    pub fn new(window: usize) -> GradStats {
        assert!(window >= 1);
        GradStats { window, history: Vec::new() }
    }

    pub fn push(&mut self, v: f64) {
        self.history.push(v);
    }

    /// Variance of the last `window` samples; None until the window fills.
    pub fn movvar(&self) -> Option<f64> {
        let n = self.history.len();
        if n < self.window {
            return None;
        }
        Some(variance(&self.history[n - self.window..]))
    }

    pub fn series(&self) -> &[f64] {
        &self.history
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Coefficient of variation of the whole history.
    pub fn cv(&self) -> f64 {
        coefficient_of_variation(&self.history)
    }
}

/// Population standard deviation over mean; NaN for empty or zero-mean
/// series.
pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mu = xs.iter().sum::<f64>() / xs.len() as f64;
    if mu == 0.0 {
        return f64::NAN;
    }
    variance(xs).sqrt() / mu
}

pub fn moving_variance(series: &[f64], window: usize) -> Vec<f64> {
    if series.len() < window {
        return Vec::new();
    }
    (window..=series.len()).map(|i| variance(&series[i - window..i])).collect()
}

pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    if series.len() < window {
        return Vec::new();
    }
    (window..=series.len())
        .map(|i| series[i - window..i].iter().sum::<f64>() / window as f64)
        .collect()
}

/// Samples consumed by the two filter windows before the first ratio value.
pub fn warmup_len(window: usize) -> usize {
    2 * window - 2
}

/// Ratio of smoothed moving variances of two mean-gradient series: MovVar
/// over `window`, then a moving average over the same window, then an
/// elementwise quotient. Zero denominators yield NaN sentinels.
pub fn movvar_ratio(a: &[f64], b: &[f64], window: usize) -> Result<Vec<f64>, TrainError> {
    if a.len() != b.len() {
        return Err(TrainError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let fa = moving_average(&moving_variance(a, window), window);
    let fb = moving_average(&moving_variance(b, window), window);
    Ok(fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| if *y == 0.0 { f64::NAN } else { x / y })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub adam_iters: usize,
    pub adam_lr: f64,
    pub adam: AdamConfig,
    pub plateau: PlateauConfig,
    pub lbfgs: LbfgsConfig,
    /// Checkpoint cadence in iterations; 0 disables periodic checkpoints.
    pub checkpoint_every: usize,
}

impl Default for TrainSchedule {
    fn default() -> TrainSchedule {
        TrainSchedule {
            adam_iters: 5000,
            adam_lr: 1e-3,
            adam: AdamConfig::default(),
            plateau: PlateauConfig::default(),
            lbfgs: LbfgsConfig::default(),
            checkpoint_every: 0,
        }
    }
}

/// One metrics record per iteration. During the L-BFGS phase `lr` holds the
/// accepted line-search step instead of a learning rate.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub iteration: usize,
    pub lr: f64,
    pub breakdown: LossBreakdown,
    pub mean_abs_grad: f64,
    pub movvar: Option<f64>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub final_loss: f64,
    pub total_iterations: usize,
    pub lbfgs: Option<LbfgsOutcome>,
    /// Per-iteration mean |gradient| of the optimized loss.
    pub grad_series: Vec<f64>,
    /// Per-iteration mean |gradient| of the PDE-system part, when the eval
    /// supplies it; falls back to the optimized-loss series.
    pub instrumented_series: Vec<f64>,
}

/// Run the Adam phase then the L-BFGS phase over a flat parameter vector,
/// reporting one row per iteration to `sink` and the parameter snapshot to
/// `checkpoint` on the configured cadence.
pub fn train<E, S, C>(
    mut eval: E,
    theta: &mut Vec<f64>,
    schedule: &TrainSchedule,
    mut sink: S,
    mut checkpoint: C,
) -> Result<TrainOutcome, TrainError>
where
    E: FnMut(&[f64]) -> Result<LossGrad, TrainError>,
    S: FnMut(&MetricsRow) -> Result<(), TrainError>,
    C: FnMut(usize, &[f64]) -> Result<(), TrainError>,
{
    let mut adam = Adam::new(theta.len(), schedule.adam);
    let mut plateau = Plateau::new(schedule.plateau, schedule.adam_lr);
    let mut stats = GradStats::new(500);
    let mut instrumented = Vec::new();
    let mut last_loss = f64::NAN;

    for it in 1..=schedule.adam_iters {
        let lg = eval(theta)?;
        check_finite(lg.breakdown.total, &lg.grad, it)?;
        let ga = mean_abs(&lg.grad);
        stats.push(ga);
        instrumented.push(lg.pde_grad.as_deref().map_or(ga, mean_abs));
        let lr = plateau.lr();
        sink(&MetricsRow {
            iteration: it,
            lr,
            breakdown: lg.breakdown,
            mean_abs_grad: ga,
            movvar: stats.movvar(),
        })?;
        adam.step(theta, &lg.grad, lr);
        plateau.observe(lg.breakdown.total);
        last_loss = lg.breakdown.total;
        if schedule.checkpoint_every > 0 && it % schedule.checkpoint_every == 0 {
            checkpoint(it, theta)?;
        }
    }

    let mut lbfgs_outcome = None;
    if schedule.lbfgs.max_iters > 0 {
        let base = schedule.adam_iters;
        let last = std::cell::Cell::new(LossBreakdown::new(0.0, 0.0, 0.0, 0.0));
        let outcome = lbfgs(
            |x| {
                let lg = eval(x)?;
                last.set(lg.breakdown);
                Ok((lg.breakdown.total, lg.grad))
            },
            theta,
            &schedule.lbfgs,
            |k, step, loss, grad| {
                let ga = mean_abs(grad);
                stats.push(ga);
                instrumented.push(ga);
                sink(&MetricsRow {
                    iteration: base + k,
                    lr: step,
                    breakdown: last.get(),
                    mean_abs_grad: ga,
                    movvar: stats.movvar(),
                })?;
                debug_assert_eq!(loss, last.get().total);
                Ok(())
            },
        )?;
        last_loss = outcome.loss;
        lbfgs_outcome = Some(outcome);
    }

    let total_iterations = schedule.adam_iters + lbfgs_outcome.as_ref().map_or(0, |o| o.iters);
    checkpoint(total_iterations, theta)?;
    Ok(TrainOutcome {
        final_loss: last_loss,
        total_iterations,
        lbfgs: lbfgs_outcome,
        grad_series: stats.series().to_vec(),
        instrumented_series: instrumented,
    })
}
