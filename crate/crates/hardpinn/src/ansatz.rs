//! Hard-constraint ansatz: distance-weighted blending of a main network
//! with boundary-exact general solutions.
//!
//! For each field j the spatial assembly is
//!
//!   (û_j, p̂_j)(x) = l(x)·NN_main(x)[slice j] + Σ_i w_i(x)·p̃^i(x)
//!
//! where l is the distance to the union of the field's boundary regions,
//! p̃^i is the general solution of boundary condition i (exact on region i
//! for any sub-network parameters), and w_i = exp(−α_i·l_i(x)) decays away
//! from region i. The hardness α_i = β_s / (estimated closest approach of
//! the other regions) makes every foreign weight at most e^{−β_s} on
//! region i. Fields with a single boundary region skip the weights: their
//! general solution is added at full strength everywhere, and the boundary
//! condition holds exactly.
//!
//! Time-dependent problems blend the value component with the initial
//! condition, û = u†·(1−e^{−β_t t}) + f(x)·e^{−β_t t}, so û(x,0) = f(x)
//! identically. p̂ stays the spatial assembly; the equilibrium loss pulls
//! it toward ∇û during training.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdError, Dual, Jet2, Tape, Var};
use crate::boundary::{general_solution, normalize_dual, BoundaryCondition, BoundaryError, ParamFn};
use crate::geometry::{DistanceField, DistanceMode, GeometryError, Shape};
use crate::network::{MlpParams, MlpSpec, NetError, TapeNet};
use crate::problems::{ProblemError, ProblemSpec};

#[derive(Debug, thiserror::Error)]
pub enum AnsatzError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("autodiff failure: {0}")]
    Ad(#[from] AdError),
    #[error("boundary region {region} touches another region; the exponential blend cannot separate them")]
    ZeroOffRegionDistance { region: String },
    #[error("{0}")]
    Invalid(String),
}

/// Hidden-layer widths; input and output widths are derived from the
/// problem (dimension, time dependence, field count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub main_hidden: Vec<usize>,
    pub subnet_hidden: Vec<usize>,
}

impl Default for NetworkLayout {
    fn default() -> Self {
        NetworkLayout { main_hidden: vec![50, 50, 50], subnet_hidden: vec![20, 20] }
    }
}

#[derive(Debug, Clone)]
pub struct AnsatzOptions {
    pub beta_s: f64,
    pub beta_t: f64,
    /// Boundary probe count for estimating each region's closest approach.
    pub n_probe: usize,
    pub distance_mode: DistanceMode,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        AnsatzOptions {
            beta_s: 5.0,
            beta_t: 10.0,
            n_probe: 4096,
            distance_mode: DistanceMode::Exact,
        }
    }
}

/// One field's value and auxiliary gradient components at a point. Tangent
/// slots follow the input order: spatial directions first, time last.
#[derive(Clone)]
pub struct FieldEval<'t> {
    pub u: Dual<'t>,
    /// Auxiliary gradient components p̂; empty for fields that carry none.
    pub p: Vec<Dual<'t>>,
}

impl<'t> FieldEval<'t> {
    /// ∇·p̂ from the forward tangents; the residual form of every
    /// second-order operator.
    pub fn div_p(&self) -> Var<'t> {
        assert!(!self.p.is_empty(), "field has no auxiliary gradient");
        let mut s = self.p[0].tangent(0);
        for (k, pk) in self.p.iter().enumerate().skip(1) {
            s = s + pk.tangent(k);
        }
        s
    }

    /// Time derivative of û; `dim` is the spatial dimension (time is the
    /// trailing tangent slot).
    pub fn du_dt(&self, dim: usize) -> Var<'t> {
        self.u.tangent(dim)
    }
}

/// Everything a PDE residual may read at a collocation point. `x` and `t`
/// are plain values: sources are constants of the optimization, so only
/// the field evaluations carry derivative structure.
pub struct ResidualCtx<'a, 't> {
    pub fields: &'a [FieldEval<'t>],
    pub x: &'a [f64],
    pub t: Option<f64>,
    pub dim: usize,
    pub tape: &'t Tape,
}

/// Residual inputs for the classic formulation without auxiliary fields:
/// one second-order jet per field, second derivative taken along the first
/// spatial direction.
pub struct SecondOrderCtx<'a, 't> {
    pub fields: &'a [Jet2<'t>],
    pub x: &'a [f64],
    pub t: Option<f64>,
    pub tape: &'t Tape,
}

/// Main-network plus per-key sub-network parameters. Keys are the subnet
/// names from the problem's boundary definitions; flattening orders the
/// main network first, then subnets by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub main: MlpParams,
    pub subnets: BTreeMap<String, MlpParams>,
}

impl ModelParams {
    pub fn n_params(&self) -> usize {
        self.main.flat.len() + self.subnets.values().map(|p| p.flat.len()).sum::<usize>()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.main.flat.clone();
        for p in self.subnets.values() {
            out.extend_from_slice(&p.flat);
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat vector length mismatch");
        let mut off = self.main.flat.len();
        self.main.flat.copy_from_slice(&flat[..off]);
        for p in self.subnets.values_mut() {
            let n = p.flat.len();
            p.flat.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }
}

#[derive(Debug)]
struct Piece {
    bc: BoundaryCondition,
    shape: Shape,
    subnet: String,
    /// β_s over the estimated closest approach of other regions; infinite
    /// (and unused) when the field has a single boundary region.
    alpha: f64,
    distance: DistanceField,
    needs_normal: bool,
}

#[derive(Debug)]
struct FieldAssembly {
    name: String,
    width: usize,
    offset: usize,
    own_distance: DistanceField,
    pieces: Vec<Piece>,
}

#[derive(Debug)]
pub struct HardConstraintAnsatz {
    dim: usize,
    time_horizon: Option<f64>,
    beta_s: f64,
    beta_t: f64,
    fields: Vec<FieldAssembly>,
    ics: Vec<ParamFn>,
    main_spec: MlpSpec,
    subnet_specs: BTreeMap<String, MlpSpec>,
}

fn is_zero_const(p: &ParamFn) -> bool {
    matches!(p, ParamFn::Const(v) if *v == 0.0)
}

fn make_xt<'t>(x: &[Dual<'t>], t: Option<&Dual<'t>>) -> Vec<Dual<'t>> {
    let mut xt = x.to_vec();
    if let Some(td) = t {
        xt.push(td.clone());
    }
    xt
}

/// Residual of `bc` against one field's evaluation: ñ·(û, p̂) − g̃ with the
/// region's own normal. Zero (to rounding) wherever the condition holds.
pub fn bc_residual_dual<'t>(
    bc: &BoundaryCondition,
    shape: &Shape,
    field: &FieldEval<'t>,
    x: &[Dual<'t>],
    xt: &[Dual<'t>],
) -> Result<Dual<'t>, BoundaryError> {
    let tape = x[0].tape();
    let nd = x[0].n_dirs();
    let normal = if field.p.is_empty() {
        Vec::new()
    } else if is_zero_const(&bc.b) {
        vec![Dual::constant(tape, 0.0, nd); x.len()]
    } else {
        shape.normal_dual(x)
    };
    let (n_tilde, g_tilde) = normalize_dual(bc, xt, &normal)?;
    if n_tilde.len() != field.p.len() + 1 {
        return Err(BoundaryError::WidthMismatch {
            expected: n_tilde.len(),
            got: field.p.len() + 1,
        });
    }
    let mut dot = n_tilde[0].mul(&field.u);
    for (k, pk) in field.p.iter().enumerate() {
        dot = dot.add(&n_tilde[k + 1].mul(pk));
    }
    Ok(dot.sub(&g_tilde))
}

pub fn assemble(
    problem: &ProblemSpec,
    layout: &NetworkLayout,
    opts: &AnsatzOptions,
    seed: u64,
) -> Result<(HardConstraintAnsatz, ModelParams), AnsatzError> {
    problem.validate()?;
    if !(opts.beta_s > 0.0) || !(opts.beta_t > 0.0) {
        return Err(AnsatzError::Invalid(format!(
            "hardness parameters must be positive, got beta_s={}, beta_t={}",
            opts.beta_s, opts.beta_t
        )));
    }
    let dim = problem.domain.dim();
    let time = problem.time_horizon.is_some();
    let input_w = dim + usize::from(time);
    let probe_seed = seed.wrapping_add(0x0FF5_E7ED);

    let mut fields = Vec::with_capacity(problem.fields.len());
    let mut subnet_specs: BTreeMap<String, MlpSpec> = BTreeMap::new();
    let mut offset = 0;
    for (j, fs) in problem.fields.iter().enumerate() {
        let width = problem.field_width(j);
        let defs: Vec<_> = problem.bcs.iter().filter(|d| d.bc.field == j).collect();
        if defs.is_empty() {
            return Err(AnsatzError::Invalid(format!(
                "field {} has no boundary conditions",
                fs.name
            )));
        }
        let mut region_names: Vec<&str> = Vec::new();
        for d in &defs {
            if !region_names.contains(&d.bc.region.as_str()) {
                region_names.push(&d.bc.region);
            }
        }
        let own_distance = problem.domain.distance_field(&region_names, opts.distance_mode)?;
        let multi = defs.len() > 1;
        let mut pieces = Vec::with_capacity(defs.len());
        for d in &defs {
            let shape = problem.domain.region(&d.bc.region)?.clone();
            let alpha = if multi {
                let est =
                    problem
                        .domain
                        .min_offregion_distance(&d.bc.region, opts.n_probe, probe_seed)?;
                if est <= 0.0 {
                    return Err(AnsatzError::ZeroOffRegionDistance {
                        region: d.bc.region.clone(),
                    });
                }
                opts.beta_s / est
            } else {
                f64::INFINITY
            };
            let distance =
                problem.domain.distance_field(&[&d.bc.region], opts.distance_mode)?;
            let mut spec_widths = Vec::with_capacity(layout.subnet_hidden.len() + 2);
            spec_widths.push(input_w);
            spec_widths.extend_from_slice(&layout.subnet_hidden);
            spec_widths.push(width);
            let spec = MlpSpec::tanh(spec_widths);
            if let Some(prev) = subnet_specs.get(&d.subnet) {
                if *prev != spec {
                    return Err(AnsatzError::Invalid(format!(
                        "subnet {} is shared across incompatible widths",
                        d.subnet
                    )));
                }
            } else {
                subnet_specs.insert(d.subnet.clone(), spec);
            }
            pieces.push(Piece {
                bc: d.bc.clone(),
                shape,
                subnet: d.subnet.clone(),
                alpha,
                distance,
                needs_normal: width > 1 && !is_zero_const(&d.bc.b),
            });
        }
        fields.push(FieldAssembly {
            name: fs.name.clone(),
            width,
            offset,
            own_distance,
            pieces,
        });
        offset += width;
    }

    let mut main_widths = Vec::with_capacity(layout.main_hidden.len() + 2);
    main_widths.push(input_w);
    main_widths.extend_from_slice(&layout.main_hidden);
    main_widths.push(offset);
    let main_spec = MlpSpec::tanh(main_widths);

    let main = MlpParams::init(main_spec.clone(), seed)?;
    let mut subnets = BTreeMap::new();
    for (i, (key, spec)) in subnet_specs.iter().enumerate() {
        let p = MlpParams::init(spec.clone(), seed.wrapping_add(1 + i as u64))?;
        subnets.insert(key.clone(), p);
    }

    let ansatz = HardConstraintAnsatz {
        dim,
        time_horizon: problem.time_horizon,
        beta_s: opts.beta_s,
        beta_t: opts.beta_t,
        fields,
        ics: problem.ics.clone(),
        main_spec,
        subnet_specs,
    };
    Ok((ansatz, ModelParams { main, subnets }))
}

impl HardConstraintAnsatz {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time_horizon(&self) -> Option<f64> {
        self.time_horizon
    }

    pub fn beta_s(&self) -> f64 {
        self.beta_s
    }

    pub fn beta_t(&self) -> f64 {
        self.beta_t
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn field_width(&self, j: usize) -> usize {
        self.fields[j].width
    }

    pub fn main_spec(&self) -> &MlpSpec {
        &self.main_spec
    }

    pub fn subnet_specs(&self) -> &BTreeMap<String, MlpSpec> {
        &self.subnet_specs
    }

    /// (field, region, α) triples; α is infinite for fields assembled in
    /// the direct single-boundary form.
    pub fn hardness(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for fa in &self.fields {
            for p in &fa.pieces {
                out.push((fa.name.clone(), p.bc.region.clone(), p.alpha));
            }
        }
        out
    }

    pub fn bind<'t, 'a>(
        &'a self,
        tape: &'t Tape,
        params: &ModelParams,
        trainable: bool,
    ) -> Result<BoundAnsatz<'t, 'a>, AnsatzError> {
        if params.main.spec != self.main_spec {
            return Err(AnsatzError::Invalid("main network spec mismatch".into()));
        }
        let main = TapeNet::bind(tape, &params.main, trainable);
        let mut subnets = BTreeMap::new();
        for (key, spec) in &self.subnet_specs {
            let p = params.subnets.get(key).ok_or_else(|| {
                AnsatzError::Invalid(format!("missing parameters for subnet {key}"))
            })?;
            if p.spec != *spec {
                return Err(AnsatzError::Invalid(format!("subnet {key} spec mismatch")));
            }
            subnets.insert(key.as_str(), TapeNet::bind(tape, p, trainable));
        }
        Ok(BoundAnsatz { plan: self, main, subnets })
    }

    /// Field values û at a point, on a throwaway tape without tangents.
    pub fn predict(
        &self,
        params: &ModelParams,
        x: &[f64],
        t: Option<f64>,
    ) -> Result<Vec<f64>, AnsatzError> {
        let tape = Tape::new();
        let bound = self.bind(&tape, params, false)?;
        let xd: Vec<Dual<'_>> = x.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let td = t.map(|tv| Dual::constant(&tape, tv, 0));
        let evals = bound.evaluate(&xd, td.as_ref())?;
        let out = evals.iter().map(|fe| fe.u.value()).collect();
        if let Some(err) = tape.poison() {
            return Err(err.into());
        }
        Ok(out)
    }
}

pub struct BoundAnsatz<'t, 'a> {
    plan: &'a HardConstraintAnsatz,
    main: TapeNet<'t>,
    subnets: BTreeMap<&'a str, TapeNet<'t>>,
}

impl<'t, 'a> BoundAnsatz<'t, 'a> {
    pub fn evaluate(
        &self,
        x: &[Dual<'t>],
        t: Option<&Dual<'t>>,
    ) -> Result<Vec<FieldEval<'t>>, AnsatzError> {
        let plan = self.plan;
        if x.len() != plan.dim {
            return Err(AnsatzError::Invalid(format!(
                "expected {} spatial coordinates, got {}",
                plan.dim,
                x.len()
            )));
        }
        if t.is_some() != plan.time_horizon.is_some() {
            return Err(AnsatzError::Invalid(
                "time argument does not match the problem's time dependence".into(),
            ));
        }
        let tape = x[0].tape();
        let nd = x[0].n_dirs();
        let xt = make_xt(x, t);
        let main_out = self.main.forward(&xt)?;
        let mut sub_out: BTreeMap<&str, Vec<Dual<'t>>> = BTreeMap::new();
        for (key, net) in &self.subnets {
            sub_out.insert(key, net.forward(&xt)?);
        }

        let mut evals = Vec::with_capacity(plan.fields.len());
        for (j, fa) in plan.fields.iter().enumerate() {
            let l_own = fa.own_distance.eval_dual(x);
            let mut stacked: Vec<Dual<'t>> = main_out[fa.offset..fa.offset + fa.width]
                .iter()
                .map(|m| m.mul(&l_own))
                .collect();
            let direct = fa.pieces.len() == 1;
            for piece in &fa.pieces {
                let w = &sub_out[piece.subnet.as_str()];
                let normal = if fa.width == 1 {
                    Vec::new()
                } else if piece.needs_normal {
                    piece.shape.normal_dual(x)
                } else {
                    vec![Dual::constant(tape, 0.0, nd); plan.dim]
                };
                let ptilde = general_solution(&piece.bc, &normal, w, &xt)?;
                if direct {
                    for (s, c) in stacked.iter_mut().zip(&ptilde) {
                        *s = s.add(c);
                    }
                } else {
                    let weight = piece.distance.eval_dual(x).scale(-piece.alpha).exp();
                    for (s, c) in stacked.iter_mut().zip(&ptilde) {
                        *s = s.add(&c.mul(&weight));
                    }
                }
            }
            let mut u = stacked[0].clone();
            if let Some(td) = t {
                let e = td.scale(-plan.beta_t).exp();
                let ramp = e.neg().add_const(1.0);
                let f0 = plan.ics[j].eval_dual(x);
                u = u.mul(&ramp).add(&f0.mul(&e));
            }
            evals.push(FieldEval { u, p: stacked[1..].to_vec() });
        }
        Ok(evals)
    }

    /// Boundary residual ñ·(û, p̂) − g̃ of one field's condition on `region`,
    /// evaluated through the full blended ansatz.
    pub fn boundary_residual(
        &self,
        field: usize,
        region: &str,
        x: &[Dual<'t>],
        t: Option<&Dual<'t>>,
    ) -> Result<Dual<'t>, AnsatzError> {
        let fa = &self.plan.fields[field];
        let piece = fa
            .pieces
            .iter()
            .find(|p| p.bc.region == region)
            .ok_or_else(|| {
                AnsatzError::Invalid(format!(
                    "field {} has no condition on region {region}",
                    fa.name
                ))
            })?;
        let evals = self.evaluate(x, t)?;
        let xt = make_xt(x, t);
        Ok(bc_residual_dual(&piece.bc, &piece.shape, &evals[field], x, &xt)?)
    }

    /// Cross-talk magnitude on `region`: Σ over the field's other pieces of
    /// |ñ·p̃_other| at x, with ñ the condition's own normalized coefficient
    /// vector. The blended boundary residual on the region is bounded by
    /// e^(−β_s) times this quantity.
    pub fn boundary_leakage(
        &self,
        field: usize,
        region: &str,
        x: &[Dual<'t>],
        t: Option<&Dual<'t>>,
    ) -> Result<f64, AnsatzError> {
        let plan = self.plan;
        let fa = &plan.fields[field];
        let own = fa
            .pieces
            .iter()
            .find(|p| p.bc.region == region)
            .ok_or_else(|| {
                AnsatzError::Invalid(format!(
                    "field {} has no condition on region {region}",
                    fa.name
                ))
            })?;
        let tape = x[0].tape();
        let nd = x[0].n_dirs();
        let xt = make_xt(x, t);
        let own_normal = if fa.width == 1 {
            Vec::new()
        } else if is_zero_const(&own.bc.b) {
            vec![Dual::constant(tape, 0.0, nd); plan.dim]
        } else {
            own.shape.normal_dual(x)
        };
        let (n_tilde, _) = normalize_dual(&own.bc, &xt, &own_normal)?;
        let mut total = 0.0;
        for piece in fa.pieces.iter().filter(|p| p.bc.region != region) {
            let w = self.subnets[piece.subnet.as_str()].forward(&xt)?;
            let normal = if fa.width == 1 {
                Vec::new()
            } else if piece.needs_normal {
                piece.shape.normal_dual(x)
            } else {
                vec![Dual::constant(tape, 0.0, nd); plan.dim]
            };
            let ptilde = general_solution(&piece.bc, &normal, &w, &xt)?;
            let mut dot = 0.0;
            for (nk, pk) in n_tilde.iter().zip(&ptilde) {
                dot += nk.value() * pk.value();
            }
            total += dot.abs();
        }
        Ok(total)
    }
}

/// Plain ansatz for the soft-constraint baselines: fields read directly
/// from network output slices, no geometry involved.
#[derive(Debug)]
pub struct SoftAnsatz {
    dim: usize,
    time_horizon: Option<f64>,
    extra_fields: bool,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    main_spec: MlpSpec,
}

pub fn soft_assemble(
    problem: &ProblemSpec,
    layout: &NetworkLayout,
    extra_fields: bool,
    seed: u64,
) -> Result<(SoftAnsatz, MlpParams), AnsatzError> {
    problem.validate()?;
    let dim = problem.domain.dim();
    let input_w = dim + usize::from(problem.time_horizon.is_some());
    let mut widths = Vec::with_capacity(problem.fields.len());
    let mut offsets = Vec::with_capacity(problem.fields.len());
    let mut offset = 0;
    for j in 0..problem.fields.len() {
        let w = if extra_fields { problem.field_width(j) } else { 1 };
        widths.push(w);
        offsets.push(offset);
        offset += w;
    }
    let mut main_widths = Vec::with_capacity(layout.main_hidden.len() + 2);
    main_widths.push(input_w);
    main_widths.extend_from_slice(&layout.main_hidden);
    main_widths.push(offset);
    let main_spec = MlpSpec::tanh(main_widths);
    let params = MlpParams::init(main_spec.clone(), seed)?;
    Ok((
        SoftAnsatz {
            dim,
            time_horizon: problem.time_horizon,
            extra_fields,
            widths,
            offsets,
            main_spec,
        },
        params,
    ))
}

impl SoftAnsatz {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extra_fields(&self) -> bool {
        self.extra_fields
    }

    pub fn main_spec(&self) -> &MlpSpec {
        &self.main_spec
    }

    pub fn bind<'t, 'a>(
        &'a self,
        tape: &'t Tape,
        params: &MlpParams,
        trainable: bool,
    ) -> Result<BoundSoft<'t, 'a>, AnsatzError> {
        if params.spec != self.main_spec {
            return Err(AnsatzError::Invalid("network spec mismatch".into()));
        }
        Ok(BoundSoft { plan: self, net: TapeNet::bind(tape, params, trainable) })
    }

    pub fn predict(
        &self,
        params: &MlpParams,
        x: &[f64],
        t: Option<f64>,
    ) -> Result<Vec<f64>, AnsatzError> {
        let tape = Tape::new();
        let bound = self.bind(&tape, params, false)?;
        let xd: Vec<Dual<'_>> = x.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let td = t.map(|tv| Dual::constant(&tape, tv, 0));
        let evals = bound.evaluate(&xd, td.as_ref())?;
        let out = evals.iter().map(|fe| fe.u.value()).collect();
        if let Some(err) = tape.poison() {
            return Err(err.into());
        }
        Ok(out)
    }
}

pub struct BoundSoft<'t, 'a> {
    plan: &'a SoftAnsatz,
    net: TapeNet<'t>,
}

impl<'t, 'a> BoundSoft<'t, 'a> {
    pub fn evaluate(
        &self,
        x: &[Dual<'t>],
        t: Option<&Dual<'t>>,
    ) -> Result<Vec<FieldEval<'t>>, AnsatzError> {
        if t.is_some() != self.plan.time_horizon.is_some() {
            return Err(AnsatzError::Invalid(
                "time argument does not match the problem's time dependence".into(),
            ));
        }
        let xt = make_xt(x, t);
        let out = self.net.forward(&xt)?;
        let evals = self
            .plan
            .widths
            .iter()
            .zip(&self.plan.offsets)
            .map(|(&w, &off)| FieldEval {
                u: out[off].clone(),
                p: out[off + 1..off + w].to_vec(),
            })
            .collect();
        Ok(evals)
    }

    /// Second-order jets of each field for the no-auxiliary-fields ablation
    /// arm. Only 1D problems are supported: the jet tracks d²/dx² along the
    /// single spatial direction.
    pub fn evaluate_jet2(&self, x: f64, t: Option<f64>) -> Result<Vec<Jet2<'t>>, AnsatzError> {
        if self.plan.extra_fields {
            return Err(AnsatzError::Invalid(
                "second-order jets apply to the no-auxiliary-fields form only".into(),
            ));
        }
        if self.plan.dim != 1 {
            return Err(AnsatzError::Invalid(
                "second-order jets are limited to one spatial dimension".into(),
            ));
        }
        if t.is_some() != self.plan.time_horizon.is_some() {
            return Err(AnsatzError::Invalid(
                "time argument does not match the problem's time dependence".into(),
            ));
        }
        let tape = self.net.tape();
        let nd = 1 + usize::from(t.is_some());
        let mut inputs = vec![Jet2::input(tape, x, 0, nd)];
        if let Some(tv) = t {
            inputs.push(Jet2::input(tape, tv, 1, nd));
        }
        Ok(self.net.forward(&inputs)?)
    }
}
