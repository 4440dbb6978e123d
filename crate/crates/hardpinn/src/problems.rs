//! Built-in benchmark problems: geometry, boundary data, PDE residuals in
//! the auxiliary-gradient form, and analytic solutions where they exist.
//!
//! A problem's residual functions see only values and first input
//! derivatives of the ansatz fields; second-order operators are expressed
//! as ∇·p̂ of the auxiliary gradient. Reference solutions come either from
//! closed forms ([`Truth`]) or from point tables loaded off disk
//! ([`RefTable`]).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::{ResidualCtx, SecondOrderCtx};
use crate::autodiff::{Dual, Var};
use crate::boundary::{BoundaryCondition, ParamFn};
use crate::geometry::{Domain, Shape, Side};

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("invalid problem: {0}")]
    Validation(String),
    #[error("reference table: {0}")]
    Reference(String),
    #[error("prediction failed: {0}")]
    Prediction(String),
}

/// PDE residuals F̃ of a problem, in the first-order form.
pub trait ResidualSet: Send + Sync {
    fn count(&self) -> usize;
    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>>;

    /// Residuals written against second input derivatives, for the
    /// no-auxiliary-fields baseline. Problems without this form return None
    /// and are rejected by that baseline.
    fn eval_second_order<'t>(&self, _ctx: &SecondOrderCtx<'_, 't>) -> Option<Vec<Var<'t>>> {
        None
    }
}

/// Closed-form reference solution.
pub trait Truth: Send + Sync {
    /// Field values at a point (time appended for transient problems).
    fn u(&self, x: &[f64], t: Option<f64>) -> Vec<f64>;
    /// Spatial gradient of each field.
    fn grad_u(&self, x: &[f64], t: Option<f64>) -> Vec<Vec<f64>>;
}

#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: String,
    /// Whether the field carries auxiliary gradient components p̂.
    pub extra_field: bool,
}

/// A boundary condition plus the sub-network key that supplies its general
/// solution; conditions sharing a key share parameters.
#[derive(Debug, Clone)]
pub struct BcDef {
    pub bc: BoundaryCondition,
    pub subnet: String,
}

pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub time_horizon: Option<f64>,
    pub fields: Vec<FieldSpec>,
    pub bcs: Vec<BcDef>,
    /// Initial values per field, evaluated on spatial coordinates; empty
    /// for steady problems.
    pub ics: Vec<ParamFn>,
    pub residuals: Arc<dyn ResidualSet>,
    pub truth: Option<Arc<dyn Truth>>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.fields.is_empty() {
            return Err(ProblemError::Validation("problem has no fields".into()));
        }
        let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
        for d in &self.bcs {
            if self.domain.region(&d.bc.region).is_err() {
                return Err(ProblemError::Validation(format!(
                    "boundary condition references unknown region {:?}",
                    d.bc.region
                )));
            }
            if d.bc.field >= self.fields.len() {
                return Err(ProblemError::Validation(format!(
                    "boundary condition on {:?} names field {} of {}",
                    d.bc.region,
                    d.bc.field,
                    self.fields.len()
                )));
            }
            if !self.fields[d.bc.field].extra_field
                && !matches!(d.bc.b, ParamFn::Const(c) if c == 0.0)
            {
                return Err(ProblemError::Validation(format!(
                    "field {} carries no gradient components; only value conditions apply",
                    self.fields[d.bc.field].name
                )));
            }
            if d.subnet.is_empty() {
                return Err(ProblemError::Validation("empty subnet key".into()));
            }
            match owner.get(d.subnet.as_str()) {
                Some(&j) if j != d.bc.field => {
                    return Err(ProblemError::Validation(format!(
                        "subnet {:?} is shared across fields {} and {}",
                        d.subnet, j, d.bc.field
                    )));
                }
                _ => {
                    owner.insert(&d.subnet, d.bc.field);
                }
            }
        }
        match self.time_horizon {
            Some(th) if !(th > 0.0) => {
                return Err(ProblemError::Validation(format!(
                    "time horizon must be positive, got {th}"
                )));
            }
            Some(_) if self.ics.len() != self.fields.len() => {
                return Err(ProblemError::Validation(format!(
                    "need one initial condition per field, got {} for {}",
                    self.ics.len(),
                    self.fields.len()
                )));
            }
            None if !self.ics.is_empty() => {
                return Err(ProblemError::Validation(
                    "steady problem with initial conditions".into(),
                ));
            }
            _ => {}
        }
        if self.residuals.count() == 0 {
            return Err(ProblemError::Validation("problem has no residuals".into()));
        }
        Ok(())
    }

    pub fn field_width(&self, j: usize) -> usize {
        1 + if self.fields[j].extra_field { self.domain.dim() } else { 0 }
    }

    pub fn total_width(&self) -> usize {
        (0..self.fields.len()).map(|j| self.field_width(j)).sum()
    }

    pub fn input_width(&self) -> usize {
        self.domain.dim() + usize::from(self.time_horizon.is_some())
    }

    pub fn field_names(&self) -> Vec<String> {
        self.fields.iter().map(|f| f.name.clone()).collect()
    }
}

/// Resolve a problem by name. The heat family takes its dimension inline:
/// `highdim_heat(10)`.
pub fn builtin(name: &str) -> Result<ProblemSpec, ProblemError> {
    if let Some(rest) = name.strip_prefix("highdim_heat") {
        let inner = rest
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| {
                ProblemError::Validation(
                    "the heat problem needs a dimension, e.g. highdim_heat(5)".into(),
                )
            })?;
        let d: usize = inner.trim().parse().map_err(|_| {
            ProblemError::Validation(format!("bad dimension {inner:?} for highdim_heat"))
        })?;
        return highdim_heat(d);
    }
    match name {
        "poisson1d" => Ok(poisson1d()),
        "battery_pack" => Ok(battery_pack()),
        "airfoil_ns" => Ok(airfoil_ns()),
        "schrodinger" => Ok(schrodinger()),
        "robin_annulus" => Ok(robin_annulus()),
        _ => Err(ProblemError::UnknownProblem(name.to_string())),
    }
}

fn half_norm2_dual<'t>(xs: &[Dual<'t>]) -> Dual<'t> {
    let mut s = xs[0].square();
    for x in &xs[1..] {
        s = s.add(&x.square());
    }
    s.scale(0.5)
}

struct Poisson1dResiduals {
    a: f64,
}

impl ResidualSet for Poisson1dResiduals {
    fn count(&self) -> usize {
        1
    }

    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>> {
        let src = ctx.tape.constant(self.a * self.a * (self.a * ctx.x[0]).sin());
        vec![ctx.fields[0].div_p() + src]
    }

    fn eval_second_order<'t>(&self, ctx: &SecondOrderCtx<'_, 't>) -> Option<Vec<Var<'t>>> {
        let src = ctx.tape.constant(self.a * self.a * (self.a * ctx.x[0]).sin());
        Some(vec![ctx.fields[0].d2 + src])
    }
}

struct Poisson1dTruth {
    a: f64,
}

impl Truth for Poisson1dTruth {
    fn u(&self, x: &[f64], _t: Option<f64>) -> Vec<f64> {
        vec![(self.a * x[0]).sin()]
    }

    fn grad_u(&self, x: &[f64], _t: Option<f64>) -> Vec<Vec<f64>> {
        vec![vec![self.a * (self.a * x[0]).cos()]]
    }
}

/// u'' = -a² sin(ax) on (0, 2π) with homogeneous end values, a = 2; the
/// solution is sin(ax).
pub fn poisson1d() -> ProblemSpec {
    let a = 2.0;
    let interval = Shape::Interval { x0: 0.0, x1: 2.0 * PI };
    let domain = Domain::new(
        interval.clone(),
        vec![],
        vec![("ends".to_string(), interval)],
    )
    .expect("interval domain");
    ProblemSpec {
        name: "poisson1d".into(),
        domain,
        time_horizon: None,
        fields: vec![FieldSpec { name: "u".into(), extra_field: true }],
        bcs: vec![BcDef {
            bc: BoundaryCondition::dirichlet("ends", 0, ParamFn::Const(0.0)),
            subnet: "ends".into(),
        }],
        ics: vec![],
        residuals: Arc::new(Poisson1dResiduals { a }),
        truth: Some(Arc::new(Poisson1dTruth { a })),
    }
}

struct ExpQuadTruth {
    with_time: bool,
}

impl ExpQuadTruth {
    fn value(&self, x: &[f64], t: Option<f64>) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let arg = 0.5 * r2 + if self.with_time { t.expect("time value") } else { 0.0 };
        arg.exp()
    }
}

impl Truth for ExpQuadTruth {
    fn u(&self, x: &[f64], t: Option<f64>) -> Vec<f64> {
        vec![self.value(x, t)]
    }

    fn grad_u(&self, x: &[f64], t: Option<f64>) -> Vec<Vec<f64>> {
        let u = self.value(x, t);
        vec![x.iter().map(|v| v * u).collect()]
    }
}

struct AnnulusResiduals;

impl ResidualSet for AnnulusResiduals {
    fn count(&self) -> usize {
        1
    }

    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>> {
        let r2: f64 = ctx.x.iter().map(|v| v * v).sum();
        let src = ctx.tape.constant((2.0 + r2) * (0.5 * r2).exp());
        vec![ctx.fields[0].div_p() - src]
    }
}

/// Manufactured Robin problem on the annulus 1 < |x| < 2: the Poisson
/// source and both Robin data are chosen so that u = exp(|x|²/2) is the
/// exact solution, giving a multi-boundary case with closed-form truth.
pub fn robin_annulus() -> ProblemSpec {
    let outer = Shape::Ball { center: vec![0.0, 0.0], radius: 2.0 };
    let inner = Shape::Circle { center: [0.0, 0.0], radius: 1.0 };
    let domain = Domain::new(
        outer.clone(),
        vec![inner.clone()],
        vec![("outer".to_string(), outer), ("inner".to_string(), inner)],
    )
    .expect("annulus domain");
    // with u = exp(r²/2) and outward normals, u + ∂u/∂n is (1+r)·u on the
    // outer circle and (1-r)·u on the inner one
    let g_outer = ParamFn::from_fn(|x| {
        let half_r2 = half_norm2_dual(&x[..2]);
        let r = half_r2.scale(2.0).sqrt();
        half_r2.exp().mul(&r.add_const(1.0))
    });
    let g_inner = ParamFn::from_fn(|x| {
        let half_r2 = half_norm2_dual(&x[..2]);
        let r = half_r2.scale(2.0).sqrt();
        half_r2.exp().mul(&r.neg().add_const(1.0))
    });
    ProblemSpec {
        name: "robin_annulus".into(),
        domain,
        time_horizon: None,
        fields: vec![FieldSpec { name: "u".into(), extra_field: true }],
        bcs: vec![
            BcDef {
                bc: BoundaryCondition::robin(
                    "outer",
                    0,
                    ParamFn::Const(1.0),
                    ParamFn::Const(1.0),
                    g_outer,
                ),
                subnet: "outer".into(),
            },
            BcDef {
                bc: BoundaryCondition::robin(
                    "inner",
                    0,
                    ParamFn::Const(1.0),
                    ParamFn::Const(1.0),
                    g_inner,
                ),
                subnet: "inner".into(),
            },
        ],
        ics: vec![],
        residuals: Arc::new(AnnulusResiduals),
        truth: Some(Arc::new(ExpQuadTruth { with_time: false })),
    }
}

struct HeatResiduals {
    k: f64,
    dim: usize,
}

impl ResidualSet for HeatResiduals {
    fn count(&self) -> usize {
        1
    }

    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>> {
        let r2: f64 = ctx.x.iter().map(|v| v * v).sum();
        let src = (r2 / self.dim as f64) * (0.5 * r2 + ctx.t.expect("time value")).exp();
        vec![
            ctx.fields[0].du_dt(self.dim) - ctx.fields[0].div_p() * self.k
                + ctx.tape.constant(src),
        ]
    }
}

/// Heat equation on the unit d-ball with conductivity 1/d; the source and
/// sphere data are chosen so u = exp(|x|²/2 + t) solves it exactly.
pub fn highdim_heat(d: usize) -> Result<ProblemSpec, ProblemError> {
    if d == 0 {
        return Err(ProblemError::Validation(
            "the heat problem needs at least one spatial dimension".into(),
        ));
    }
    let ball = Shape::Ball { center: vec![0.0; d], radius: 1.0 };
    let domain = Domain::new(ball.clone(), vec![], vec![("sphere".to_string(), ball)])
        .expect("ball domain");
    let g = ParamFn::from_fn(|xt| {
        let (xs, t) = xt.split_at(xt.len() - 1);
        half_norm2_dual(xs).add(&t[0]).exp()
    });
    let ic = ParamFn::from_fn(|x| half_norm2_dual(x).exp());
    Ok(ProblemSpec {
        name: format!("highdim_heat({d})"),
        domain,
        time_horizon: Some(1.0),
        fields: vec![FieldSpec { name: "u".into(), extra_field: true }],
        bcs: vec![BcDef {
            bc: BoundaryCondition::dirichlet("sphere", 0, g),
            subnet: "sphere".into(),
        }],
        ics: vec![ic],
        residuals: Arc::new(HeatResiduals { k: 1.0 / d as f64, dim: d }),
        truth: Some(Arc::new(ExpQuadTruth { with_time: true })),
    })
}

struct BatteryResiduals;

impl ResidualSet for BatteryResiduals {
    fn count(&self) -> usize {
        1
    }

    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>> {
        // ∂T/∂t = ∇·(k∇T) with k = 1
        vec![ctx.fields[0].du_dt(2) - ctx.fields[0].div_p()]
    }
}

pub const BATTERY_T_AMBIENT: f64 = 0.1;
pub const BATTERY_T_CELL: f64 = 5.0;
pub const BATTERY_T_PIPE: f64 = 1.0;
pub const BATTERY_T_INITIAL: f64 = 0.1;

/// Transient thermal model of a battery pack: a rectangular casing holding
/// eleven heat-generating cells and six cooling pipes, every boundary
/// convective (Robin) with unit transfer coefficients. Cell and pipe rows
/// follow a regular staggered layout.
pub fn battery_pack() -> ProblemSpec {
    let outer = Shape::Rectangle { x0: 0.0, x1: 21.0, y0: 0.0, y1: 12.0 };
    let mut centers: Vec<[f64; 2]> = Vec::new();
    for k in 0..6 {
        centers.push([2.7 + 3.2 * k as f64, 3.0]);
    }
    for k in 0..5 {
        centers.push([4.3 + 3.2 * k as f64, 9.0]);
    }
    let mut holes = Vec::new();
    let mut regions = vec![("wall".to_string(), outer.clone())];
    for (i, c) in centers.iter().enumerate() {
        let shape = Shape::Circle { center: *c, radius: 1.0 };
        holes.push(shape.clone());
        regions.push((format!("cell_{i:02}"), shape));
    }
    for k in 0..6 {
        let shape = Shape::Circle { center: [2.7 + 3.2 * k as f64, 6.0], radius: 0.4 };
        holes.push(shape.clone());
        regions.push((format!("pipe_{k:02}"), shape));
    }
    let domain = Domain::new(outer, holes, regions).expect("battery domain");

    let robin = |region: &str, ambient: f64, subnet: &str| BcDef {
        bc: BoundaryCondition::robin(
            region,
            0,
            ParamFn::Const(1.0),
            ParamFn::Const(1.0),
            ParamFn::Const(ambient),
        ),
        subnet: subnet.to_string(),
    };
    let mut bcs = vec![robin("wall", BATTERY_T_AMBIENT, "wall")];
    for i in 0..11 {
        bcs.push(robin(&format!("cell_{i:02}"), BATTERY_T_CELL, "cell"));
    }
    for k in 0..6 {
        bcs.push(robin(&format!("pipe_{k:02}"), BATTERY_T_PIPE, "pipe"));
    }

    ProblemSpec {
        name: "battery_pack".into(),
        domain,
        time_horizon: Some(1.0),
        fields: vec![FieldSpec { name: "T".into(), extra_field: true }],
        bcs,
        ics: vec![ParamFn::Const(BATTERY_T_INITIAL)],
        residuals: Arc::new(BatteryResiduals),
        truth: None,
    }
}

struct NavierStokes2d {
    nu: f64,
}

impl ResidualSet for NavierStokes2d {
    fn count(&self) -> usize {
        3
    }

    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>> {
        let u = &ctx.fields[0];
        let v = &ctx.fields[1];
        let pr = &ctx.fields[2];
        let conv_u = u.u.var() * u.p[0].var() + v.u.var() * u.p[1].var();
        let conv_v = u.u.var() * v.p[0].var() + v.u.var() * v.p[1].var();
        let mom_u = conv_u + pr.u.tangent(0) - u.div_p() * self.nu;
        let mom_v = conv_v + pr.u.tangent(1) - v.div_p() * self.nu;
        let continuity = u.p[0].var() + v.p[1].var();
        vec![mom_u, mom_v, continuity]
    }
}

fn naca0015_polygon(n: usize) -> Shape {
    let thickness = |xb: f64| {
        5.0 * 0.15
            * (0.2969 * xb.sqrt() - 0.1260 * xb - 0.3516 * xb * xb + 0.2843 * xb.powi(3)
                - 0.1036 * xb.powi(4))
    };
    let station = |i: usize| 0.5 * (1.0 - (PI * i as f64 / n as f64).cos());
    let mut vertices = Vec::with_capacity(2 * n);
    for i in 0..=n {
        let xb = station(i);
        vertices.push([xb, thickness(xb)]);
    }
    for i in (1..n).rev() {
        let xb = station(i);
        vertices.push([xb, -thickness(xb)]);
    }
    Shape::Polygon { vertices }
}

/// Steady incompressible flow past a symmetric airfoil at Re = 50. Inlet,
/// top and bottom carry the free stream, the outlet is traction-free in
/// the gradient sense, and the airfoil surface is no-slip. No reference
/// solution ships with it; the case exercises polygon geometry and
/// multi-field assembly.
pub fn airfoil_ns() -> ProblemSpec {
    let (x0, x1, y0, y1) = (-4.0, 8.0, -4.0, 4.0);
    let outer = Shape::Rectangle { x0, x1, y0, y1 };
    let farfield = Shape::HalfOpenRectangle { x0, x1, y0, y1, open: Side::Right };
    let outlet = Shape::RectSide { x0, x1, y0, y1, side: Side::Right };
    let airfoil = naca0015_polygon(120);
    let domain = Domain::new(
        outer,
        vec![airfoil.clone()],
        vec![
            ("farfield".to_string(), farfield),
            ("outlet".to_string(), outlet),
            ("airfoil".to_string(), airfoil),
        ],
    )
    .expect("airfoil domain");

    let dirichlet = |region: &str, field: usize, g: f64, subnet: &str| BcDef {
        bc: BoundaryCondition::dirichlet(region, field, ParamFn::Const(g)),
        subnet: subnet.to_string(),
    };
    let neumann_zero = |region: &str, field: usize, subnet: &str| BcDef {
        bc: BoundaryCondition::neumann(region, field, ParamFn::Const(0.0)),
        subnet: subnet.to_string(),
    };
    let bcs = vec![
        dirichlet("farfield", 0, 1.0, "u_farfield"),
        dirichlet("airfoil", 0, 0.0, "u_airfoil"),
        neumann_zero("outlet", 0, "u_outlet"),
        dirichlet("farfield", 1, 0.0, "v_farfield"),
        dirichlet("airfoil", 1, 0.0, "v_airfoil"),
        neumann_zero("outlet", 1, "v_outlet"),
        dirichlet("outlet", 2, 0.0, "p_outlet"),
    ];

    ProblemSpec {
        name: "airfoil_ns".into(),
        domain,
        time_horizon: None,
        fields: vec![
            FieldSpec { name: "u".into(), extra_field: true },
            FieldSpec { name: "v".into(), extra_field: true },
            FieldSpec { name: "p".into(), extra_field: false },
        ],
        bcs,
        ics: vec![],
        residuals: Arc::new(NavierStokes2d { nu: 1.0 / 50.0 }),
        truth: None,
    }
}

struct SchrodingerResiduals;

impl ResidualSet for SchrodingerResiduals {
    fn count(&self) -> usize {
        2
    }

    fn eval<'t>(&self, ctx: &ResidualCtx<'_, 't>) -> Vec<Var<'t>> {
        let re = &ctx.fields[0];
        let im = &ctx.fields[1];
        let v = re.u.var();
        let w = im.u.var();
        let mag = v * v + w * w;
        vec![
            -im.du_dt(1) + re.div_p() * 0.5 + mag * v,
            re.du_dt(1) + im.div_p() * 0.5 + mag * w,
        ]
    }

    fn eval_second_order<'t>(&self, ctx: &SecondOrderCtx<'_, 't>) -> Option<Vec<Var<'t>>> {
        let re = &ctx.fields[0];
        let im = &ctx.fields[1];
        let mag = re.val * re.val + im.val * im.val;
        Some(vec![
            -im.tangent(1) + re.d2 * 0.5 + mag * re.val,
            re.tangent(1) + im.d2 * 0.5 + mag * im.val,
        ])
    }
}

/// Cubic Schrödinger equation i·h_t + h_xx/2 + |h|²h = 0 split into real
/// and imaginary fields, with a 2·sech(x) initial pulse. The decaying far
/// field is approximated by homogeneous end values on [-5, 5].
pub fn schrodinger() -> ProblemSpec {
    let interval = Shape::Interval { x0: -5.0, x1: 5.0 };
    let domain = Domain::new(
        interval.clone(),
        vec![],
        vec![("ends".to_string(), interval)],
    )
    .expect("interval domain");
    let sech_ic = ParamFn::from_fn(|x| {
        let ex = x[0].exp();
        let emx = x[0].neg().exp();
        let four = Dual::constant(x[0].tape(), 4.0, x[0].n_dirs());
        four.div(&ex.add(&emx))
    });
    ProblemSpec {
        name: "schrodinger".into(),
        domain,
        time_horizon: Some(FRAC_PI_2),
        fields: vec![
            FieldSpec { name: "re".into(), extra_field: true },
            FieldSpec { name: "im".into(), extra_field: true },
        ],
        bcs: vec![
            BcDef {
                bc: BoundaryCondition::dirichlet("ends", 0, ParamFn::Const(0.0)),
                subnet: "re_ends".into(),
            },
            BcDef {
                bc: BoundaryCondition::dirichlet("ends", 1, ParamFn::Const(0.0)),
                subnet: "im_ends".into(),
            },
        ],
        ics: vec![sech_ic, ParamFn::Const(0.0)],
        residuals: Arc::new(SchrodingerResiduals),
        truth: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub label: String,
    pub mae: f64,
    pub mape: f64,
    pub wmape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    pub field: String,
    pub slices: Vec<SliceMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fields: Vec<FieldMetrics>,
}

impl Metrics {
    /// Metric value for one field and slice label, if present.
    pub fn get(&self, field: &str, label: &str) -> Option<&SliceMetrics> {
        self.fields
            .iter()
            .find(|f| f.field == field)?
            .slices
            .iter()
            .find(|s| s.label == label)
    }
}

pub enum TruthSource {
    Analytic(Arc<dyn Truth>),
    Table(RefTable),
}

impl TruthSource {
    fn values(&self, x: &[f64], t: Option<f64>) -> Vec<f64> {
        match self {
            TruthSource::Analytic(a) => a.u(x, t),
            TruthSource::Table(tb) => tb.lookup(x, t).to_vec(),
        }
    }
}

struct ErrAccum {
    abs_sum: f64,
    n: usize,
    rel_sum: f64,
    rel_n: usize,
    abs_total: f64,
    truth_total: f64,
}

impl ErrAccum {
    fn new() -> Self {
        ErrAccum { abs_sum: 0.0, n: 0, rel_sum: 0.0, rel_n: 0, abs_total: 0.0, truth_total: 0.0 }
    }

    fn push(&mut self, pred: f64, truth: f64) {
        let e = (pred - truth).abs();
        self.abs_sum += e;
        self.n += 1;
        if truth.abs() > 1e-12 {
            self.rel_sum += e / truth.abs();
            self.rel_n += 1;
        }
        self.abs_total += e;
        self.truth_total += truth.abs();
    }

    fn finish(&self, label: &str) -> SliceMetrics {
        SliceMetrics {
            label: label.to_string(),
            mae: if self.n == 0 { 0.0 } else { self.abs_sum / self.n as f64 },
            mape: if self.rel_n == 0 { 0.0 } else { self.rel_sum / self.rel_n as f64 },
            wmape: if self.truth_total == 0.0 {
                0.0
            } else {
                self.abs_total / self.truth_total
            },
        }
    }
}

/// Compare predictions against a truth source over test points. Transient
/// problems report slices at t = 0, T/2, T plus an `average` slice pooled
/// over an eleven-point time grid; steady problems report one `steady`
/// slice.
pub fn evaluate_metrics<F, E>(
    mut predict: F,
    truth: &TruthSource,
    points: &[Vec<f64>],
    field_names: &[String],
    horizon: Option<f64>,
) -> Result<Metrics, ProblemError>
where
    F: FnMut(&[f64], Option<f64>) -> Result<Vec<f64>, E>,
    E: std::fmt::Display,
{
    let slices: Vec<(String, Vec<Option<f64>>)> = match horizon {
        None => vec![("steady".to_string(), vec![None])],
        Some(th) => {
            let grid: Vec<Option<f64>> = (0..=10).map(|i| Some(th * i as f64 / 10.0)).collect();
            vec![
                ("t=0".to_string(), vec![Some(0.0)]),
                (format!("t={}", th / 2.0), vec![Some(th / 2.0)]),
                (format!("t={th}"), vec![Some(th)]),
                ("average".to_string(), grid),
            ]
        }
    };
    let mut fields = Vec::with_capacity(field_names.len());
    for name in field_names {
        fields.push(FieldMetrics { field: name.clone(), slices: Vec::new() });
    }
    for (label, times) in &slices {
        let mut accums: Vec<ErrAccum> = field_names.iter().map(|_| ErrAccum::new()).collect();
        for t in times {
            for x in points {
                let pred = predict(x, *t).map_err(|e| ProblemError::Prediction(e.to_string()))?;
                if pred.len() != field_names.len() {
                    return Err(ProblemError::Prediction(format!(
                        "expected {} field values, got {}",
                        field_names.len(),
                        pred.len()
                    )));
                }
                let tv = truth.values(x, *t);
                for (j, acc) in accums.iter_mut().enumerate() {
                    acc.push(pred[j], tv[j]);
                }
            }
        }
        for (fm, acc) in fields.iter_mut().zip(&accums) {
            fm.slices.push(acc.finish(label));
        }
    }
    Ok(Metrics { fields })
}

/// Point-sampled reference values with nearest-point lookup. The CSV layout
/// is `x1,..,xd[,t],<field names>`, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RefTable {
    pub dim: usize,
    pub has_time: bool,
    pub field_names: Vec<String>,
    rows: Vec<(Vec<f64>, Vec<f64>)>,
}

impl RefTable {
    pub fn new(
        dim: usize,
        has_time: bool,
        field_names: Vec<String>,
        rows: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<RefTable, ProblemError> {
        if dim == 0 || field_names.is_empty() || rows.is_empty() {
            return Err(ProblemError::Reference(
                "table needs coordinates, fields and at least one row".into(),
            ));
        }
        let coord_w = dim + usize::from(has_time);
        for (i, (c, v)) in rows.iter().enumerate() {
            if c.len() != coord_w || v.len() != field_names.len() {
                return Err(ProblemError::Reference(format!(
                    "row {} has {} coordinates and {} values, expected {} and {}",
                    i + 1,
                    c.len(),
                    v.len(),
                    coord_w,
                    field_names.len()
                )));
            }
        }
        Ok(RefTable { dim, has_time, field_names, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values at the stored sample nearest to (x, t); ties keep the
    /// earliest row.
    pub fn lookup(&self, x: &[f64], t: Option<f64>) -> &[f64] {
        let mut q: Vec<f64> = x.to_vec();
        if let Some(tv) = t {
            q.push(tv);
        }
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, (c, _)) in self.rows.iter().enumerate() {
            let d2: f64 = c.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        &self.rows[best].1
    }

    pub fn save(&self, path: &Path) -> Result<(), ProblemError> {
        let mut text = String::new();
        for k in 0..self.dim {
            text.push_str(&format!("x{},", k + 1));
        }
        if self.has_time {
            text.push_str("t,");
        }
        text.push_str(&self.field_names.join(","));
        text.push('\n');
        for (c, v) in &self.rows {
            let mut cols: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
            cols.extend(v.iter().map(|x| format!("{x}")));
            text.push_str(&cols.join(","));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| ProblemError::Reference(e.to_string()))
    }
}

/// Read a reference table. Leading `x1..xd` headers name the coordinates,
/// an optional `t` column follows, and every remaining column is a field.
pub fn load_reference(path: &Path) -> Result<RefTable, ProblemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProblemError::Reference(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| ProblemError::Reference("empty file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let mut dim = 0;
    while dim < names.len() && names[dim] == format!("x{}", dim + 1) {
        dim += 1;
    }
    if dim == 0 {
        return Err(ProblemError::Reference(
            "header must start with coordinate columns x1, x2, ...".into(),
        ));
    }
    let mut idx = dim;
    let has_time = idx < names.len() && names[idx] == "t";
    if has_time {
        idx += 1;
    }
    if idx == names.len() {
        return Err(ProblemError::Reference("header lists no field columns".into()));
    }
    let field_names: Vec<String> = names[idx..].iter().map(|s| s.to_string()).collect();
    let coord_w = idx;
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != names.len() {
            return Err(ProblemError::Reference(format!(
                "line {}: expected {} columns, got {}",
                lineno + 1,
                names.len(),
                cols.len()
            )));
        }
        let mut vals = Vec::with_capacity(cols.len());
        for c in &cols {
            vals.push(c.parse::<f64>().map_err(|_| {
                ProblemError::Reference(format!("line {}: bad number {c:?}", lineno + 1))
            })?);
        }
        let coords = vals[..coord_w].to_vec();
        let fields = vals[coord_w..].to_vec();
        rows.push((coords, fields));
    }
    RefTable::new(dim, has_time, field_names, rows)
}
