//! Boundary conditions `a·u + b·(n·∇u) = g`, their normalized form, and
//! general solutions that satisfy them identically.
//!
//! After substituting the auxiliary gradient field p = ∇u, the condition is
//! linear in the stacked vector (u, p): with ñ = (a, b·n)/sqrt(a²+b²) and
//! g̃ = g/sqrt(a²+b²) it reads ñ·(u, p) = g̃. The full solution family is
//! (I − ññᵀ)·w + ñ·g̃ over arbitrary w, which [`general_solution`] evaluates
//! with w taken from a sub-network output. Whatever the sub-network
//! parameters, the result satisfies the condition to rounding error.

use std::fmt;
use std::sync::Arc;

use crate::autodiff::{Dual, Tape};

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryError {
    /// a(x) and b(x) both vanish, so the condition constrains nothing.
    DegenerateCoefficients { a: f64, b: f64 },
    NonUnitNormal { norm: f64 },
    WidthMismatch { expected: usize, got: usize },
}

impl fmt::Display for BoundaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryError::DegenerateCoefficients { a, b } => {
                write!(f, "boundary coefficients a={a}, b={b} are both zero")
            }
            BoundaryError::NonUnitNormal { norm } => {
                write!(f, "normal vector has length {norm}, expected 1")
            }
            BoundaryError::WidthMismatch { expected, got } => {
                write!(f, "expected a vector of width {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for BoundaryError {}

/// A scalar function over domain points, evaluable on plain values and on
/// dual numbers. Time-dependent problems pass t appended as the last input
/// coordinate.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;
    fn eval_dual<'t>(&self, x: &[Dual<'t>]) -> Dual<'t>;
}

/// Adapter turning a single dual-number closure into a [`ScalarField`]; the
/// plain evaluation runs the closure on a scratch tape with no tangents.
pub struct DualField<F>(pub F);

impl<F> ScalarField for DualField<F>
where
    F: for<'t> Fn(&[Dual<'t>]) -> Dual<'t> + Send + Sync,
{
    fn eval(&self, x: &[f64]) -> f64 {
        let tape = Tape::new();
        let xs: Vec<Dual<'_>> = x.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
        let out = (self.0)(&xs).value();
        out
    }

    fn eval_dual<'t>(&self, x: &[Dual<'t>]) -> Dual<'t> {
        (self.0)(x)
    }
}

/// Coordinate space in which sampled boundary data is interpolated.
#[derive(Clone, Debug)]
pub enum CoordSpace {
    Identity,
    /// Map 2D points to (radius, angle) about a reference point. The angle
    /// lives in (-pi, pi], so sample sets spanning that cut see the jump.
    PolarAround([f64; 2]),
}

/// Inverse-distance-weighted interpolant extending tabulated boundary values
/// to the whole domain; exact at the sample points.
#[derive(Clone)]
pub struct IdwInterpolant {
    mapped: Vec<(Vec<f64>, f64)>,
    power: i32,
    space: CoordSpace,
}

impl fmt::Debug for IdwInterpolant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdwInterpolant")
            .field("samples", &self.mapped.len())
            .field("power", &self.power)
            .finish()
    }
}

fn idw_weight(d2: f64, power: i32) -> f64 {
    if power % 2 == 0 {
        d2.powi(-power / 2)
    } else {
        d2.sqrt().powi(-power)
    }
}

impl IdwInterpolant {
    pub fn new(samples: Vec<(Vec<f64>, f64)>, power: i32, space: CoordSpace) -> IdwInterpolant {
        assert!(!samples.is_empty(), "interpolant needs at least one sample");
        assert!(power >= 1, "weight power must be positive");
        let mapped = samples
            .into_iter()
            .map(|(x, v)| (map_coords(&space, &x), v))
            .collect();
        IdwInterpolant { mapped, power, space }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let q = map_coords(&self.space, x);
        let mut num = 0.0;
        let mut den = 0.0;
        for (s, v) in &self.mapped {
            let d2: f64 = q.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < 1e-28 {
                return *v;
            }
            let w = idw_weight(d2, self.power);
            num += w * v;
            den += w;
        }
        num / den
    }

    pub fn eval_dual<'t>(&self, x: &[Dual<'t>]) -> Dual<'t> {
        let q = map_coords_dual(&self.space, x);
        let tape = x[0].tape();
        let nd = x[0].n_dirs();
        // exact hit: the weights blow up, so short-circuit to the sample
        for (s, v) in &self.mapped {
            let d2: f64 = q
                .iter()
                .zip(s)
                .map(|(a, b)| (a.value() - b) * (a.value() - b))
                .sum();
            if d2 < 1e-28 {
                return Dual::constant(tape, *v, nd);
            }
        }
        let mut num = Dual::constant(tape, 0.0, nd);
        let mut den = Dual::constant(tape, 0.0, nd);
        for (s, v) in &self.mapped {
            let mut d2 = q[0].add_const(-s[0]).square();
            for k in 1..q.len() {
                d2 = d2.add(&q[k].add_const(-s[k]).square());
            }
            let w = if self.power % 2 == 0 {
                d2.powi(-self.power / 2)
            } else {
                d2.sqrt().powi(-self.power)
            };
            num = num.add(&w.scale(*v));
            den = den.add(&w);
        }
        num.div(&den)
    }
}

fn map_coords(space: &CoordSpace, x: &[f64]) -> Vec<f64> {
    match space {
        CoordSpace::Identity => x.to_vec(),
        CoordSpace::PolarAround(c) => {
            let dx = x[0] - c[0];
            let dy = x[1] - c[1];
            vec![dx.hypot(dy), dy.atan2(dx)]
        }
    }
}

fn map_coords_dual<'t>(space: &CoordSpace, x: &[Dual<'t>]) -> Vec<Dual<'t>> {
    match space {
        CoordSpace::Identity => x.to_vec(),
        CoordSpace::PolarAround(c) => {
            let dx = x[0].add_const(-c[0]);
            let dy = x[1].add_const(-c[1]);
            let r = dx.square().add(&dy.square()).sqrt();
            vec![r, dy.atan2(&dx)]
        }
    }
}

/// One coefficient of a boundary condition: a constant, an interpolated
/// table, or an arbitrary closed-form field.
#[derive(Clone)]
pub enum ParamFn {
    Const(f64),
    Interp(IdwInterpolant),
    Custom(Arc<dyn ScalarField>),
}

impl fmt::Debug for ParamFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamFn::Const(v) => write!(f, "Const({v})"),
            ParamFn::Interp(i) => i.fmt(f),
            ParamFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ParamFn {
    /// Wrap a dual-number closure.
    pub fn from_fn<F>(f: F) -> ParamFn
    where
        F: for<'t> Fn(&[Dual<'t>]) -> Dual<'t> + Send + Sync + 'static,
    {
        ParamFn::Custom(Arc::new(DualField(f)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ParamFn::Const(v) => *v,
            ParamFn::Interp(i) => i.eval(x),
            ParamFn::Custom(f) => f.eval(x),
        }
    }

    pub fn eval_dual<'t>(&self, x: &[Dual<'t>]) -> Dual<'t> {
        match self {
            ParamFn::Const(v) => Dual::constant(x[0].tape(), *v, x[0].n_dirs()),
            ParamFn::Interp(i) => i.eval_dual(x),
            ParamFn::Custom(f) => f.eval_dual(x),
        }
    }
}

/// `a·u + b·(n·∇u) = g` on a named boundary region, constraining one field.
#[derive(Clone, Debug)]
pub struct BoundaryCondition {
    pub region: String,
    pub field: usize,
    pub a: ParamFn,
    pub b: ParamFn,
    pub g: ParamFn,
}

impl BoundaryCondition {
    pub fn dirichlet(region: &str, field: usize, g: ParamFn) -> BoundaryCondition {
        BoundaryCondition {
            region: region.to_string(),
            field,
            a: ParamFn::Const(1.0),
            b: ParamFn::Const(0.0),
            g,
        }
    }

    pub fn neumann(region: &str, field: usize, g: ParamFn) -> BoundaryCondition {
        BoundaryCondition {
            region: region.to_string(),
            field,
            a: ParamFn::Const(0.0),
            b: ParamFn::Const(1.0),
            g,
        }
    }

    pub fn robin(
        region: &str,
        field: usize,
        a: ParamFn,
        b: ParamFn,
        g: ParamFn,
    ) -> BoundaryCondition {
        BoundaryCondition {
            region: region.to_string(),
            field,
            a,
            b,
            g,
        }
    }
}

/// Normalized condition data at a point: ñ = (a, b·n)/sqrt(a²+b²) of length
/// d+1 and g̃ = g/sqrt(a²+b²). `xt` feeds the coefficient functions (spatial
/// coordinates, plus t when time-dependent); `normal` is the spatial unit
/// normal of length d.
pub fn normalize(
    bc: &BoundaryCondition,
    xt: &[f64],
    normal: &[f64],
) -> Result<(Vec<f64>, f64), BoundaryError> {
    let a = bc.a.eval(xt);
    let b = bc.b.eval(xt);
    let g = bc.g.eval(xt);
    let s2 = a * a + b * b;
    if !(s2 > 1e-24) {
        return Err(BoundaryError::DegenerateCoefficients { a, b });
    }
    let s = s2.sqrt();
    let mut n_tilde = Vec::with_capacity(normal.len() + 1);
    n_tilde.push(a / s);
    for nk in normal {
        n_tilde.push(b * nk / s);
    }
    Ok((n_tilde, g / s))
}

/// Dual-number version of [`normalize`]; tangents flow through a, b, g and
/// the normal field.
pub fn normalize_dual<'t>(
    bc: &BoundaryCondition,
    xt: &[Dual<'t>],
    normal: &[Dual<'t>],
) -> Result<(Vec<Dual<'t>>, Dual<'t>), BoundaryError> {
    let a = bc.a.eval_dual(xt);
    let b = bc.b.eval_dual(xt);
    let g = bc.g.eval_dual(xt);
    let s2 = a.value() * a.value() + b.value() * b.value();
    if !(s2 > 1e-24) {
        return Err(BoundaryError::DegenerateCoefficients {
            a: a.value(),
            b: b.value(),
        });
    }
    let s = a.square().add(&b.square()).sqrt();
    let mut n_tilde = Vec::with_capacity(normal.len() + 1);
    n_tilde.push(a.div(&s));
    for nk in normal {
        n_tilde.push(b.mul(nk).div(&s));
    }
    Ok((n_tilde, g.div(&s)))
}

/// The orthogonal projector I − ññᵀ onto the null space of ñ·(·). Symmetric,
/// idempotent, rank d for any unit ñ of length d+1.
pub fn householder_basis(n_tilde: &[f64]) -> Result<Vec<Vec<f64>>, BoundaryError> {
    let norm = n_tilde.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(BoundaryError::NonUnitNormal { norm });
    }
    let m = n_tilde.len();
    let mut b = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            b[i][j] = f64::from(u8::from(i == j)) - n_tilde[i] * n_tilde[j];
        }
    }
    Ok(b)
}

/// Apply I − ññᵀ to `v` without materializing the matrix.
pub fn project_dual<'t>(n_tilde: &[Dual<'t>], v: &[Dual<'t>]) -> Vec<Dual<'t>> {
    debug_assert_eq!(n_tilde.len(), v.len());
    let mut dot = n_tilde[0].mul(&v[0]);
    for k in 1..v.len() {
        dot = dot.add(&n_tilde[k].mul(&v[k]));
    }
    v.iter()
        .zip(n_tilde)
        .map(|(vk, nk)| vk.sub(&nk.mul(&dot)))
        .collect()
}

/// Low-dimensional null-space basis for d=2 (three redundant columns, rank
/// two for every unit ñ). Kept alongside the projector for comparison tests.
pub fn cross2d(n_tilde: &[f64]) -> [[f64; 3]; 3] {
    assert_eq!(n_tilde.len(), 3);
    let [n1, n2, n3] = [n_tilde[0], n_tilde[1], n_tilde[2]];
    [[0.0, n3, -n2], [-n3, 0.0, n1], [n2, -n1, 0.0]]
}

/// Null-space basis for d=1: the single vector (ñ₂, −ñ₁).
pub fn perp1d(n_tilde: &[f64]) -> [f64; 2] {
    assert_eq!(n_tilde.len(), 2);
    [n_tilde[1], -n_tilde[0]]
}

/// Boundary-satisfying general solution (u, p) = (I − ññᵀ)·w + ñ·g̃ at one
/// point, with `w` the sub-network output (width d+1) and `normal` the unit
/// normal (width d). For any w the result satisfies ñ·(u, p) = g̃ exactly up
/// to rounding.
pub fn general_solution<'t>(
    bc: &BoundaryCondition,
    normal: &[Dual<'t>],
    nn_out: &[Dual<'t>],
    xt: &[Dual<'t>],
) -> Result<Vec<Dual<'t>>, BoundaryError> {
    if nn_out.len() != normal.len() + 1 {
        return Err(BoundaryError::WidthMismatch {
            expected: normal.len() + 1,
            got: nn_out.len(),
        });
    }
    let (n_tilde, g_tilde) = normalize_dual(bc, xt, normal)?;
    let mut dot = n_tilde[0].mul(&nn_out[0]);
    for k in 1..nn_out.len() {
        dot = dot.add(&n_tilde[k].mul(&nn_out[k]));
    }
    let excess = dot.sub(&g_tilde);
    Ok(nn_out
        .iter()
        .zip(&n_tilde)
        .map(|(wk, nk)| wk.sub(&nk.mul(&excess)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::input_gradient;
    use crate::geometry::Shape;
    use crate::network::{MlpParams, MlpSpec, TapeNet};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-3 {
                return v.into_iter().map(|a| a / n).collect();
            }
        }
    }

    #[test]
    fn dirichlet_and_neumann_normalize_to_axes() {
        let d = BoundaryCondition::dirichlet("edge", 0, ParamFn::Const(7.5));
        let (n_tilde, g_tilde) = normalize(&d, &[0.3, 0.4], &[0.6, 0.8]).unwrap();
        assert_eq!(n_tilde, vec![1.0, 0.0, 0.0]);
        assert_eq!(g_tilde, 7.5);

        let n = BoundaryCondition::neumann("edge", 0, ParamFn::Const(0.0));
        let (n_tilde, g_tilde) = normalize(&n, &[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(n_tilde, vec![0.0, 0.0, 1.0]);
        assert_eq!(g_tilde, 0.0);
    }

    #[test]
    fn convective_robin_normalization() {
        // unit heat-transfer and conductivity coefficients, ambient value 5
        let bc = BoundaryCondition::robin(
            "cell",
            0,
            ParamFn::Const(1.0),
            ParamFn::Const(1.0),
            ParamFn::Const(5.0),
        );
        let (n_tilde, g_tilde) = normalize(&bc, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        let s = 2.0_f64.sqrt();
        assert_relative_eq!(n_tilde[0], 1.0 / s, max_relative = 1e-15);
        assert_relative_eq!(n_tilde[1], 1.0 / s, max_relative = 1e-15);
        assert_eq!(n_tilde[2], 0.0);
        assert_relative_eq!(g_tilde, 5.0 / s, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_coefficients_are_rejected() {
        let bc = BoundaryCondition::robin(
            "r",
            0,
            ParamFn::Const(0.0),
            ParamFn::Const(0.0),
            ParamFn::Const(1.0),
        );
        assert!(matches!(
            normalize(&bc, &[0.0], &[1.0]),
            Err(BoundaryError::DegenerateCoefficients { .. })
        ));
    }

    #[test]
    fn householder_layouts() {
        let b = householder_basis(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(b, vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0]
        ]);

        let s = 2.0_f64.sqrt();
        let b = householder_basis(&[1.0 / s, 1.0 / s, 0.0]).unwrap();
        let want = [[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(b[i][j], want[i][j], epsilon = 1e-15);
            }
        }

        assert!(matches!(
            householder_basis(&[1.0, 1.0]),
            Err(BoundaryError::NonUnitNormal { .. })
        ));
    }

    #[test]
    fn householder_is_an_orthogonal_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [1usize, 2, 3, 10] {
            let m = d + 1;
            for trial in 0..200 {
                let n = random_unit(&mut rng, m);
                let b = householder_basis(&n).unwrap();
                // B n = 0
                for row in &b {
                    let r: f64 = row.iter().zip(&n).map(|(x, y)| x * y).sum();
                    assert!(r.abs() <= 1e-12);
                }
                // symmetric by construction, idempotent numerically
                let mut max_dev: f64 = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        assert_eq!(b[i][j], b[j][i]);
                        let bb: f64 = (0..m).map(|k| b[i][k] * b[k][j]).sum();
                        max_dev = max_dev.max((bb - b[i][j]).abs());
                    }
                }
                assert!(max_dev <= 1e-12);
                if trial == 0 {
                    let flat: Vec<f64> = b.iter().flatten().copied().collect();
                    let mat = DMatrix::from_row_slice(m, m, &flat);
                    let mut eig: Vec<f64> =
                        mat.symmetric_eigen().eigenvalues.iter().copied().collect();
                    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    assert!(eig[0].abs() <= 1e-10);
                    for e in &eig[1..] {
                        assert!((e - 1.0).abs() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn cross2d_columns_span_the_null_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let n = random_unit(&mut rng, 3);
            let cols = cross2d(&n);
            for c in &cols {
                let dot: f64 = c.iter().zip(&n).map(|(x, y)| x * y).sum();
                assert!(dot.abs() <= 1e-14);
            }
            let mat = DMatrix::from_fn(3, 3, |i, j| cols[j][i]);
            assert_eq!(mat.rank(1e-9), 2);
        }
    }

    #[test]
    fn perp1d_is_orthogonal_and_nonzero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = random_unit(&mut rng, 2);
            let b = perp1d(&n);
            assert!((b[0] * n[0] + b[1] * n[1]).abs() <= 1e-15);
            assert_relative_eq!(
                (b[0] * b[0] + b[1] * b[1]).sqrt(),
                1.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn naive_cross_basis_degenerates_where_householder_does_not() {
        // the tempting d=3 basis {(n2,-n1,0), (n3,0,-n1)} collapses to rank
        // one wherever n1 = 0; the projector keeps full rank there
        for phi in [0.0f64, 0.7, 2.1] {
            let n = [0.0, phi.cos(), phi.sin()];
            let cols = [[n[1], -n[0], 0.0], [n[2], 0.0, -n[0]]];
            let naive = DMatrix::from_fn(3, 2, |i, j| cols[j][i]);
            assert!(naive.rank(1e-9) <= 1);

            let n_tilde = [0.0, n[0], n[1], n[2]]; // pure flux condition
            let b = householder_basis(&n_tilde).unwrap();
            let flat: Vec<f64> = b.iter().flatten().copied().collect();
            let mat = DMatrix::from_row_slice(4, 4, &flat);
            assert_eq!(mat.rank(1e-9), 3);
        }
    }

    #[test]
    fn general_solution_with_zero_subnet_lifts_the_data() {
        let bc = BoundaryCondition::robin(
            "cell",
            0,
            ParamFn::Const(1.0),
            ParamFn::Const(1.0),
            ParamFn::Const(5.0),
        );
        let tape = Tape::new();
        let x = [
            Dual::constant(&tape, 3.7, 0),
            Dual::constant(&tape, 3.0, 0),
        ];
        let shape = Shape::Circle {
            center: [2.7, 3.0],
            radius: 1.0,
        };
        let normal = shape.normal_dual(&x);
        let zero = vec![Dual::constant(&tape, 0.0, 0); 3];
        let sol = general_solution(&bc, &normal, &zero, &x).unwrap();
        let (n_tilde, g_tilde) = normalize_dual(&bc, &x, &normal).unwrap();
        for (s, n) in sol.iter().zip(&n_tilde) {
            assert_relative_eq!(s.value(), n.value() * g_tilde.value(), epsilon = 1e-15);
        }
        let resid: f64 = sol
            .iter()
            .zip(&n_tilde)
            .map(|(s, n)| s.value() * n.value())
            .sum::<f64>()
            - g_tilde.value();
        assert!(resid.abs() <= 1e-15);
    }

    #[test]
    fn general_solution_satisfies_the_condition_for_any_subnet() {
        let bc = BoundaryCondition::robin(
            "cell",
            0,
            ParamFn::Const(1.0),
            ParamFn::Const(1.0),
            ParamFn::Const(5.0),
        );
        let shape = Shape::Circle {
            center: [2.7, 3.0],
            radius: 1.0,
        };
        let spec = MlpSpec::tanh(vec![2, 16, 3]);
        let mut worst: f64 = 0.0;
        for seed in 0..5u64 {
            let params = MlpParams::init(spec.clone(), seed).unwrap();
            let (pts, _) = shape.sample_boundary(20, 100 + seed);
            for p in &pts {
                let tape = Tape::new();
                let net = TapeNet::bind(&tape, &params, false);
                let x: Vec<Dual<'_>> =
                    p.iter().map(|&v| Dual::constant(&tape, v, 0)).collect();
                let out = net.forward(&x).unwrap();
                let normal = shape.normal_dual(&x);
                let sol = general_solution(&bc, &normal, &out, &x).unwrap();
                let (n_tilde, g_tilde) = normalize_dual(&bc, &x, &normal).unwrap();
                let resid = sol
                    .iter()
                    .zip(&n_tilde)
                    .map(|(s, n)| s.value() * n.value())
                    .sum::<f64>()
                    - g_tilde.value();
                worst = worst.max(resid.abs());
            }
        }
        assert!(worst <= 1e-10, "worst residual {worst}");

        // wrong sub-network width is reported, not mangled
        let tape = Tape::new();
        let x = [
            Dual::constant(&tape, 3.7, 0),
            Dual::constant(&tape, 3.0, 0),
        ];
        let normal = shape.normal_dual(&x);
        let two = vec![Dual::constant(&tape, 0.0, 0); 2];
        assert!(matches!(
            general_solution(&bc, &normal, &two, &x),
            Err(BoundaryError::WidthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant(
            a in -5.0..5.0f64,
            b in -5.0..5.0f64,
            g in -5.0..5.0f64,
            lambda in 0.01..100.0f64,
            nx in -1.0..1.0f64,
            ny in -1.0..1.0f64,
        ) {
            prop_assume!(a * a + b * b > 1e-6);
            prop_assume!(nx * nx + ny * ny > 1e-6);
            let nn = (nx * nx + ny * ny).sqrt();
            let normal = [nx / nn, ny / nn];
            let base = BoundaryCondition::robin(
                "r", 0,
                ParamFn::Const(a), ParamFn::Const(b), ParamFn::Const(g),
            );
            let scaled = BoundaryCondition::robin(
                "r", 0,
                ParamFn::Const(lambda * a), ParamFn::Const(lambda * b), ParamFn::Const(lambda * g),
            );
            let (n1, g1) = normalize(&base, &[0.0, 0.0], &normal).unwrap();
            let (n2, g2) = normalize(&scaled, &[0.0, 0.0], &normal).unwrap();
            for (u, v) in n1.iter().zip(&n2) {
                prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
            }
            prop_assert!((g1 - g2).abs() <= 1e-12 * g1.abs().max(1.0));
        }
    }

    #[test]
    fn idw_interpolation_basics() {
        let idw = IdwInterpolant::new(
            vec![(vec![0.0], 0.0), (vec![1.0], 1.0)],
            2,
            CoordSpace::Identity,
        );
        assert_eq!(idw.eval(&[0.0]), 0.0);
        assert_eq!(idw.eval(&[1.0]), 1.0);
        assert_relative_eq!(idw.eval(&[0.5]), 0.5, epsilon = 1e-15);

        let flat = IdwInterpolant::new(
            vec![(vec![0.0, 0.0], 3.0), (vec![1.0, 2.0], 3.0), (vec![-1.0, 0.5], 3.0)],
            2,
            CoordSpace::Identity,
        );
        for q in [[0.3, 0.9], [5.0, -2.0]] {
            assert_relative_eq!(flat.eval(&q), 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn idw_polar_space_interpolates_along_the_arc() {
        use std::f64::consts::FRAC_PI_4;
        let idw = IdwInterpolant::new(
            vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 1.0)],
            2,
            CoordSpace::PolarAround([0.0, 0.0]),
        );
        // query on the same circle halfway in angle: equal weights
        let mid = [FRAC_PI_4.cos(), FRAC_PI_4.sin()];
        assert_relative_eq!(idw.eval(&mid), 0.5, epsilon = 1e-12);
        // radial offsets do not break exactness at samples
        assert_eq!(idw.eval(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn idw_dual_matches_plain_evaluation() {
        let idw = IdwInterpolant::new(
            vec![
                (vec![0.0, 0.0], 1.0),
                (vec![1.0, 0.3], -2.0),
                (vec![0.2, 1.1], 0.5),
            ],
            3,
            CoordSpace::Identity,
        );
        let q = [0.6, 0.4];
        let (val, grad) = input_gradient(|x| idw.eval_dual(x), &q).unwrap();
        assert_relative_eq!(val, idw.eval(&q), max_relative = 1e-12);
        let h = 1e-6;
        for k in 0..2 {
            let mut hi = q;
            let mut lo = q;
            hi[k] += h;
            lo[k] -= h;
            let fd = (idw.eval(&hi) - idw.eval(&lo)) / (2.0 * h);
            assert_relative_eq!(grad[k], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn polar_idw_dual_path_carries_angle_tangents() {
        let idw = IdwInterpolant::new(
            vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 1.0)],
            2,
            CoordSpace::PolarAround([0.0, 0.0]),
        );
        let q = [0.9, 0.35];
        let (val, grad) = input_gradient(|x| idw.eval_dual(x), &q).unwrap();
        assert_relative_eq!(val, idw.eval(&q), max_relative = 1e-12);
        let h = 1e-6;
        for k in 0..2 {
            let mut hi = q;
            let mut lo = q;
            hi[k] += h;
            lo[k] -= h;
            let fd = (idw.eval(&hi) - idw.eval(&lo)) / (2.0 * h);
            assert_relative_eq!(grad[k], fd, epsilon = 1e-6);
        }
    }
}
