//! Shape primitives: exact extended distances, unit normal fields, and
//! boundary samplers.
//!
//! Orientation is a fixed convention per variant rather than a flag. The
//! volumetric variants that bound a domain from outside (`Interval`,
//! `Rectangle`, `Ball`) measure distance from the inside, so their normals
//! point out of the domain. The obstacle variants (`Circle`, `Polygon`)
//! measure distance from the outside and their normals point into the hole.
//! Either way the normal at a boundary point is the direction of steepest
//! descent of the extended distance: out of the domain.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::Dual;

use super::GeometryError;

/// One side of an axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

const ALL_SIDES: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// 1D segment `[x0, x1]`; its boundary is the two endpoints.
    Interval { x0: f64, x1: f64 },
    /// Axis-aligned rectangle `[x0,x1] x [y0,y1]` bounding a 2D domain.
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Three closed sides of a rectangle; `open` names the excluded one.
    HalfOpenRectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        open: Side,
    },
    /// A single closed side of a rectangle.
    RectSide {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        side: Side,
    },
    /// Circular hole cut out of a 2D domain; distance is `|x-c| - r`.
    Circle { center: [f64; 2], radius: f64 },
    /// Solid d-ball bounding a domain; distance is `r - |x-c|`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Closed polygonal obstacle, vertices in walk order (either winding).
    Polygon { vertices: Vec<[f64; 2]> },
}

fn euclid(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn rect_side_distance(side: Side, x0: f64, x1: f64, y0: f64, y1: f64, p: &[f64]) -> f64 {
    match side {
        Side::Left => p[0] - x0,
        Side::Right => x1 - p[0],
        Side::Bottom => p[1] - y0,
        Side::Top => y1 - p[1],
    }
}

fn rect_side_distance_dual<'t>(
    side: Side,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    p: &[Dual<'t>],
) -> Dual<'t> {
    match side {
        Side::Left => p[0].add_const(-x0),
        Side::Right => p[0].neg().add_const(x1),
        Side::Bottom => p[1].add_const(-y0),
        Side::Top => p[1].neg().add_const(y1),
    }
}

fn side_normal(side: Side) -> [f64; 2] {
    match side {
        Side::Left => [-1.0, 0.0],
        Side::Right => [1.0, 0.0],
        Side::Bottom => [0.0, -1.0],
        Side::Top => [0.0, 1.0],
    }
}

fn polygon_edges(vertices: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| (vertices[i], vertices[(i + 1) % n]))
}

fn segment_distance(p: &[f64], a: [f64; 2], b: [f64; 2]) -> f64 {
    let vx = b[0] - a[0];
    let vy = b[1] - a[1];
    let wx = p[0] - a[0];
    let wy = p[1] - a[1];
    let vv = vx * vx + vy * vy;
    let t = if vv > 0.0 {
        ((wx * vx + wy * vy) / vv).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = wx - t * vx;
    let dy = wy - t * vy;
    (dx * dx + dy * dy).sqrt()
}

fn polygon_signed_area(vertices: &[[f64; 2]]) -> f64 {
    0.5 * polygon_edges(vertices)
        .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
        .sum::<f64>()
}

/// Unit normal of edge `a -> b` pointing into the polygon's interior.
fn edge_inward_normal(a: [f64; 2], b: [f64; 2], ccw: bool) -> [f64; 2] {
    let tx = b[0] - a[0];
    let ty = b[1] - a[1];
    let len = (tx * tx + ty * ty).sqrt();
    if ccw {
        [-ty / len, tx / len]
    } else {
        [ty / len, -tx / len]
    }
}

fn polygon_contains(vertices: &[[f64; 2]], p: &[f64]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (vertices[i][0], vertices[i][1]);
        let (xj, yj) = (vertices[j][0], vertices[j][1]);
        if (yi > p[1]) != (yj > p[1]) {
            let x_cross = xi + (p[1] - yi) * (xj - xi) / (yj - yi);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], p4: [f64; 2]) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            Shape::Ball { center, .. } => center.len(),
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match self {
            Shape::Interval { x0, x1 } => {
                if !finite(&[*x0, *x1]) || x0 >= x1 {
                    return Err(GeometryError::BadShape(format!(
                        "interval [{x0}, {x1}] is empty or not finite"
                    )));
                }
            }
            Shape::Rectangle { x0, x1, y0, y1 }
            | Shape::HalfOpenRectangle { x0, x1, y0, y1, .. }
            | Shape::RectSide { x0, x1, y0, y1, .. } => {
                if !finite(&[*x0, *x1, *y0, *y1]) || x0 >= x1 || y0 >= y1 {
                    return Err(GeometryError::BadShape(format!(
                        "rectangle [{x0}, {x1}] x [{y0}, {y1}] is empty or not finite"
                    )));
                }
            }
            Shape::Circle { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(GeometryError::BadShape(format!(
                        "circle with radius {radius} at {center:?}"
                    )));
                }
            }
            Shape::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(GeometryError::BadShape(format!(
                        "ball with radius {radius} at {center:?}"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(GeometryError::TooFewVertices(vertices.len()));
                }
                if !vertices.iter().all(|v| finite(v)) {
                    return Err(GeometryError::BadShape("non-finite polygon vertex".into()));
                }
                let n = vertices.len();
                for (i, (a, b)) in polygon_edges(vertices).enumerate() {
                    if a == b {
                        return Err(GeometryError::BadShape(format!(
                            "zero-length polygon edge at index {i}"
                        )));
                    }
                    for j in i + 2..n {
                        if i == 0 && j == n - 1 {
                            continue; // closing edge is adjacent to the first
                        }
                        let c = vertices[j];
                        let d = vertices[(j + 1) % n];
                        if segments_intersect(a, b, c, d) {
                            return Err(GeometryError::SelfIntersecting(i, j));
                        }
                    }
                }
                if polygon_signed_area(vertices).abs() == 0.0 {
                    return Err(GeometryError::BadShape("polygon area is zero".into()));
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounding box as (lower corner, upper corner).
    pub fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Interval { x0, x1 } => (vec![*x0], vec![*x1]),
            Shape::Rectangle { x0, x1, y0, y1 }
            | Shape::HalfOpenRectangle { x0, x1, y0, y1, .. } => {
                (vec![*x0, *y0], vec![*x1, *y1])
            }
            Shape::RectSide { x0, x1, y0, y1, side } => match side {
                Side::Left => (vec![*x0, *y0], vec![*x0, *y1]),
                Side::Right => (vec![*x1, *y0], vec![*x1, *y1]),
                Side::Bottom => (vec![*x0, *y0], vec![*x1, *y0]),
                Side::Top => (vec![*x0, *y1], vec![*x1, *y1]),
            },
            Shape::Circle { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo.to_vec(), hi.to_vec())
            }
        }
    }

    /// Whether `x` lies in the closed volume this shape encloses. Boundary
    /// pieces (`HalfOpenRectangle`, `RectSide`) enclose nothing.
    pub fn encloses(&self, x: &[f64]) -> bool {
        match self {
            Shape::Interval { x0, x1 } => x[0] >= *x0 && x[0] <= *x1,
            Shape::Rectangle { x0, x1, y0, y1 } => {
                x[0] >= *x0 && x[0] <= *x1 && x[1] >= *y0 && x[1] <= *y1
            }
            Shape::HalfOpenRectangle { .. } | Shape::RectSide { .. } => false,
            Shape::Circle { center, radius } => euclid(x, center) <= *radius,
            Shape::Ball { center, radius } => euclid(x, center) <= *radius,
            Shape::Polygon { vertices } => polygon_contains(vertices, x),
        }
    }

    /// Exact extended distance to this shape's boundary. Non-negative on the
    /// domain side of the boundary and zero exactly on it.
    pub fn exact_distance(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Shape::Interval { x0, x1 } => (x[0] - x0).min(x1 - x[0]),
            Shape::Rectangle { x0, x1, y0, y1 } => ALL_SIDES
                .iter()
                .map(|&s| rect_side_distance(s, *x0, *x1, *y0, *y1, x))
                .fold(f64::INFINITY, f64::min),
            Shape::HalfOpenRectangle { x0, x1, y0, y1, open } => ALL_SIDES
                .iter()
                .filter(|&&s| s != *open)
                .map(|&s| rect_side_distance(s, *x0, *x1, *y0, *y1, x))
                .fold(f64::INFINITY, f64::min),
            Shape::RectSide { x0, x1, y0, y1, side } => {
                rect_side_distance(*side, *x0, *x1, *y0, *y1, x)
            }
            Shape::Circle { center, radius } => euclid(x, center) - radius,
            Shape::Ball { center, radius } => radius - euclid(x, center),
            Shape::Polygon { vertices } => polygon_edges(vertices)
                .map(|(a, b)| segment_distance(x, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// The same distance evaluated on dual numbers, so the ansatz can carry
    /// input tangents through it.
    pub fn exact_distance_dual<'t>(&self, x: &[Dual<'t>]) -> Dual<'t> {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Shape::Interval { x0, x1 } => {
                let lo = x[0].add_const(-x0);
                let hi = x[0].neg().add_const(*x1);
                lo.min(&hi)
            }
            Shape::Rectangle { x0, x1, y0, y1 } => ALL_SIDES
                .iter()
                .map(|&s| rect_side_distance_dual(s, *x0, *x1, *y0, *y1, x))
                .reduce(|a, b| a.min(&b))
                .unwrap(),
            Shape::HalfOpenRectangle { x0, x1, y0, y1, open } => ALL_SIDES
                .iter()
                .filter(|&&s| s != *open)
                .map(|&s| rect_side_distance_dual(s, *x0, *x1, *y0, *y1, x))
                .reduce(|a, b| a.min(&b))
                .unwrap(),
            Shape::RectSide { x0, x1, y0, y1, side } => {
                rect_side_distance_dual(*side, *x0, *x1, *y0, *y1, x)
            }
            Shape::Circle { center, radius } => {
                let dx = x[0].add_const(-center[0]);
                let dy = x[1].add_const(-center[1]);
                dx.square().add(&dy.square()).sqrt().add_const(-radius)
            }
            Shape::Ball { center, radius } => {
                let mut ss = x[0].add_const(-center[0]).square();
                for k in 1..center.len() {
                    ss = ss.add(&x[k].add_const(-center[k]).square());
                }
                ss.sqrt().neg().add_const(*radius)
            }
            Shape::Polygon { vertices } => {
                let tape = x[0].tape();
                let nd = x[0].n_dirs();
                let zero = Dual::constant(tape, 0.0, nd);
                let one = Dual::constant(tape, 1.0, nd);
                let mut best: Option<Dual<'t>> = None;
                for (a, b) in polygon_edges(vertices) {
                    let vx = b[0] - a[0];
                    let vy = b[1] - a[1];
                    let vv = vx * vx + vy * vy;
                    let wx = x[0].add_const(-a[0]);
                    let wy = x[1].add_const(-a[1]);
                    let t = wx
                        .scale(vx / vv)
                        .add(&wy.scale(vy / vv))
                        .max(&zero)
                        .min(&one);
                    let dx = wx.sub(&t.scale(vx));
                    let dy = wy.sub(&t.scale(vy));
                    let d = dx.square().add(&dy.square()).sqrt();
                    best = Some(match best {
                        Some(m) => m.min(&d),
                        None => d,
                    });
                }
                best.unwrap()
            }
        }
    }

    /// Extended unit normal field: at boundary points this is the outward
    /// normal (out of the domain, into holes); elsewhere it extends by the
    /// nearest-feature rule, staying consistent with the distance convention.
    pub fn normal_at(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Shape::Interval { x0, x1 } => {
                if x[0] - x0 <= x1 - x[0] {
                    vec![-1.0]
                } else {
                    vec![1.0]
                }
            }
            Shape::Rectangle { x0, x1, y0, y1 } => {
                let side = nearest_side(ALL_SIDES.iter().copied(), *x0, *x1, *y0, *y1, x);
                side_normal(side).to_vec()
            }
            Shape::HalfOpenRectangle { x0, x1, y0, y1, open } => {
                let side = nearest_side(
                    ALL_SIDES.iter().copied().filter(|s| s != open),
                    *x0,
                    *x1,
                    *y0,
                    *y1,
                    x,
                );
                side_normal(side).to_vec()
            }
            Shape::RectSide { side, .. } => side_normal(*side).to_vec(),
            Shape::Circle { center, .. } => {
                let r = euclid(x, center);
                vec![-(x[0] - center[0]) / r, -(x[1] - center[1]) / r]
            }
            Shape::Ball { center, .. } => {
                let r = euclid(x, center);
                x.iter().zip(center).map(|(a, c)| (a - c) / r).collect()
            }
            Shape::Polygon { vertices } => {
                let ccw = polygon_signed_area(vertices) > 0.0;
                let mut best = (f64::INFINITY, [0.0, 0.0]);
                for (a, b) in polygon_edges(vertices) {
                    let d = segment_distance(x, a, b);
                    if d < best.0 {
                        best = (d, edge_inward_normal(a, b, ccw));
                    }
                }
                best.1.to_vec()
            }
        }
    }

    /// Dual-number view of [`Shape::normal_at`]. Spherical shapes carry real
    /// tangents; the piecewise-flat shapes branch on the point values and
    /// return constants (their normal fields are constant almost everywhere).
    pub fn normal_dual<'t>(&self, x: &[Dual<'t>]) -> Vec<Dual<'t>> {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Shape::Circle { center, .. } => {
                let dx = x[0].add_const(-center[0]);
                let dy = x[1].add_const(-center[1]);
                let r = dx.square().add(&dy.square()).sqrt();
                vec![dx.div(&r).neg(), dy.div(&r).neg()]
            }
            Shape::Ball { center, .. } => {
                let diffs: Vec<Dual<'t>> = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| a.add_const(-c))
                    .collect();
                let mut ss = diffs[0].square();
                for d in &diffs[1..] {
                    ss = ss.add(&d.square());
                }
                let r = ss.sqrt();
                diffs.iter().map(|d| d.div(&r)).collect()
            }
            _ => {
                let vals: Vec<f64> = x.iter().map(Dual::value).collect();
                let tape = x[0].tape();
                let nd = x[0].n_dirs();
                self.normal_at(&vals)
                    .into_iter()
                    .map(|c| Dual::constant(tape, c, nd))
                    .collect()
            }
        }
    }

    pub fn boundary_sampler(&self, seed: u64) -> BoundarySampler {
        let kind = match self {
            Shape::Interval { x0, x1 } => SamplerKind::Endpoints { x0: *x0, x1: *x1 },
            Shape::Rectangle { x0, x1, y0, y1 } => SamplerKind::walk(
                ALL_SIDES
                    .iter()
                    .map(|&s| rect_seg(s, *x0, *x1, *y0, *y1))
                    .collect(),
            ),
            Shape::HalfOpenRectangle { x0, x1, y0, y1, open } => SamplerKind::walk(
                ALL_SIDES
                    .iter()
                    .filter(|&&s| s != *open)
                    .map(|&s| rect_seg(s, *x0, *x1, *y0, *y1))
                    .collect(),
            ),
            Shape::RectSide { x0, x1, y0, y1, side } => {
                SamplerKind::walk(vec![rect_seg(*side, *x0, *x1, *y0, *y1)])
            }
            Shape::Circle { center, radius } => SamplerKind::Sphere {
                center: center.to_vec(),
                radius: *radius,
                inward: true,
            },
            Shape::Ball { center, radius } => SamplerKind::Sphere {
                center: center.clone(),
                radius: *radius,
                inward: false,
            },
            Shape::Polygon { vertices } => {
                let ccw = polygon_signed_area(vertices) > 0.0;
                SamplerKind::walk(
                    polygon_edges(vertices)
                        .map(|(a, b)| Seg::new(a, b, edge_inward_normal(a, b, ccw)))
                        .collect(),
                )
            }
        };
        BoundarySampler {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sample `n` boundary points uniformly (by arc length in 2D, by area on
    /// spheres) together with their unit normals.
    pub fn sample_boundary(&self, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut sampler = self.boundary_sampler(seed);
        let mut points = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for _ in 0..n {
            let (p, m) = sampler.next_point();
            points.push(p);
            normals.push(m);
        }
        (points, normals)
    }

    /// Load a polygon from a two-column `x y` text file. A leading free-text
    /// name line (the usual airfoil-file header) is skipped, and an explicit
    /// closing vertex equal to the first is dropped.
    pub fn polygon_from_file(path: &Path) -> Result<Shape, GeometryError> {
        let text = fs::read_to_string(path)
            .map_err(|e| GeometryError::PolygonFile(format!("{}: {e}", path.display())))?;
        Shape::polygon_from_str(&text)
    }

    pub fn polygon_from_str(text: &str) -> Result<Shape, GeometryError> {
        let mut vertices: Vec<[f64; 2]> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let x = toks.next().and_then(|t| t.parse::<f64>().ok());
            let y = toks.next().and_then(|t| t.parse::<f64>().ok());
            match (x, y) {
                (Some(x), Some(y)) if toks.next().is_none() => {
                    let v = [x, y];
                    let dup = vertices
                        .last()
                        .is_some_and(|l| euclid(l, &v) <= 1e-12);
                    if !dup {
                        vertices.push(v);
                    }
                }
                _ if lineno == 0 => continue,
                _ => {
                    return Err(GeometryError::PolygonFile(format!(
                        "line {}: expected two numbers, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        if vertices.len() > 1 && euclid(&vertices[0], vertices.last().unwrap()) <= 1e-12 {
            vertices.pop();
        }
        let shape = Shape::Polygon { vertices };
        shape.validate()?;
        Ok(shape)
    }
}

fn nearest_side(
    sides: impl Iterator<Item = Side>,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    p: &[f64],
) -> Side {
    let mut best: Option<(Side, f64)> = None;
    for s in sides {
        let d = rect_side_distance(s, x0, x1, y0, y1, p);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((s, d));
        }
    }
    best.unwrap().0
}

struct Seg {
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    nx: f64,
    ny: f64,
    len: f64,
}

impl Seg {
    fn new(a: [f64; 2], b: [f64; 2], normal: [f64; 2]) -> Seg {
        Seg {
            ax: a[0],
            ay: a[1],
            bx: b[0],
            by: b[1],
            nx: normal[0],
            ny: normal[1],
            len: (b[0] - a[0]).hypot(b[1] - a[1]),
        }
    }
}

fn rect_seg(side: Side, x0: f64, x1: f64, y0: f64, y1: f64) -> Seg {
    let (a, b) = match side {
        Side::Bottom => ([x0, y0], [x1, y0]),
        Side::Right => ([x1, y0], [x1, y1]),
        Side::Top => ([x1, y1], [x0, y1]),
        Side::Left => ([x0, y1], [x0, y0]),
    };
    Seg::new(a, b, side_normal(side))
}

enum SamplerKind {
    Endpoints { x0: f64, x1: f64 },
    Walk { segs: Vec<Seg>, cum: Vec<f64> },
    Sphere { center: Vec<f64>, radius: f64, inward: bool },
}

impl SamplerKind {
    fn walk(segs: Vec<Seg>) -> SamplerKind {
        let mut cum = Vec::with_capacity(segs.len());
        let mut acc = 0.0;
        for s in &segs {
            acc += s.len;
            cum.push(acc);
        }
        SamplerKind::Walk { segs, cum }
    }
}

/// Streaming boundary-point source; draws are reproducible from the seed and
/// consumed strictly in order, so prefixes of a longer stream match shorter
/// ones.
pub struct BoundarySampler {
    kind: SamplerKind,
    rng: ChaCha8Rng,
}

impl BoundarySampler {
    /// Next boundary point and its unit normal.
    pub fn next_point(&mut self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            SamplerKind::Endpoints { x0, x1 } => {
                if self.rng.gen::<f64>() < 0.5 {
                    (vec![*x0], vec![-1.0])
                } else {
                    (vec![*x1], vec![1.0])
                }
            }
            SamplerKind::Walk { segs, cum } => {
                let total = *cum.last().unwrap();
                let u = self.rng.gen::<f64>() * total;
                let i = cum.partition_point(|&c| c <= u).min(segs.len() - 1);
                let start = if i == 0 { 0.0 } else { cum[i - 1] };
                let s = &segs[i];
                let t = ((u - start) / s.len).clamp(0.0, 1.0);
                let p = vec![s.ax + t * (s.bx - s.ax), s.ay + t * (s.by - s.ay)];
                (p, vec![s.nx, s.ny])
            }
            SamplerKind::Sphere { center, radius, inward } => loop {
                let z: Vec<f64> = (0..center.len())
                    .map(|_| self.rng.sample(StandardNormal))
                    .collect();
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    let sign = if *inward { -1.0 } else { 1.0 };
                    let p = center
                        .iter()
                        .zip(&z)
                        .map(|(c, v)| c + radius * v / norm)
                        .collect();
                    let m = z.iter().map(|v| sign * v / norm).collect();
                    return (p, m);
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::input_gradient;
    use approx::assert_relative_eq;

    fn unit_square() -> Shape {
        Shape::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    #[test]
    fn circle_distance_is_radial() {
        let c = Shape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(c.exact_distance(&[2.0, 0.0]), 1.0);
        assert_relative_eq!(c.exact_distance(&[0.0, 3.0]), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn rectangle_distance_takes_nearest_side() {
        let r = Shape::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert_eq!(r.exact_distance(&[0.5, 0.5]), 0.5);
        assert_eq!(r.exact_distance(&[0.1, 0.5]), 0.1);
        assert_eq!(r.exact_distance(&[0.5, 0.0]), 0.0);
    }

    #[test]
    fn polygon_distance_matches_square() {
        let p = unit_square();
        assert_relative_eq!(p.exact_distance(&[2.0, 0.5]), 1.0, max_relative = 1e-15);
        assert_relative_eq!(p.exact_distance(&[0.5, 0.5]), 0.5, max_relative = 1e-15);
        // corner region: nearest feature is the vertex
        assert_relative_eq!(
            p.exact_distance(&[2.0, 2.0]),
            2.0_f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn polygon_distance_agrees_with_dense_scan() {
        let p = Shape::Polygon {
            vertices: vec![[0.0, 0.0], [2.0, 0.3], [1.7, 1.5], [0.4, 1.2]],
        };
        let Shape::Polygon { vertices } = &p else {
            unreachable!()
        };
        for q in [[2.5, 0.9], [-0.3, 0.4], [1.0, 2.3], [1.0, 0.7]] {
            let mut scan = f64::INFINITY;
            for (a, b) in polygon_edges(vertices) {
                for k in 0..=20_000 {
                    let t = k as f64 / 20_000.0;
                    let d = ((q[0] - (a[0] + t * (b[0] - a[0]))).powi(2)
                        + (q[1] - (a[1] + t * (b[1] - a[1]))).powi(2))
                    .sqrt();
                    scan = scan.min(d);
                }
            }
            assert_relative_eq!(p.exact_distance(&q), scan, epsilon = 1e-7);
        }
    }

    #[test]
    fn interval_endpoints_and_normals() {
        let i = Shape::Interval { x0: 0.0, x1: 2.0 };
        assert_eq!(i.exact_distance(&[0.5]), 0.5);
        assert_eq!(i.exact_distance(&[1.7]), 2.0 - 1.7);
        assert_eq!(i.normal_at(&[0.2]), vec![-1.0]);
        assert_eq!(i.normal_at(&[1.8]), vec![1.0]);
    }

    #[test]
    fn half_open_rectangle_ignores_open_side() {
        let h = Shape::HalfOpenRectangle {
            x0: 0.0,
            x1: 4.0,
            y0: 0.0,
            y1: 2.0,
            open: Side::Right,
        };
        // near the open side the distance is governed by top/bottom or left
        assert_eq!(h.exact_distance(&[3.9, 1.0]), 1.0);
        assert_eq!(h.exact_distance(&[4.0, 1.7]), 2.0 - 1.7);
        let s = Shape::RectSide {
            x0: 0.0,
            x1: 4.0,
            y0: 0.0,
            y1: 2.0,
            side: Side::Right,
        };
        assert_eq!(s.exact_distance(&[3.0, 1.0]), 1.0);
        assert_eq!(s.normal_at(&[3.0, 1.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn self_intersecting_polygon_is_rejected() {
        let bowtie = Shape::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        assert!(matches!(
            bowtie.validate(),
            Err(GeometryError::SelfIntersecting(_, _))
        ));
        assert!(unit_square().validate().is_ok());
    }

    #[test]
    fn polygon_loader_skips_header_and_closing_vertex() {
        let text = "SAMPLE FOIL\n1.0 0.0\n0.5 0.12\n0.0 0.0\n0.5 -0.12\n1.0 0.0\n";
        let shape = Shape::polygon_from_str(text).unwrap();
        let Shape::Polygon { vertices } = &shape else {
            unreachable!()
        };
        assert_eq!(vertices.len(), 4);
        assert_eq!(vertices[0], [1.0, 0.0]);

        let bad = "TITLE\n1.0 0.0\noops line\n";
        assert!(matches!(
            Shape::polygon_from_str(bad),
            Err(GeometryError::PolygonFile(_))
        ));
    }

    #[test]
    fn circle_normals_point_into_the_hole() {
        let c = Shape::Circle {
            center: [1.0, -2.0],
            radius: 0.5,
        };
        let (pts, nrms) = c.sample_boundary(200, 7);
        for (p, n) in pts.iter().zip(&nrms) {
            assert_relative_eq!(euclid(p, &[1.0, -2.0]), 0.5, epsilon = 1e-12);
            let nn = (n[0] * n[0] + n[1] * n[1]).sqrt();
            assert_relative_eq!(nn, 1.0, epsilon = 1e-12);
            // inward: anti-parallel to the radial direction
            let rx = p[0] - 1.0;
            let ry = p[1] + 2.0;
            assert!(n[0] * rx + n[1] * ry < 0.0);
            let cross = n[0] * ry - n[1] * rx;
            assert!(cross.abs() < 1e-12);
        }
    }

    #[test]
    fn high_dim_sphere_samples_are_normalized() {
        let b = Shape::Ball {
            center: vec![0.0; 10],
            radius: 1.0,
        };
        let (pts, nrms) = b.sample_boundary(500, 11);
        for (p, n) in pts.iter().zip(&nrms) {
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() <= 1e-12);
            // outward normal is the point itself on the unit sphere
            for (a, b) in p.iter().zip(n) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rectangle_side_frequencies_follow_lengths() {
        let r = Shape::Rectangle {
            x0: 0.0,
            x1: 2.0,
            y0: 0.0,
            y1: 1.0,
        };
        let (pts, _) = r.sample_boundary(60_000, 3);
        let mut counts = [0usize; 4]; // bottom, right, top, left
        for p in &pts {
            if p[1] == 0.0 {
                counts[0] += 1;
            } else if p[0] == 2.0 {
                counts[1] += 1;
            } else if p[1] == 1.0 {
                counts[2] += 1;
            } else if p[0] == 0.0 {
                counts[3] += 1;
            } else {
                panic!("boundary point off all sides: {p:?}");
            }
        }
        let n = pts.len() as f64;
        assert!((counts[0] as f64 / n - 2.0 / 6.0).abs() < 0.01);
        assert!((counts[1] as f64 / n - 1.0 / 6.0).abs() < 0.01);
        assert!((counts[2] as f64 / n - 2.0 / 6.0).abs() < 0.01);
        assert!((counts[3] as f64 / n - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn samplers_are_deterministic() {
        let c = Shape::Circle {
            center: [0.0, 0.0],
            radius: 2.0,
        };
        let (a, _) = c.sample_boundary(50, 99);
        let (b, _) = c.sample_boundary(50, 99);
        assert_eq!(a, b);
    }

    #[test]
    fn dual_distance_matches_value_and_finite_differences() {
        let shapes = vec![
            Shape::Circle {
                center: [0.3, -0.1],
                radius: 0.8,
            },
            Shape::Rectangle {
                x0: -1.0,
                x1: 2.0,
                y0: -1.0,
                y1: 1.0,
            },
            unit_square(),
            Shape::Ball {
                center: vec![0.0, 0.0],
                radius: 3.0,
            },
        ];
        let probes = [[1.4, 0.6], [-0.4, 0.3], [1.9, -0.7], [0.6, 1.8]];
        for shape in &shapes {
            for q in &probes {
                let (val, grad) =
                    input_gradient(|x| shape.exact_distance_dual(x), q).unwrap();
                assert_relative_eq!(val, shape.exact_distance(q), max_relative = 1e-12);
                let h = 1e-6;
                for k in 0..2 {
                    let mut hi = *q;
                    let mut lo = *q;
                    hi[k] += h;
                    lo[k] -= h;
                    let fd =
                        (shape.exact_distance(&hi) - shape.exact_distance(&lo)) / (2.0 * h);
                    assert_relative_eq!(grad[k], fd, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn ball_normal_dual_is_radial_with_tangents() {
        let b = Shape::Ball {
            center: vec![0.0, 0.0, 0.0],
            radius: 1.0,
        };
        let q = [0.6, 0.0, 0.8];
        let (val, grad) = input_gradient(|x| b.normal_dual(x)[0].clone(), &q).unwrap();
        assert_relative_eq!(val, 0.6, max_relative = 1e-12);
        // d(x/|x|)/dx at |x|=1: 1 - x^2 component-wise diag entry
        assert_relative_eq!(grad[0], 1.0 - 0.36, max_relative = 1e-9);
        assert_relative_eq!(grad[2], -0.6 * 0.8, max_relative = 1e-9);
    }

    #[test]
    fn polygon_containment_uses_even_odd_rule() {
        let p = unit_square();
        assert!(p.encloses(&[0.5, 0.5]));
        assert!(!p.encloses(&[1.5, 0.5]));
        assert!(!p.encloses(&[-0.1, 0.99]));
    }
}
