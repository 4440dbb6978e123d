//! Domains built from an outer shape, holes, and named boundary regions,
//! plus soft-minimum composition of distances and the point samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Dual;

use super::shape::BoundarySampler;
use super::{GeometryError, Shape};

/// Smooth lower envelope: `-log(sum exp(-beta * y)) / beta`, computed with
/// max-subtraction so large magnitudes cannot overflow. Requires `beta > 0`
/// and a non-empty slice. Always at most `min(values)`, and within
/// `ln(len)/beta` of it.
pub fn soft_min(values: &[f64], beta: f64) -> f64 {
    assert!(beta > 0.0, "soft_min needs beta > 0");
    assert!(!values.is_empty(), "soft_min of an empty set");
    let m = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = values.iter().map(|&y| (beta * (m - y)).exp()).sum();
    m - sum.ln() / beta
}

/// [`soft_min`] over dual numbers; the value matches the plain version bit
/// for bit and the tangents are the usual smooth log-sum-exp derivative.
pub fn soft_min_dual<'t>(values: &[Dual<'t>], beta: f64) -> Dual<'t> {
    assert!(beta > 0.0, "soft_min needs beta > 0");
    assert!(!values.is_empty(), "soft_min of an empty set");
    let mut arg = 0;
    for (k, v) in values.iter().enumerate() {
        if v.value() < values[arg].value() {
            arg = k;
        }
    }
    let m = values[arg].clone();
    let mut sum = Dual::constant(m.tape(), 0.0, m.n_dirs());
    for v in values {
        sum = sum.add(&m.sub(v).scale(beta).exp());
    }
    m.sub(&sum.ln().scale(1.0 / beta))
}

/// How a composite distance over several boundary regions is reduced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "beta", rename_all = "snake_case")]
pub enum DistanceMode {
    Exact,
    Soft(f64),
}

/// A distance function over one or more boundary shapes, evaluable on plain
/// points and on dual numbers.
#[derive(Clone, Debug)]
pub struct DistanceField {
    shapes: Vec<Shape>,
    mode: DistanceMode,
}

impl DistanceField {
    pub fn new(shapes: Vec<Shape>, mode: DistanceMode) -> DistanceField {
        assert!(!shapes.is_empty(), "distance field over no shapes");
        if let DistanceMode::Soft(beta) = mode {
            assert!(beta > 0.0, "soft distance needs beta > 0");
        }
        DistanceField { shapes, mode }
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.mode {
            DistanceMode::Exact => self
                .shapes
                .iter()
                .map(|s| s.exact_distance(x))
                .fold(f64::INFINITY, f64::min),
            DistanceMode::Soft(beta) => {
                let dists: Vec<f64> = self.shapes.iter().map(|s| s.exact_distance(x)).collect();
                soft_min(&dists, beta)
            }
        }
    }

    pub fn eval_dual<'t>(&self, x: &[Dual<'t>]) -> Dual<'t> {
        let dists: Vec<Dual<'t>> = self
            .shapes
            .iter()
            .map(|s| s.exact_distance_dual(x))
            .collect();
        match self.mode {
            DistanceMode::Exact => dists.into_iter().reduce(|a, b| a.min(&b)).unwrap(),
            DistanceMode::Soft(beta) => soft_min_dual(&dists, beta),
        }
    }
}

/// A solve domain: one outer shape, obstacle holes cut out of it, and the
/// named boundary regions conditions attach to. Hole closures must be
/// pairwise disjoint and strictly inside the outer shape.
#[derive(Clone, Debug)]
pub struct Domain {
    outer: Shape,
    holes: Vec<Shape>,
    regions: Vec<(String, Shape)>,
    soft_beta: f64,
}

fn circle_of(shape: &Shape) -> Option<(&[f64], f64)> {
    match shape {
        Shape::Circle { center, radius } => Some((center.as_slice(), *radius)),
        _ => None,
    }
}

/// Deterministic boundary probes used only for construction-time
/// disjointness checks.
fn probe_points(shape: &Shape) -> Vec<Vec<f64>> {
    match shape {
        Shape::Circle { center, radius } => (0..64)
            .map(|k| {
                let th = k as f64 / 64.0 * std::f64::consts::TAU;
                vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            })
            .collect(),
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            let mut pts = Vec::with_capacity(2 * n);
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                pts.push(vec![a[0], a[1]]);
                pts.push(vec![0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
            pts
        }
        _ => Vec::new(),
    }
}

fn holes_disjoint(a: &Shape, b: &Shape) -> bool {
    if let (Some((ca, ra)), Some((cb, rb))) = (circle_of(a), circle_of(b)) {
        let gap = ca
            .iter()
            .zip(cb)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
            - (ra + rb);
        return gap > 0.0;
    }
    let clear = |probes: &[Vec<f64>], other: &Shape| {
        probes
            .iter()
            .all(|p| !other.encloses(p) && other.exact_distance(p) > 0.0)
    };
    clear(&probe_points(a), b) && clear(&probe_points(b), a)
}

/// Conservative check that every point of `hole`'s bounding box is strictly
/// inside `outer`.
fn strictly_inside(outer: &Shape, hole: &Shape) -> bool {
    let (lo, hi) = hole.bbox();
    match outer {
        Shape::Rectangle { x0, x1, y0, y1 } => {
            lo[0] > *x0 && hi[0] < *x1 && lo[1] > *y0 && hi[1] < *y1
        }
        Shape::Interval { x0, x1 } => lo[0] > *x0 && hi[0] < *x1,
        Shape::Ball { center, radius } => {
            let reach = lo
                .iter()
                .zip(&hi)
                .zip(center)
                .map(|((l, h), c)| (l - c).abs().max((h - c).abs()).powi(2))
                .sum::<f64>()
                .sqrt();
            reach < *radius
        }
        _ => false,
    }
}

impl Domain {
    pub fn new(
        outer: Shape,
        holes: Vec<Shape>,
        regions: Vec<(String, Shape)>,
    ) -> Result<Domain, GeometryError> {
        outer.validate()?;
        if !matches!(
            outer,
            Shape::Interval { .. } | Shape::Rectangle { .. } | Shape::Ball { .. }
        ) {
            return Err(GeometryError::InvalidDomain(
                "outer shape must be an interval, rectangle, or ball".into(),
            ));
        }
        let dim = outer.dim();
        for hole in &holes {
            hole.validate()?;
            if !matches!(hole, Shape::Circle { .. } | Shape::Polygon { .. }) {
                return Err(GeometryError::InvalidDomain(
                    "holes must be obstacle shapes (circle or polygon)".into(),
                ));
            }
            if hole.dim() != dim {
                return Err(GeometryError::InvalidDomain(format!(
                    "hole dimension {} does not match outer dimension {dim}",
                    hole.dim()
                )));
            }
            if !strictly_inside(&outer, hole) {
                return Err(GeometryError::InvalidDomain(format!(
                    "hole {hole:?} is not strictly inside the outer shape"
                )));
            }
        }
        for i in 0..holes.len() {
            for j in i + 1..holes.len() {
                if !holes_disjoint(&holes[i], &holes[j]) {
                    return Err(GeometryError::InvalidDomain(format!(
                        "holes {i} and {j} are not disjoint"
                    )));
                }
            }
        }
        if regions.is_empty() {
            return Err(GeometryError::NoRegions);
        }
        for (k, (name, shape)) in regions.iter().enumerate() {
            shape.validate()?;
            if shape.dim() != dim {
                return Err(GeometryError::InvalidDomain(format!(
                    "region `{name}` dimension {} does not match outer dimension {dim}",
                    shape.dim()
                )));
            }
            if regions[..k].iter().any(|(other, _)| other == name) {
                return Err(GeometryError::DuplicateRegion(name.clone()));
            }
        }
        Ok(Domain {
            outer,
            holes,
            regions,
            soft_beta: 4.0,
        })
    }

    /// Override the sharpness of the composite boundary distance.
    pub fn with_soft_beta(mut self, beta: f64) -> Domain {
        assert!(beta > 0.0);
        self.soft_beta = beta;
        self
    }

    pub fn dim(&self) -> usize {
        self.outer.dim()
    }

    pub fn outer(&self) -> &Shape {
        &self.outer
    }

    pub fn holes(&self) -> &[Shape] {
        &self.holes
    }

    pub fn regions(&self) -> &[(String, Shape)] {
        &self.regions
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn soft_beta(&self) -> f64 {
        self.soft_beta
    }

    pub fn region(&self, name: &str) -> Result<&Shape, GeometryError> {
        self.regions
            .iter()
            .find(|(id, _)| id == name)
            .map(|(_, s)| s)
            .ok_or_else(|| GeometryError::UnknownRegion(name.to_string()))
    }

    /// Whether `x` lies in the closed domain (inside the outer shape, outside
    /// every hole).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.outer.encloses(x)
            && self
                .holes
                .iter()
                .all(|h| !h.encloses(x) && h.exact_distance(x) > 0.0)
    }

    pub fn region_distance(&self, name: &str, x: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.region(name)?.exact_distance(x))
    }

    /// Soft-min of the exact distances to every boundary region.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let dists: Vec<f64> = self
            .regions
            .iter()
            .map(|(_, s)| s.exact_distance(x))
            .collect();
        soft_min(&dists, self.soft_beta)
    }

    /// Distance field over a subset of the named regions.
    pub fn distance_field(
        &self,
        names: &[&str],
        mode: DistanceMode,
    ) -> Result<DistanceField, GeometryError> {
        let mut shapes = Vec::with_capacity(names.len());
        for name in names {
            shapes.push(self.region(name)?.clone());
        }
        Ok(DistanceField::new(shapes, mode))
    }

    /// Distance field over the whole boundary (all regions).
    pub fn full_boundary_field(&self, mode: DistanceMode) -> DistanceField {
        DistanceField::new(
            self.regions.iter().map(|(_, s)| s.clone()).collect(),
            mode,
        )
    }

    /// Rejection-sample `n` points uniformly over the domain.
    pub fn sample_interior(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, GeometryError> {
        let (lo, hi) = self.outer.bbox();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = n.saturating_mul(1000).max(10_000);
        let mut attempts = 0usize;
        let mut points = Vec::with_capacity(n);
        while points.len() < n {
            attempts += 1;
            if attempts > budget {
                return Err(GeometryError::SamplingExhausted(budget));
            }
            let x: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(&a, &b)| rng.gen_range(a..b))
                .collect();
            if self.contains(&x) {
                points.push(x);
            }
        }
        Ok(points)
    }

    /// Sample boundary points and outward normals on one named region.
    pub fn sample_region_boundary(
        &self,
        name: &str,
        n: usize,
        seed: u64,
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), GeometryError> {
        Ok(self.region(name)?.sample_boundary(n, seed))
    }

    /// Estimate `min` of the region's distance function over the rest of the
    /// boundary by probing points on every other region. The probe streams
    /// are consumed round-robin, so the estimate can only decrease as
    /// `n_probe` grows. Single-region domains have no "rest of the boundary"
    /// and yield infinity.
    pub fn min_offregion_distance(
        &self,
        name: &str,
        n_probe: usize,
        seed: u64,
    ) -> Result<f64, GeometryError> {
        let target = self.region(name)?;
        let others: Vec<&Shape> = self
            .regions
            .iter()
            .filter(|(id, _)| id != name)
            .map(|(_, s)| s)
            .collect();
        if others.is_empty() {
            return Ok(f64::INFINITY);
        }
        assert!(n_probe >= 1, "need at least one probe point");
        let mut samplers: Vec<BoundarySampler> = others
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.boundary_sampler(seed.wrapping_add((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            })
            .collect();
        let mut best = f64::INFINITY;
        let n_others = samplers.len();
        for k in 0..n_probe {
            let (p, _) = samplers[k % n_others].next_point();
            best = best.min(target.exact_distance(&p));
        }
        Ok(best)
    }
}
