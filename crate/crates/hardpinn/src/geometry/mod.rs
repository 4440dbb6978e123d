//! Domain geometry: shapes, extended distance functions, and point samplers.
//!
//! An *extended* distance function vanishes exactly on its boundary region
//! and is positive everywhere else in the domain; the ansatz uses such
//! functions as blending weights. Shapes provide exact distances; composite
//! distances over several regions can take either the exact minimum or the
//! smooth [`soft_min`] surrogate.

mod domain;
mod shape;

pub use domain::{soft_min, soft_min_dual, DistanceField, DistanceMode, Domain};
pub use shape::{BoundarySampler, Shape, Side};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is self-intersecting (edges {0} and {1} cross)")]
    SelfIntersecting(usize, usize),
    #[error("could not load polygon: {0}")]
    PolygonFile(String),
    #[error("domain needs at least one named boundary region")]
    NoRegions,
    #[error("duplicate boundary region `{0}`")]
    DuplicateRegion(String),
    #[error("unknown boundary region `{0}`")]
    UnknownRegion(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("interior sampling gave up after {0} attempts")]
    SamplingExhausted(usize),
}
