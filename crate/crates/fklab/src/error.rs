//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("boundary radius is non-positive at theta = {theta}: rho = {rho}")]
    NonPositiveRadius { theta: f64, rho: f64 },
    #[error("mesh generation produced a degenerate element (id {element}, signed area {area})")]
    DegenerateMesh { element: usize, area: f64 },
    #[error("auxiliary balls overlap each other or the star-shaped core")]
    OverlappingComponents,
    #[error("sparse factorization failed: matrix not positive definite at pivot {pivot}")]
    SingularSystem { pivot: usize },
    #[error("eigensolver did not converge to {requested} pairs within {max_dim} Lanczos vectors")]
    EigenNoConvergence { requested: usize, max_dim: usize },
    #[error("barycenter Newton iteration did not converge after {iters} steps")]
    NoConvergence { iters: usize },
    #[error("forcing exceeds the unit sup-norm bound: sup |f| = {sup}")]
    FNormViolation { sup: f64 },
    #[error("resolvent dictionary is empty")]
    EmptyDictionary,
    #[error("satellite balls of radius {r} would intersect the core")]
    InvalidConfig { r: f64 },
    #[error("boundary torsion gradient degenerates: |grad w| = {value} at theta = {theta}")]
    DegenerateGradient { theta: f64, value: f64 },
    #[error("line search failed: no step in [{min_step}, {max_step}] decreases the energy")]
    LineSearchFailure { min_step: f64, max_step: f64 },
    #[error("domain eigenvalues near lambda = {lambda} do not form a cluster of size {expected}")]
    ClusterMismatch { lambda: f64, expected: usize },
    #[error("nearly spherical set is not normalized: |volume - pi| = {vol_err}, |barycenter| = {bary_err}")]
    NotNormalized { vol_err: f64, bary_err: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
