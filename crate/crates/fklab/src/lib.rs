//! fklab: a numerical laboratory for Dirichlet spectral quantities on planar
//! star-shaped domains.
//!
//! The crate computes torsion functions, Poisson resolvents, and Dirichlet
//! eigenpairs with P1 finite elements on deterministically meshed star-shaped
//! domains, and evaluates the stability functionals, Hadamard shape
//! derivatives, and eigenfunction-transfer identities that relate deficits
//! (Faber-Krahn, Saint-Venant) to distances from the nearest unit ball.

pub mod closed_forms;
pub mod geometry;
pub mod error;
pub mod fem;
pub mod fit;
pub mod functionals;
pub mod quad;
pub mod shape_calculus;

pub use error::{Error, Result};
