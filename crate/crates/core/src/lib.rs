#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for λ-surfaces: surfaces in ℝ³ satisfying
//! `H = ⟨x, n⟩/2 + λ`, the critical points of Gaussian area at fixed
//! enclosed Gaussian volume.
//!
//! The crate builds exact and discrete λ-surfaces (icospheres, shooting
//! for curves and surfaces of revolution, Newton solves for graphs over
//! the round sphere), assembles the drift Laplacian and the stability
//! operator in the Gaussian-weighted inner product, and evaluates the
//! identities and integral estimates those surfaces satisfy.
//!
//! Sign conventions: normals point outward and `H = div n`, so the round
//! sphere of radius `r` has `H = 2/r` and both principal curvatures `1/r`.

pub mod continuation;
pub mod curvature;
pub mod eigen;
mod error;
pub mod estimates;
pub mod identities;
pub mod mesh;
pub mod operators;
pub mod shooting;

pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};

/// Radius of the round λ-sphere centred at the origin, the positive root
/// of `r² + 2λr − 4 = 0`.
pub fn lambda_sphere_radius(lambda: f64) -> f64 {
    (lambda * lambda + 4.0).sqrt() - lambda
}

/// Radius of the round λ-circle in the plane, the positive root of
/// `r² + 2λr − 2 = 0`.
pub fn lambda_circle_radius(lambda: f64) -> f64 {
    (lambda * lambda + 2.0).sqrt() - lambda
}
