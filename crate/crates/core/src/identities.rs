//! Residual checks of the operator identities satisfied by λ-surfaces:
//! the ½-eigenfunctions `⟨v, n⟩` of `L`, the drift-Laplacian formula for
//! `|x − x₀|²`, and the Simons-type formula for `|A|²` on parallel-A
//! surfaces.
//!
//! Each verifier first requires the mesh to be a discrete λ-surface: the
//! largest λ-residual must sit below a threshold, recorded in the report.

use serde::{Deserialize, Serialize};

use crate::curvature::{lambda_residual, max_abs};
use crate::mesh::{build_primitive, ShapeSpec, TriMesh};
use crate::operators::{drift_laplacian, stability_operator, WeightedOperator};
use crate::{lambda_sphere_radius, Error, Result, Vec3};

/// Sign of the `2λ⟨A², A⟩` term under outward normals with `H = 2/r` on
/// spheres, as selected by [`resolve_simons_sign`].
pub const SIMONS_SIGN: f64 = 1.0;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub identity: String,
    pub lambda: f64,
    /// Mass-weighted RMS of `lhs − rhs` over interior vertices.
    pub residual_abs: f64,
    /// `residual_abs` over the identity's natural scale (see each verifier).
    pub residual_rel: f64,
    pub lhs_max: f64,
    pub rhs_max: f64,
    pub max_lambda_residual: f64,
    pub threshold: f64,
    /// Both sides vanish identically (for example `v = 0`).
    pub exact_zero: bool,
}

/// Admissible λ-residual for a mesh: an `O(h²)` error model,
/// `2·h̄²·(1 + max|A|²)` with `h̄` the mean edge length.
pub fn lambda_surface_threshold(mesh: &TriMesh) -> Result<f64> {
    let curv = mesh.curvature()?;
    let amax = curv.a_norm2.iter().copied().fold(0.0, f64::max);
    let h = mesh.mean_edge_length();
    Ok(2.0 * h * h * (1.0 + amax))
}

/// Checks the λ-surface precondition and returns `(max residual, threshold)`.
pub fn require_lambda_surface(mesh: &TriMesh, lambda: f64, threshold: Option<f64>) -> Result<(f64, f64)> {
    let threshold = match threshold {
        Some(t) => t,
        None => lambda_surface_threshold(mesh)?,
    };
    let r = lambda_residual(mesh, lambda)?;
    let interior: Vec<f64> = r
        .iter()
        .zip(mesh.boundary_flags())
        .filter(|(_, &b)| !b)
        .map(|(v, _)| *v)
        .collect();
    let worst = max_abs(&interior);
    if worst > threshold {
        return Err(Error::NotLambdaSurface {
            residual: worst,
            threshold,
        });
    }
    Ok((worst, threshold))
}

/// Mass weights with boundary vertices dropped: boundary rows of the
/// discrete operators miss their outer neighbours.
fn interior_weights(mesh: &TriMesh, op: &WeightedOperator) -> Result<Vec<f64>> {
    let w: Vec<f64> = op.mass.iter().zip(mesh.boundary_flags()).map(|(m, &b)| if b { 0.0 } else { *m }).collect();
    if w.iter().all(|m| *m == 0.0) {
        return Err(Error::UnsupportedSurface("mesh has no interior vertices".into()));
    }
    Ok(w)
}

fn norm(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).map(|(m, x)| m * x * x).sum::<f64>().sqrt()
}

fn rms(w: &[f64], f: &[f64]) -> f64 {
    norm(w, f) / w.iter().sum::<f64>().sqrt()
}

fn max_on(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).filter(|(m, _)| **m > 0.0).fold(0.0, |a, (_, x)| a.max(x.abs()))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `L⟨v,n⟩ = ½⟨v,n⟩`; relative residual `‖L⟨v,n⟩ − ½⟨v,n⟩‖_M / ‖⟨v,n⟩‖_M`.
pub fn verify_eigenfunction_identity(
    mesh: &TriMesh,
    lambda: f64,
    v: &Vec3,
    threshold: Option<f64>,
) -> Result<IdentityReport> {
    let (worst, threshold) = require_lambda_surface(mesh, lambda, threshold)?;
    let curv = mesh.curvature()?;
    let op = stability_operator(mesh)?;
    let phi: Vec<f64> = curv.normal.iter().map(|n| n.dot(v)).collect();
    let lhs = op.apply(&phi);
    let rhs: Vec<f64> = phi.iter().map(|p| 0.5 * p).collect();
    let diff = sub(&lhs, &rhs);
    let w = interior_weights(mesh, &op)?;
    let norm_phi = norm(&w, &phi);
    // ⟨v,n⟩ vanishing up to roundoff, as for e_z on a vertical cylinder
    let exact_zero = norm_phi <= 1e-12 * v.norm() * w.iter().sum::<f64>().sqrt();
    Ok(IdentityReport {
        identity: "stability_eigenfunction".into(),
        lambda,
        residual_abs: rms(&w, &diff),
        residual_rel: if exact_zero { 0.0 } else { norm(&w, &diff) / norm_phi },
        lhs_max: max_on(&w, &lhs),
        rhs_max: max_on(&w, &rhs),
        max_lambda_residual: worst,
        threshold,
        exact_zero,
    })
}

/// `𝓛|x−x₀|² = −⟨x, x−x₀⟩ − 2λ⟨n, x−x₀⟩ + 4`; relative residual over the
/// sum of the RMS sizes of the three right-hand terms.
pub fn verify_drift_distance_identity(
    mesh: &TriMesh,
    lambda: f64,
    x0: &Vec3,
    threshold: Option<f64>,
) -> Result<IdentityReport> {
    let (worst, threshold) = require_lambda_surface(mesh, lambda, threshold)?;
    let curv = mesh.curvature()?;
    let op = drift_laplacian(mesh)?;
    let x = mesh.vertices();
    let f: Vec<f64> = x.iter().map(|p| (p - x0).norm_squared()).collect();
    let lhs = op.apply(&f);
    let t1: Vec<f64> = x.iter().map(|p| -p.dot(&(p - x0))).collect();
    let t2: Vec<f64> = x.iter().zip(&curv.normal).map(|(p, n)| -2.0 * lambda * n.dot(&(p - x0))).collect();
    let rhs: Vec<f64> = (0..x.len()).map(|i| t1[i] + t2[i] + 4.0).collect();
    let diff = sub(&lhs, &rhs);
    let w = interior_weights(mesh, &op)?;
    let abs = rms(&w, &diff);
    let scale = rms(&w, &t1) + rms(&w, &t2) + 4.0;
    Ok(IdentityReport {
        identity: "drift_distance".into(),
        lambda,
        residual_abs: abs,
        residual_rel: abs / scale,
        lhs_max: max_on(&w, &lhs),
        rhs_max: max_on(&w, &rhs),
        max_lambda_residual: worst,
        threshold,
        exact_zero: false,
    })
}

/// Largest spread of either principal curvature relative to `|A|`, used to
/// decide whether `∇A` is negligible (planes, spheres, cylinders).
fn parallel_a_defect(mesh: &TriMesh) -> Result<f64> {
    let c = mesh.curvature()?;
    let n = c.a_norm2.len() as f64;
    let mean = c.a_norm2.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Ok(0.0);
    }
    let spread = |a: usize| {
        let m = c.principal.iter().map(|k| k[a]).sum::<f64>() / n;
        c.principal.iter().map(|k| (k[a] - m).abs()).fold(0.0, f64::max)
    };
    Ok(spread(0).max(spread(1)) / mean.sqrt())
}

/// `𝓛|A|² = 2(½ − |A|²)|A|² + sign·2λ⟨A², A⟩` on surfaces with `∇A = 0`.
///
/// Residuals are mass-weighted RMS; the relative value divides by the sum
/// of the RMS sizes of `|A|²`, `2|A|⁴` and the λ-term.
pub fn verify_simons(mesh: &TriMesh, lambda: f64, sign: f64, threshold: Option<f64>) -> Result<IdentityReport> {
    let (worst, threshold) = require_lambda_surface(mesh, lambda, threshold)?;
    let defect = parallel_a_defect(mesh)?;
    if defect > 1e-3 {
        return Err(Error::UnsupportedSurface(format!(
            "second fundamental form is not parallel (relative defect {defect:.2e})"
        )));
    }
    let c = mesh.curvature()?;
    let op = drift_laplacian(mesh)?;
    let lhs = op.apply(&c.a_norm2);
    let t1: Vec<f64> = c.a_norm2.iter().map(|a| 2.0 * (0.5 - a) * a).collect();
    let t2: Vec<f64> = c.a3.iter().map(|a3| sign * 2.0 * lambda * a3).collect();
    let rhs: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a + b).collect();
    let diff = sub(&lhs, &rhs);
    let w = interior_weights(mesh, &op)?;
    let abs = rms(&w, &diff);
    // term sizes before cancellation: at |A|² = ½ and λ = 0 both sides vanish
    let a4: Vec<f64> = c.a_norm2.iter().map(|a| 2.0 * a * a).collect();
    let scale = rms(&w, &c.a_norm2) + rms(&w, &a4) + rms(&w, &t2);
    Ok(IdentityReport {
        identity: "simons".into(),
        lambda,
        residual_abs: abs,
        residual_rel: if scale > 0.0 { abs / scale } else { 0.0 },
        lhs_max: max_on(&w, &lhs),
        rhs_max: max_on(&w, &rhs),
        max_lambda_residual: worst,
        threshold,
        exact_zero: false,
    })
}

/// Picks the sign of the λ-term that makes the Simons residual vanish on
/// the λ = 1 sphere.
pub fn resolve_simons_sign(level: usize) -> Result<f64> {
    let m = build_primitive(&ShapeSpec::icosphere(lambda_sphere_radius(1.0), level))?;
    let plus = verify_simons(&m, 1.0, 1.0, None)?.residual_abs;
    let minus = verify_simons(&m, 1.0, -1.0, None)?.residual_abs;
    Ok(if plus <= minus { 1.0 } else { -1.0 })
}
