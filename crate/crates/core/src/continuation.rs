//! λ-surfaces as normal graphs `X + u·n` over the round sphere of radius 2.
//!
//! Newton's method on the discrete λ-residual uses a finite-difference
//! Jacobian. Perturbing `u_j` only moves vertex `j`, so each column needs
//! the residual only at vertices whose curvature stencil contains `j`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{max_abs, vertex_residual, Geometry};
use crate::eigen::{dense_spectrum, WhichEnd};
use crate::mesh::{build_primitive, ShapeSpec, TriMesh};
use crate::operators::{gaussian_area, stability_operator};
use crate::{lambda_sphere_radius, Error, Result, Vec3};

/// Radius of the base sphere; the λ = 0 solution.
pub const BASE_RADIUS: f64 = 2.0;

const MAX_NEWTON_ITERATIONS: usize = 25;
const DIVERGENCE_GROWTH: f64 = 10.0;
/// Sup-norm distance to the constant graph `r_λ − 2` counted as round.
pub const ROUND_TOL: f64 = 1e-4;

/// The base icosphere with its normals, curvature stencils and the
/// spectral gap of the stability operator around zero.
#[derive(Debug)]
pub struct SphereBase {
    pub mesh: TriMesh,
    pub normals: Vec<Vec3>,
    /// Vertices whose residual depends on the position of each vertex.
    influence: Vec<Vec<usize>>,
    pub spectral_gap: f64,
}

impl SphereBase {
    pub fn new(level: usize) -> Result<Arc<Self>> {
        let mesh = build_primitive(&ShapeSpec::icosphere(BASE_RADIUS, level))?;
        let normals = mesh.vertices().iter().map(|p| p.normalize()).collect();
        let topo = mesh.topology();
        let mut influence: Vec<Vec<usize>> = (0..mesh.n_vertices()).map(|i| vec![i]).collect();
        for i in 0..mesh.n_vertices() {
            let mut ring = topo.ring(i, 2);
            if ring.len() < 9 {
                ring = topo.ring(i, 3);
            }
            for j in ring {
                influence[j].push(i);
            }
        }
        for list in &mut influence {
            list.sort_unstable();
        }
        let op = stability_operator(&mesh)?;
        let spec = dense_spectrum(&op, mesh.n_vertices() - 1, WhichEnd::Largest)?;
        let spectral_gap = spec.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        Ok(Arc::new(Self {
            mesh,
            normals,
            influence,
            spectral_gap,
        }))
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }
}

#[derive(Debug, Clone)]
pub struct GraphOverSphere {
    pub base: Arc<SphereBase>,
    pub u: Vec<f64>,
    pub lambda: f64,
}

impl GraphOverSphere {
    pub fn new(base: Arc<SphereBase>, u: Vec<f64>, lambda: f64) -> Result<Self> {
        if u.len() != base.n_vertices() {
            return Err(Error::InvalidParameter(format!(
                "height field has {} entries for {} vertices",
                u.len(),
                base.n_vertices()
            )));
        }
        Ok(Self { base, u, lambda })
    }

    pub fn zero(base: Arc<SphereBase>, lambda: f64) -> Self {
        let n = base.n_vertices();
        Self {
            base,
            u: vec![0.0; n],
            lambda,
        }
    }

    pub fn constant(base: Arc<SphereBase>, value: f64, lambda: f64) -> Self {
        let n = base.n_vertices();
        Self {
            base,
            u: vec![value; n],
            lambda,
        }
    }

    /// `max |u·A|`; principal curvatures of the base are `1/2`.
    pub fn invariant(&self) -> f64 {
        max_abs(&self.u) / BASE_RADIUS
    }

    fn positions(&self) -> Result<Vec<Vec3>> {
        let inv = self.invariant();
        if !(inv < 1.0) {
            return Err(Error::GraphInvariant(inv));
        }
        Ok(self
            .base
            .mesh
            .vertices()
            .iter()
            .zip(&self.base.normals)
            .zip(&self.u)
            .map(|((x, n), u)| x + n * *u)
            .collect())
    }
}

pub fn graph_mesh(g: &GraphOverSphere) -> Result<TriMesh> {
    let pos = g.positions()?;
    g.base.mesh.map_vertices(|i, _| pos[i])
}

/// λ-residual of the graph surface at each base vertex.
pub fn graph_residual(g: &GraphOverSphere) -> Result<Vec<f64>> {
    let pos = g.positions()?;
    let geo = Geometry::with_positions(&g.base.mesh, &pos);
    Ok((0..pos.len()).into_par_iter().map(|i| vertex_residual(&geo, i, g.lambda)).collect())
}

/// Forward-difference Jacobian of [`graph_residual`] in `u`, with
/// perturbation `1e-6·(1 + |u_j|)` per column.
pub fn fd_jacobian(g: &GraphOverSphere, residual: &[f64]) -> Result<DMatrix<f64>> {
    let pos = g.positions()?;
    let base = &g.base;
    let n = pos.len();
    let columns: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let eps = 1e-6 * (1.0 + g.u[j].abs());
            let mut p = pos.clone();
            p[j] += base.normals[j] * eps;
            let geo = Geometry::with_positions(&base.mesh, &p);
            base.influence[j]
                .iter()
                .map(|&i| (i, (vertex_residual(&geo, i, g.lambda) - residual[i]) / eps))
                .collect()
        })
        .collect();
    let mut jac = DMatrix::zeros(n, n);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col {
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub graph: GraphOverSphere,
    pub iterations: usize,
    /// Sup-norm residual before each iteration and after the last.
    pub residuals: Vec<f64>,
    /// `max r_{k+1}/r_k²` over steps starting below `1e-2`.
    pub quadratic_constant: Option<f64>,
}

impl NewtonOutcome {
    pub fn residual(&self) -> f64 {
        *self.residuals.last().unwrap()
    }
}

fn quadratic_constant(res: &[f64]) -> Option<f64> {
    res.windows(2)
        .filter(|w| w[0] < 1e-2 && w[1] > 1e-13)
        .map(|w| w[1] / (w[0] * w[0]))
        .reduce(f64::max)
}

/// Newton iteration from `g0` until `‖residual‖_∞ ≤ tol`.
pub fn newton_solve(g0: &GraphOverSphere, tol: f64) -> Result<NewtonOutcome> {
    if !(g0.base.spectral_gap > 1e-6) {
        return Err(Error::SingularJacobian);
    }
    let mut g = g0.clone();
    let mut r = graph_residual(&g)?;
    let mut norms = vec![max_abs(&r)];
    if !norms[0].is_finite() {
        return Err(Error::NewtonDivergence("initial residual is not finite".into()));
    }
    let r0 = norms[0];
    for it in 0..=MAX_NEWTON_ITERATIONS {
        let last = *norms.last().unwrap();
        if last <= tol {
            return Ok(NewtonOutcome {
                graph: g,
                iterations: it,
                quadratic_constant: quadratic_constant(&norms),
                residuals: norms,
            });
        }
        if it == MAX_NEWTON_ITERATIONS {
            break;
        }
        if !last.is_finite() || last > DIVERGENCE_GROWTH * r0.max(tol) {
            return Err(Error::NewtonDivergence(format!(
                "residual grew from {r0:.3e} to {last:.3e} at iteration {it}"
            )));
        }
        let jac = fd_jacobian(&g, &r)?;
        let rhs = -DVector::from_column_slice(&r);
        let delta = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        for (u, d) in g.u.iter_mut().zip(delta.iter()) {
            *u += d;
        }
        r = graph_residual(&g)?;
        norms.push(max_abs(&r));
    }
    Err(Error::NewtonDivergence(format!(
        "no convergence in {MAX_NEWTON_ITERATIONS} iterations (residual {:.3e})",
        norms.last().unwrap()
    )))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl FieldStats {
    pub fn of(u: &[f64]) -> Self {
        Self {
            min: u.iter().copied().fold(f64::INFINITY, f64::min),
            max: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: u.iter().sum::<f64>() / u.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSample {
    pub lambda: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub u_stats: FieldStats,
    pub iterations: usize,
    pub residual: f64,
    pub quadratic_constant: Option<f64>,
    pub gaussian_area: f64,
    /// `sup |u − (r_λ − 2)|`.
    pub round_deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub step: f64,
    pub tol: f64,
    /// Ascending in λ.
    pub samples: Vec<BranchSample>,
    /// Why the sweep stopped short of the requested range, if it did.
    pub truncated: Vec<String>,
}

fn sample_of(out: &NewtonOutcome) -> Result<BranchSample> {
    let g = &out.graph;
    let target = lambda_sphere_radius(g.lambda) - BASE_RADIUS;
    Ok(BranchSample {
        lambda: g.lambda,
        u_stats: FieldStats::of(&g.u),
        iterations: out.iterations,
        residual: out.residual(),
        quadratic_constant: out.quadratic_constant,
        gaussian_area: gaussian_area(&graph_mesh(g)?),
        round_deviation: g.u.iter().fold(0.0f64, |m, u| m.max((u - target).abs())),
        u: g.u.clone(),
    })
}

/// Sphere branch over `[lo, hi]` on the grid `k·step`, swept outward from
/// λ = 0 with the previous solution as predictor.
pub fn continue_branch(base: &Arc<SphereBase>, lo: f64, hi: f64, step: f64, tol: f64) -> Result<Branch> {
    if !(lo <= 0.0 && 0.0 <= hi) || !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "range [{lo}, {hi}] must contain 0 and step must be positive"
        )));
    }
    let start = newton_solve(&GraphOverSphere::zero(base.clone(), 0.0), tol)?;
    let mut samples = vec![sample_of(&start)?];
    let mut truncated = Vec::new();
    let slack = 1e-9 * step;
    for dir in [1.0, -1.0] {
        let bound = if dir > 0.0 { hi } else { -lo };
        let mut prev = start.graph.u.clone();
        let mut k = 1;
        let mut side = Vec::new();
        while k as f64 * step <= bound + slack {
            let lambda = dir * k as f64 * step;
            let guess = GraphOverSphere::new(base.clone(), prev.clone(), lambda)?;
            match newton_solve(&guess, tol) {
                Ok(out) => {
                    prev = out.graph.u.clone();
                    side.push(sample_of(&out)?);
                }
                Err(e) => {
                    truncated.push(format!("λ = {lambda}: {e}"));
                    break;
                }
            }
            k += 1;
        }
        if dir < 0.0 {
            side.reverse();
            side.extend(samples);
            samples = side;
        } else {
            samples.extend(side);
        }
    }
    Ok(Branch {
        step,
        tol,
        samples,
        truncated,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Constant height `r_{λ₂} − r_{λ₁}` between the two spheres.
    pub phi: f64,
    /// `sup |Lφ + (λ₂ − λ₁)|` with the discrete `L` of the `r_{λ₁}` sphere.
    pub defect: f64,
    pub defect_over_gap: f64,
}

/// Checks that the stability operator linearizes the λ-equation along the
/// sphere family: `Lφ + (λ₂ − λ₁)` is second order in the gap.
pub fn linearization_check(level: usize, lambda1: f64, lambda2: f64) -> Result<LinearizationReport> {
    let r1 = lambda_sphere_radius(lambda1);
    let phi = lambda_sphere_radius(lambda2) - r1;
    if !(phi.abs() < r1) {
        return Err(Error::GraphInvariant(phi.abs() / r1));
    }
    let mesh = build_primitive(&ShapeSpec::icosphere(r1, level))?;
    let op = stability_operator(&mesh)?;
    let lphi = op.apply(&vec![phi; mesh.n_vertices()]);
    let gap = lambda2 - lambda1;
    let defect = lphi.iter().fold(0.0f64, |m, v| m.max((v + gap).abs()));
    Ok(LinearizationReport {
        lambda1,
        lambda2,
        phi,
        defect,
        defect_over_gap: if gap == 0.0 { 0.0 } else { defect / gap.abs() },
    })
}

/// Defect ratio when the gap is halved; near 0.25 for a quadratic remainder.
pub fn linearization_order(level: usize, lambda1: f64, gap: f64) -> Result<f64> {
    let a = linearization_check(level, lambda1, lambda1 + gap)?;
    let b = linearization_check(level, lambda1, lambda1 + 0.5 * gap)?;
    Ok(b.defect / a.defect)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigidityOutcome {
    Round,
    ConvergedElsewhere,
    Diverged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidityCell {
    pub lambda: f64,
    pub amplitude: f64,
    pub outcome: RigidityOutcome,
    pub iterations: usize,
    pub residual: f64,
    pub round_deviation: f64,
    pub quadratic_constant: Option<f64>,
    pub diagnostic: Option<String>,
}

/// Smooth field on the base: a random cubic polynomial in the unit
/// normal without constant term, scaled to sup norm `amplitude`.
pub fn smooth_perturbation(base: &SphereBase, amplitude: f64, seed: u64) -> Vec<f64> {
    if amplitude == 0.0 {
        return vec![0.0; base.n_vertices()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut powers = Vec::new();
    for a in 0..=3u32 {
        for b in 0..=3 - a {
            for c in 0..=3 - a - b {
                if a + b + c > 0 {
                    powers.push(([a, b, c], rng.gen_range(-1.0..1.0)));
                }
            }
        }
    }
    let f: Vec<f64> = base
        .normals
        .iter()
        .map(|n| powers.iter().map(|(p, c)| c * n.x.powi(p[0] as i32) * n.y.powi(p[1] as i32) * n.z.powi(p[2] as i32)).sum())
        .collect();
    let scale = amplitude / max_abs(&f);
    f.iter().map(|v| v * scale).collect()
}

/// Newton from the round solution plus a seeded smooth perturbation for
/// every `(λ, amplitude)` pair.
pub fn rigidity_experiment(
    base: &Arc<SphereBase>,
    lambdas: &[f64],
    amplitudes: &[f64],
    tol: f64,
    seed: u64,
) -> Vec<RigidityCell> {
    let cells: Vec<(usize, f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| amplitudes.iter().map(move |&a| (l, a)))
        .enumerate()
        .map(|(k, (l, a))| (k, l, a))
        .collect();
    cells
        .into_par_iter()
        .map(|(k, lambda, amplitude)| {
            let target = lambda_sphere_radius(lambda) - BASE_RADIUS;
            let u: Vec<f64> = smooth_perturbation(base, amplitude, seed.wrapping_add(k as u64))
                .into_iter()
                .map(|p| p + target)
                .collect();
            let solved = GraphOverSphere::new(base.clone(), u, lambda).and_then(|g| newton_solve(&g, tol));
            match solved {
                Ok(out) => {
                    let dev = out.graph.u.iter().fold(0.0f64, |m, u| m.max((u - target).abs()));
                    RigidityCell {
                        lambda,
                        amplitude,
                        outcome: if dev <= ROUND_TOL {
                            RigidityOutcome::Round
                        } else {
                            RigidityOutcome::ConvergedElsewhere
                        },
                        iterations: out.iterations,
                        residual: out.residual(),
                        round_deviation: dev,
                        quadratic_constant: out.quadratic_constant,
                        diagnostic: None,
                    }
                }
                Err(e) => RigidityCell {
                    lambda,
                    amplitude,
                    outcome: RigidityOutcome::Diverged,
                    iterations: 0,
                    residual: f64::NAN,
                    round_deviation: f64::NAN,
                    quadratic_constant: None,
                    diagnostic: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::verify_eigenfunction_identity;
    use std::sync::OnceLock;

    fn base() -> Arc<SphereBase> {
        static B: OnceLock<Arc<SphereBase>> = OnceLock::new();
        B.get_or_init(|| SphereBase::new(2).unwrap()).clone()
    }

    #[test]
    fn zero_graph_is_the_base() {
        let g = GraphOverSphere::zero(base(), 0.0);
        assert_eq!(graph_mesh(&g).unwrap().content_hash(), base().mesh.content_hash());
    }

    #[test]
    fn constant_graph_is_a_sphere() {
        let r = lambda_sphere_radius(0.4);
        let g = GraphOverSphere::constant(base(), r - 2.0, 0.4);
        let m = graph_mesh(&g).unwrap();
        assert!(m.vertices().iter().all(|p| (p.norm() - r).abs() < 1e-12));
        assert!(max_abs(&graph_residual(&g).unwrap()) < 1e-9);
    }

    #[test]
    fn first_harmonic_displacement() {
        let b = base();
        let u: Vec<f64> = b.normals.iter().map(|n| 0.1 * n.z).collect();
        let m = graph_mesh(&GraphOverSphere::new(b, u, 0.0).unwrap()).unwrap();
        let rmax = m.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!((rmax - 2.1).abs() < 1e-12);
    }

    #[test]
    fn invariant_is_enforced() {
        let g = GraphOverSphere::constant(base(), -2.0, 0.0);
        assert!(matches!(graph_mesh(&g), Err(Error::GraphInvariant(_))));
    }

    #[test]
    fn residual_of_base_is_minus_lambda() {
        let r = graph_residual(&GraphOverSphere::zero(base(), 0.3)).unwrap();
        assert!(r.iter().all(|v| (v + 0.3).abs() < 1e-10));
    }

    #[test]
    fn residual_first_variation_on_constants() {
        // d/dr (2/r − r/2) = −1 at r = 2
        let eps = 1e-4;
        let r = graph_residual(&GraphOverSphere::constant(base(), eps, 0.0)).unwrap();
        let expect = 2.0 / (2.0 + eps) - 0.5 * (2.0 + eps);
        assert!(r.iter().all(|v| (v - expect).abs() < 1e-10));
        assert!((expect + eps).abs() < eps * eps);
    }

    #[test]
    fn jacobian_on_constants_matches_potential() {
        let g = GraphOverSphere::zero(base(), 0.0);
        let r = graph_residual(&g).unwrap();
        let jac = fd_jacobian(&g, &r).unwrap();
        let ones = DVector::from_element(g.u.len(), 0.7);
        let j1 = &jac * &ones;
        let expect = -(2.0 / 4.0 + 0.5) * 0.7;
        for v in j1.iter() {
            assert!((v - expect).abs() < 0.05 * expect.abs(), "{v}");
        }
    }

    #[test]
    fn jacobian_is_dominated_by_stability_operator() {
        let b = base();
        let g = GraphOverSphere::zero(b.clone(), 0.0);
        let r = graph_residual(&g).unwrap();
        let jac = fd_jacobian(&g, &r).unwrap();
        let op = stability_operator(&b.mesh).unwrap();
        let phi: Vec<f64> = b.normals.iter().map(|n| n.x * n.y + 0.3 * n.z).collect();
        let jphi = &jac * DVector::from_column_slice(&phi);
        let lphi = op.apply(&phi);
        let err: f64 = jphi.iter().zip(&lphi).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
        let size: f64 = lphi.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 0.15 * size, "{err} vs {size}");
    }

    #[test]
    fn solved_start_takes_no_iterations() {
        let out = newton_solve(&GraphOverSphere::zero(base(), 0.0), 1e-9).unwrap();
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn newton_finds_lambda_sphere() {
        let out = newton_solve(&GraphOverSphere::zero(base(), 0.3), 1e-10).unwrap();
        let target = 4.09f64.sqrt() - 0.3 - 2.0;
        let r = 2.0 + target;
        assert!((r * r + 0.6 * r - 4.0).abs() < 1e-14);
        assert!(out.graph.u.iter().all(|u| (u - target).abs() < 1e-5));
        assert!(out.iterations <= 6);
        assert!(out.quadratic_constant.is_some());
    }

    #[test]
    fn newton_returns_from_perturbation() {
        let b = base();
        let u = smooth_perturbation(&b, 0.05, 7);
        assert!((max_abs(&u) - 0.05).abs() < 1e-15);
        let out = newton_solve(&GraphOverSphere::new(b, u, 0.0).unwrap(), 1e-10).unwrap();
        assert!(max_abs(&out.graph.u) < 1e-6);
        let c = out.quadratic_constant.unwrap();
        assert!(c.is_finite() && c < 1e3, "{c}");
    }

    #[test]
    fn trivial_branch() {
        let br = continue_branch(&base(), 0.0, 0.0, 0.05, 1e-10).unwrap();
        assert_eq!(br.samples.len(), 1);
        assert!(max_abs(&br.samples[0].u) == 0.0);
    }

    #[test]
    fn branch_is_the_sphere_family() {
        let br = continue_branch(&base(), -0.1, 0.2, 0.05, 1e-10).unwrap();
        let ls: Vec<f64> = br.samples.iter().map(|s| s.lambda).collect();
        assert_eq!(ls.len(), 7);
        for w in ls.windows(2) {
            assert!((w[1] - w[0] - 0.05).abs() < 1e-12);
        }
        assert!(br.samples.iter().all(|s| s.round_deviation < 1e-4 && s.residual <= 1e-10));
        for w in br.samples.windows(2).filter(|w| w[0].lambda >= 0.0) {
            assert!(w[1].gaussian_area < w[0].gaussian_area);
        }
    }

    #[test]
    fn rejects_bad_range() {
        assert!(continue_branch(&base(), 0.1, 0.5, 0.05, 1e-9).is_err());
        assert!(continue_branch(&base(), -0.1, 0.5, 0.0, 1e-9).is_err());
    }

    #[test]
    fn linearization_is_second_order() {
        let rep = linearization_check(2, 0.0, 0.1).unwrap();
        assert!(rep.defect_over_gap <= 0.1);
        assert_eq!(linearization_check(2, 0.3, 0.3).unwrap().defect, 0.0);
        let ratio = linearization_order(2, 0.0, 0.1).unwrap();
        assert!(ratio <= 0.30, "{ratio}");
    }

    #[test]
    fn rigidity_cells() {
        let cells = rigidity_experiment(&base(), &[0.0, 0.2], &[0.0, 0.02], 1e-10, 1);
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.outcome == RigidityOutcome::Round), "{cells:?}");
    }

    #[test]
    fn converged_graph_passes_identity() {
        let out = newton_solve(&GraphOverSphere::zero(SphereBase::new(3).unwrap(), 0.5), 1e-10).unwrap();
        let m = graph_mesh(&out.graph).unwrap();
        let rep = verify_eigenfunction_identity(&m, 0.5, &Vec3::z(), None).unwrap();
        assert!(rep.residual_rel < 0.1, "{rep:?}");
    }
}
