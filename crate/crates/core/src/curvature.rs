//! Discrete curvature and the λ-surface residual.
//!
//! Mean curvature is `H_i = −⟨(Δx)_i, n_i⟩`, where `Δx` is the cotangent
//! Laplacian of position with mixed-Voronoi vertex areas. Normals and
//! principal curvatures come from an implicit quadric fitted to the 2-ring
//! in a local frame. Both are exact on vertices lying on a round sphere.
//!
//! Every per-vertex quantity depends only on positions in the 2-ring of the
//! vertex, which the vertex-local entry points expose for finite-difference
//! Jacobians.

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

use crate::mesh::{Topology, TriMesh, Vec3, NONE};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub mesh_hash: String,
    pub normal: Vec<Vec3>,
    pub h: Vec<f64>,
    pub a_norm2: Vec<f64>,
    pub a3: Vec<f64>,
    /// Shape-operator eigenvalues `[k1, k2]` with `k1 ≥ k2`.
    pub principal: Vec<[f64; 2]>,
    /// Mixed-Voronoi vertex areas.
    pub area: Vec<f64>,
    /// Number of edges whose cotangent weight was clamped at zero.
    pub clamped_weights: usize,
}

/// Curvature quantities at one vertex.
#[derive(Debug, Clone, Copy)]
pub struct VertexCurvature {
    pub normal: Vec3,
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
    pub area: f64,
}

/// Borrowed mesh connectivity with a free position array.
#[derive(Clone, Copy)]
pub struct Geometry<'a> {
    pub topology: &'a Topology,
    pub faces: &'a [[usize; 3]],
    pub positions: &'a [Vec3],
}

impl<'a> Geometry<'a> {
    pub fn of(mesh: &'a TriMesh) -> Self {
        Self {
            topology: mesh.topology(),
            faces: mesh.faces(),
            positions: mesh.vertices(),
        }
    }

    pub fn with_positions(mesh: &'a TriMesh, positions: &'a [Vec3]) -> Self {
        assert_eq!(positions.len(), mesh.n_vertices());
        Self {
            topology: mesh.topology(),
            faces: mesh.faces(),
            positions,
        }
    }
}

fn cot(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b) / a.cross(b).norm()
}

/// Half the sum of the cotangents opposite the edge, and whether it was clamped.
pub fn edge_weight(pos: &[Vec3], i: usize, j: usize, opposite: [usize; 2]) -> (f64, bool) {
    let mut w = 0.0;
    for &k in &opposite {
        if k != NONE {
            w += 0.5 * cot(&(pos[i] - pos[k]), &(pos[j] - pos[k]));
        }
    }
    if w < 0.0 {
        (0.0, true)
    } else {
        (w, false)
    }
}

/// Mixed-Voronoi area of vertex `i`.
pub fn mixed_area(g: &Geometry, i: usize) -> f64 {
    let pos = g.positions;
    let mut area = 0.0;
    for &fi in g.topology.vertex_faces(i) {
        let f = g.faces[fi];
        let k = f.iter().position(|&v| v == i).unwrap();
        let (a, b, c) = (pos[f[k]], pos[f[(k + 1) % 3]], pos[f[(k + 2) % 3]]);
        let (ab, ac, bc) = (b - a, c - a, c - b);
        let t = 0.5 * ab.cross(&ac).norm();
        if ab.dot(&ac) < 0.0 {
            area += 0.5 * t;
        } else if (-ab).dot(&bc) < 0.0 || ac.dot(&bc) < 0.0 {
            area += 0.25 * t;
        } else {
            let cot_b = cot(&(a - b), &(c - b));
            let cot_c = cot(&(a - c), &(b - c));
            area += 0.125 * (ab.norm_squared() * cot_c + ac.norm_squared() * cot_b);
        }
    }
    area
}

/// Cotangent Laplacian of position at `i`: `(1/A_i) Σ_j w_ij (x_j − x_i)`.
pub fn laplacian_of_position(g: &Geometry, i: usize, area: f64) -> Vec3 {
    let pos = g.positions;
    let mut s = Vec3::zeros();
    for sp in g.topology.spokes(i) {
        let (w, _) = edge_weight(pos, i, sp.to, sp.opposite);
        s += w * (pos[sp.to] - pos[i]);
    }
    s / area
}

fn face_normal_sum(g: &Geometry, i: usize) -> Vec3 {
    let pos = g.positions;
    let mut n = Vec3::zeros();
    for &fi in g.topology.vertex_faces(i) {
        let f = g.faces[fi];
        n += (pos[f[1]] - pos[f[0]]).cross(&(pos[f[2]] - pos[f[0]]));
    }
    n
}

/// Normal and principal curvatures from an implicit quadric fit.
///
/// In the frame `(t1, t2, n0)` with `n0` the area-weighted normal and
/// coordinates scaled by the mean 1-ring edge length, the fit is
/// `h = a x² + b xy + c y² + d x + e y + f h² + g xh + k yh`.
pub fn quadric_fit(g: &Geometry, i: usize) -> (Vec3, f64, f64) {
    let pos = g.positions;
    let p0 = pos[i];
    let n0 = face_normal_sum(g, i).normalize();
    let helper = if n0.x.abs() < 0.6 {
        Vec3::x()
    } else if n0.y.abs() < 0.6 {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = helper.cross(&n0).normalize();
    let t2 = n0.cross(&t1);

    let mut ring = g.topology.ring(i, 2);
    if ring.len() < 9 {
        ring = g.topology.ring(i, 3);
    }
    let one_ring = g.topology.spokes(i);
    let ell = one_ring.iter().map(|s| (pos[s.to] - p0).norm()).sum::<f64>() / one_ring.len().max(1) as f64;

    let mut a = DMatrix::zeros(ring.len(), 8);
    let mut rhs = DVector::zeros(ring.len());
    for (r, &j) in ring.iter().enumerate() {
        let d = (pos[j] - p0) / ell;
        let (x, y, h) = (d.dot(&t1), d.dot(&t2), d.dot(&n0));
        let row = [x * x, x * y, y * y, x, y, h * h, x * h, y * h];
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = *v;
        }
        rhs[r] = h;
    }
    let qr = a.qr();
    let qtb = qr.q().transpose() * rhs;
    let r = qr.r();
    let rank = r.nrows().min(8);
    let rmax = (0..rank).fold(0.0f64, |m, k| m.max(r[(k, k)].abs()));
    // degenerate columns (flat rings) get a zero coefficient
    let mut c = DVector::<f64>::zeros(8);
    for k in (0..rank).rev() {
        if r[(k, k)].abs() <= 1e-10 * rmax {
            continue;
        }
        let s: f64 = qtb[k] - (k + 1..8).map(|j| r[(k, j)] * c[j]).sum::<f64>();
        c[k] = s / r[(k, k)];
    }

    let grad = Vec3::new(c[3], c[4], -1.0);
    let hq = nalgebra::Matrix3::new(
        2.0 * c[0],
        c[1],
        c[6],
        c[1],
        2.0 * c[2],
        c[7],
        c[6],
        c[7],
        2.0 * c[5],
    );
    let gn = grad.norm();
    let nl = -grad / gn;
    let helper = if nl.x.abs() < 0.6 { Vec3::x() } else { Vec3::y() };
    let u1 = helper.cross(&nl).normalize();
    let u2 = nl.cross(&u1);
    let s = |a: &Vec3, b: &Vec3| -a.dot(&(hq * b)) / gn;
    let m = Matrix2::new(s(&u1, &u1), s(&u1, &u2), s(&u2, &u1), s(&u2, &u2));
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - 0.5 * (m[(0, 1)] * m[(0, 1)] + m[(1, 0)] * m[(1, 0)]);
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let k1 = (0.5 * tr + disc) / ell;
    let k2 = (0.5 * tr - disc) / ell;
    let normal = (t1 * nl.x + t2 * nl.y + n0 * nl.z).normalize();
    (normal, k1, k2)
}

pub fn vertex_curvature(g: &Geometry, i: usize) -> VertexCurvature {
    let (normal, k1, k2) = quadric_fit(g, i);
    let area = mixed_area(g, i);
    let h = if g.topology.is_boundary(i) {
        k1 + k2
    } else {
        -laplacian_of_position(g, i, area).dot(&normal)
    };
    VertexCurvature {
        normal,
        h,
        k1,
        k2,
        area,
    }
}

/// `H − ⟨x,n⟩/2 − λ` at one vertex.
pub fn vertex_residual(g: &Geometry, i: usize, lambda: f64) -> f64 {
    let vc = vertex_curvature(g, i);
    vc.h - 0.5 * g.positions[i].dot(&vc.normal) - lambda
}

fn check_manifold(mesh: &TriMesh) -> Result<()> {
    for v in 0..mesh.n_vertices() {
        if !mesh.topology().is_manifold_vertex(v, mesh.faces()) {
            return Err(Error::NonManifoldVertex(v));
        }
    }
    Ok(())
}

pub(crate) fn compute_curvature(mesh: &TriMesh) -> Result<CurvatureData> {
    check_manifold(mesh)?;
    let g = Geometry::of(mesh);
    let per: Vec<VertexCurvature> = (0..mesh.n_vertices()).into_par_iter().map(|i| vertex_curvature(&g, i)).collect();
    let mut clamped = 0;
    for i in 0..mesh.n_vertices() {
        for sp in mesh.topology().spokes(i).iter().filter(|s| s.to > i) {
            clamped += edge_weight(mesh.vertices(), i, sp.to, sp.opposite).1 as usize;
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} negative cotangent weights to zero");
    }
    Ok(CurvatureData {
        mesh_hash: mesh.content_hash().to_string(),
        normal: per.iter().map(|c| c.normal).collect(),
        h: per.iter().map(|c| c.h).collect(),
        a_norm2: per.iter().map(|c| c.k1 * c.k1 + c.k2 * c.k2).collect(),
        a3: per.iter().map(|c| c.k1.powi(3) + c.k2.powi(3)).collect(),
        principal: per.iter().map(|c| [c.k1, c.k2]).collect(),
        area: per.iter().map(|c| c.area).collect(),
        clamped_weights: clamped,
    })
}

/// Per-vertex curvature of a mesh (cached on the mesh).
pub fn curvature(mesh: &TriMesh) -> Result<&CurvatureData> {
    mesh.curvature()
}

/// `H − ⟨x,n⟩/2 − λ` at every vertex.
pub fn lambda_residual(mesh: &TriMesh, lambda: f64) -> Result<Vec<f64>> {
    let c = mesh.curvature()?;
    Ok(mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, x)| c.h[i] - 0.5 * x.dot(&c.normal[i]) - lambda)
        .collect())
}

pub fn max_abs(field: &[f64]) -> f64 {
    field.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Largest residual over interior vertices.
pub fn max_interior_residual(mesh: &TriMesh, lambda: f64) -> Result<f64> {
    let r = lambda_residual(mesh, lambda)?;
    Ok(r.iter()
        .zip(mesh.boundary_flags())
        .filter(|(_, &b)| !b)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda_sphere_radius;
    use crate::mesh::{build_primitive, ShapeSpec};

    fn sphere(r: f64, level: usize) -> TriMesh {
        build_primitive(&ShapeSpec::icosphere(r, level)).unwrap()
    }

    #[test]
    fn sphere_curvature_is_exact() {
        for level in [1, 3] {
            let m = sphere(2.0, level);
            let c = curvature(&m).unwrap();
            for i in 0..m.n_vertices() {
                assert!((c.h[i] - 1.0).abs() < 1e-10, "H = {}", c.h[i]);
                assert!((c.a_norm2[i] - 0.5).abs() < 1e-10);
                assert!((c.a3[i] - 0.25).abs() < 1e-10);
                assert!((c.normal[i] - m.vertices()[i] / 2.0).norm() < 1e-10);
                assert!((c.normal[i].norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mixed_areas_tile_the_surface() {
        for spec in [ShapeSpec::icosphere(2.0, 2), ShapeSpec::torus(2.0, 0.5, 1), ShapeSpec::disk(1.0, 2)] {
            let m = build_primitive(&spec).unwrap();
            let c = curvature(&m).unwrap();
            let total: f64 = c.area.iter().sum();
            assert!((total - m.area()).abs() < 1e-10 * m.area());
        }
    }

    #[test]
    fn flat_disk_has_no_curvature() {
        let m = build_primitive(&ShapeSpec::disk(1.0, 2)).unwrap();
        let c = curvature(&m).unwrap();
        for i in 0..m.n_vertices() {
            assert!(c.h[i].abs() < 1e-12);
            assert!(c.a_norm2[i] < 1e-20);
            assert!((c.normal[i] - Vec3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_values_on_spheres() {
        let m = sphere(2.0, 3);
        let r = lambda_residual(&m, 1.0).unwrap();
        assert!(r.iter().all(|v| (v + 1.0).abs() < 1e-10));
        let rl = lambda_sphere_radius(1.0);
        let m = sphere(rl, 3);
        assert!(max_abs(&lambda_residual(&m, 1.0).unwrap()) < 1e-10);
    }

    #[test]
    fn torus_curvature_converges() {
        // tube radius ρ, angle v: k1 = 1/ρ, k2 = cos v / (R + ρ cos v)
        let (big, small) = (2.0, 0.5);
        let mut errs = Vec::new();
        for level in 1..4 {
            let m = build_primitive(&ShapeSpec::torus(big, small, level)).unwrap();
            let c = curvature(&m).unwrap();
            let mut e: f64 = 0.0;
            for (i, p) in m.vertices().iter().enumerate() {
                let w = (p.x * p.x + p.y * p.y).sqrt();
                let cv = (w - big) / small;
                let h = 1.0 / small + cv / w;
                e = e.max((c.h[i] - h).abs());
                e = e.max((c.principal[i][0] - 1.0 / small).abs());
            }
            errs.push(e);
        }
        assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
    }

    #[test]
    fn cylinder_interior_curvature() {
        let r = 2f64.sqrt();
        let m = build_primitive(&ShapeSpec::cylinder_band(r, 2.0, 2)).unwrap();
        let c = curvature(&m).unwrap();
        for i in 0..m.n_vertices() {
            assert!((c.principal[i][0] - 1.0 / r).abs() < 1e-9);
            assert!(c.principal[i][1].abs() < 1e-9);
            if !m.boundary_flags()[i] {
                assert!((c.h[i] - 1.0 / r).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn non_manifold_is_rejected() {
        let v = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 3, 4]]).unwrap();
        assert!(matches!(curvature(&m), Err(Error::NonManifoldVertex(0))));
    }
}
