//! Gaussian-weighted operators in the `e^{−|x|²/4}` inner product.
//!
//! The drift Laplacian is assembled in divergence form: the cotangent
//! stiffness with each edge weight scaled by the Gaussian at the edge
//! midpoint, paired with the lumped mass `A_i e^{−|x_i|²/4}`. With
//! `S` the stiffness and `M` the mass, `𝓛φ = −M⁻¹Sφ`, and the stability
//! operator adds the potential `|A|² + ½`.

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{edge_weight, mixed_area, Geometry};
use crate::mesh::TriMesh;
use crate::{Error, Result};

pub fn gaussian_weight(x: &crate::Vec3) -> f64 {
    (-0.25 * x.norm_squared()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    DriftLaplacian,
    Stability,
}

#[derive(Debug, Clone)]
pub struct WeightedOperator {
    pub kind: OperatorKind,
    pub mesh_hash: String,
    /// Symmetric positive semidefinite, `φᵀSφ ≈ ∫|∇φ|² e^{−|x|²/4}`.
    pub stiffness: CsrMatrix<f64>,
    pub mass: Vec<f64>,
    /// Zeroth-order term; zero for the drift Laplacian.
    pub potential: Vec<f64>,
}

/// `∫_Σ e^{−|x|²/4}` with the weight sampled at face barycenters.
pub fn gaussian_area(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(fi, f)| mesh.face_area(fi) * gaussian_weight(&((v[f[0]] + v[f[1]] + v[f[2]]) / 3.0)))
        .sum()
}

fn assemble(mesh: &TriMesh) -> (CsrMatrix<f64>, Vec<f64>) {
    let n = mesh.n_vertices();
    let pos = mesh.vertices();
    let topo = mesh.topology();
    let mut coo = CooMatrix::new(n, n);
    let mut diag = vec![0.0; n];
    for i in 0..n {
        for sp in topo.spokes(i).iter().filter(|s| s.to > i) {
            let (w, _) = edge_weight(pos, i, sp.to, sp.opposite);
            let we = w * gaussian_weight(&(0.5 * (pos[i] + pos[sp.to])));
            coo.push(i, sp.to, -we);
            coo.push(sp.to, i, -we);
            diag[i] += we;
            diag[sp.to] += we;
        }
    }
    for (i, d) in diag.iter().enumerate() {
        coo.push(i, i, *d);
    }
    let g = Geometry::of(mesh);
    let mass = (0..n).into_par_iter().map(|i| mixed_area(&g, i) * gaussian_weight(&pos[i])).collect();
    (CsrMatrix::from(&coo), mass)
}

fn check_manifold(mesh: &TriMesh) -> Result<()> {
    for v in 0..mesh.n_vertices() {
        if !mesh.topology().is_manifold_vertex(v, mesh.faces()) {
            return Err(Error::NonManifoldVertex(v));
        }
    }
    Ok(())
}

/// `𝓛 = Δ − ½⟨x, ∇·⟩`.
pub fn drift_laplacian(mesh: &TriMesh) -> Result<WeightedOperator> {
    check_manifold(mesh)?;
    let (stiffness, mass) = assemble(mesh);
    Ok(WeightedOperator {
        kind: OperatorKind::DriftLaplacian,
        mesh_hash: mesh.content_hash().to_string(),
        stiffness,
        potential: vec![0.0; mass.len()],
        mass,
    })
}

/// `L = 𝓛 + |A|² + ½`.
pub fn stability_operator(mesh: &TriMesh) -> Result<WeightedOperator> {
    let curv = mesh.curvature()?;
    let (stiffness, mass) = assemble(mesh);
    Ok(WeightedOperator {
        kind: OperatorKind::Stability,
        mesh_hash: mesh.content_hash().to_string(),
        stiffness,
        potential: curv.a_norm2.iter().map(|a| a + 0.5).collect(),
        mass,
    })
}

impl WeightedOperator {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn stiffness_apply(&self, phi: &[f64]) -> Vec<f64> {
        let s = &self.stiffness;
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                let row = s.row(i);
                row.col_indices().iter().zip(row.values()).map(|(&j, &v)| v * phi[j]).sum()
            })
            .collect()
    }

    /// The operator applied pointwise: `−(Sφ)_i/M_i + p_i φ_i`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let sphi = self.stiffness_apply(phi);
        (0..self.dim()).map(|i| -sphi[i] / self.mass[i] + self.potential[i] * phi[i]).collect()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// `φᵀSφ − Σ M_i p_i φ_i²`, the discrete `∫(|∇φ|² − pφ²)e^{−|x|²/4}`.
    pub fn quadratic_form(&self, phi: &[f64]) -> f64 {
        let sphi = self.stiffness_apply(phi);
        let grad: f64 = phi.iter().zip(&sphi).map(|(a, b)| a * b).sum();
        let pot: f64 = (0..self.dim()).map(|i| self.mass[i] * self.potential[i] * phi[i] * phi[i]).sum();
        grad - pot
    }
}

/// `∫(|∇φ|² − |A|²φ² − ½φ²) e^{−|x|²/4}` on a mesh.
pub fn quadratic_form(mesh: &TriMesh, phi: &[f64]) -> Result<f64> {
    if phi.len() != mesh.n_vertices() {
        return Err(Error::InvalidParameter(format!(
            "field has {} entries for {} vertices",
            phi.len(),
            mesh.n_vertices()
        )));
    }
    Ok(stability_operator(mesh)?.quadratic_form(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_primitive, ShapeSpec};
    use crate::{lambda_sphere_radius, Vec3};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn sphere(r: f64, level: usize) -> TriMesh {
        build_primitive(&ShapeSpec::icosphere(r, level)).unwrap()
    }

    #[test]
    fn gaussian_area_of_shrinker_sphere() {
        let exact = 16.0 * PI * (-1f64).exp();
        let m = sphere(2.0, 4);
        assert!((gaussian_area(&m) - exact).abs() / exact < 5e-3);
        assert_eq!(gaussian_area(&TriMesh::empty()), 0.0);
        let far = build_primitive(&ShapeSpec::icosphere(2.0, 4).centered_at([10.0, 0.0, 0.0])).unwrap();
        assert!(gaussian_area(&far) < gaussian_area(&m));
    }

    #[test]
    fn stiffness_is_symmetric_and_kills_constants() {
        for spec in [ShapeSpec::icosphere(2.0, 3), ShapeSpec::torus(2.0, 0.5, 1)] {
            let m = build_primitive(&spec).unwrap();
            let op = drift_laplacian(&m).unwrap();
            let dense = nalgebra::DMatrix::from(&op.stiffness);
            let scale = dense.amax();
            assert!((&dense - dense.transpose()).amax() <= 1e-12 * scale);
            let lc = op.apply(&vec![1.0; m.n_vertices()]);
            assert!(lc.iter().all(|v| v.abs() < 1e-10));
            assert!(op.mass.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn drift_laplacian_on_coordinate() {
        let m = sphere(2.0, 4);
        let op = drift_laplacian(&m).unwrap();
        let x1: Vec<f64> = m.vertices().iter().map(|p| p.x).collect();
        let l = op.apply(&x1);
        let diff: Vec<f64> = l.iter().zip(&x1).map(|(a, b)| a + 0.5 * b).collect();
        assert!(op.norm(&diff) / op.norm(&x1) < 0.02);
    }

    #[test]
    fn drift_laplacian_of_square_norm_on_lambda_sphere() {
        let r = lambda_sphere_radius(1.0);
        let m = sphere(r, 4);
        let op = drift_laplacian(&m).unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| p.norm_squared()).collect();
        assert!(op.apply(&f).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn stability_of_constant_on_spheres() {
        for r in [2.0, 1.5] {
            let m = sphere(r, 3);
            let op = stability_operator(&m).unwrap();
            let l1 = op.apply(&vec![1.0; m.n_vertices()]);
            let expect = 2.0 / (r * r) + 0.5;
            assert!(l1.iter().all(|v| (v - expect).abs() < 1e-9 * expect));
        }
    }

    #[test]
    fn stability_potential_on_disk() {
        let m = build_primitive(&ShapeSpec::disk(1.0, 2)).unwrap();
        let op = stability_operator(&m).unwrap();
        assert!(op.potential.iter().all(|p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn quadratic_form_matches_integration_by_parts() {
        let m = build_primitive(&ShapeSpec::torus(2.0, 0.5, 1)).unwrap();
        let op = stability_operator(&m).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let phi: Vec<f64> = (0..m.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = quadratic_form(&m, &phi).unwrap();
        let lphi = op.apply(&phi);
        assert!((q + op.inner(&phi, &lphi)).abs() <= 1e-9 * q.abs().max(1.0));
    }

    #[test]
    fn quadratic_form_of_constant() {
        let r = lambda_sphere_radius(1.0);
        let m = sphere(r, 3);
        let ones = vec![1.0; m.n_vertices()];
        let q = quadratic_form(&m, &ones).unwrap();
        let op = stability_operator(&m).unwrap();
        let ga: f64 = op.mass.iter().sum();
        assert!((q + (2.0 / (r * r) + 0.5) * ga).abs() < 1e-9 * ga);
        assert_eq!(quadratic_form(&m, &vec![0.0; m.n_vertices()]).unwrap(), 0.0);
        assert!(quadratic_form(&m, &[1.0]).is_err());
    }

    #[test]
    fn normal_component_is_unstable_direction() {
        let r = lambda_sphere_radius(1.0);
        let m = sphere(r, 4);
        let curv = m.curvature().unwrap();
        let n0 = Vec3::new(0.0, 0.0, 1.0);
        let phi: Vec<f64> = curv.normal.iter().map(|n| n.dot(&n0)).collect();
        let op = stability_operator(&m).unwrap();
        let q = op.quadratic_form(&phi);
        let target = -0.5 * op.inner(&phi, &phi);
        assert!(q < 0.0);
        assert!((q - target).abs() < 0.05 * target.abs());
    }
}
