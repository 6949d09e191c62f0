use std::sync::Arc;

use lamsurf_core::continuation::{continue_branch, graph_mesh, GraphOverSphere, SphereBase};
use lamsurf_core::curvature::lambda_residual;
use lamsurf_core::estimates::{
    gauss_bonnet_check, monotonicity_profile, rescaled_residual, sphere_intersection_check, Verdict,
};
use lamsurf_core::mesh::{build_primitive, genus, ShapeSpec};
use lamsurf_core::shooting::{shoot_revolution, RevolutionMode, RevolveOptions};
use lamsurf_core::{lambda_sphere_radius, TriMesh, Vec3};

fn outer_radius(mesh: &TriMesh) -> f64 {
    mesh.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max)
}

fn assert_gauss_bonnet(mesh: &TriMesh, label: &str) {
    let big_r = outer_radius(mesh) * 1.05;
    for (r, big_r) in [(0.6 * big_r, big_r), (0.5 * big_r, big_r), (0.8 * big_r, 1.2 * big_r)] {
        for eps in [0.25, 0.5] {
            let rep = gauss_bonnet_check(mesh, &Vec3::zeros(), r, big_r, eps).unwrap();
            assert_eq!(rep.verdict, Verdict::Pass, "{label} r={r} R={big_r} ε={eps}: {rep:?}");
        }
    }
}

#[test]
fn shrinker_torus_estimates() {
    let (res, mesh) =
        shoot_revolution(0.0, RevolutionMode::TorusLike, 3.3, &RevolveOptions::at_level(3)).unwrap();
    assert!(res.closure_defect < 1e-6);
    assert_eq!(genus(&mesh).unwrap(), 1);
    assert_gauss_bonnet(&mesh, "torus");

    let rep = gauss_bonnet_check(&mesh, &Vec3::zeros(), 3.0, 1.05 * outer_radius(&mesh), 0.5).unwrap();
    assert_eq!(rep.parameters["genus"], 1.0);

    let rep = sphere_intersection_check(&mesh, 0.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.parameters["min_norm"] < 2.0 && rep.parameters["max_norm"] > 2.0);
}

#[test]
fn sphere_like_revolution_estimates() {
    for lambda in [-0.3, 0.5] {
        let r = lambda_sphere_radius(lambda);
        let (_, mesh) =
            shoot_revolution(lambda, RevolutionMode::SphereLike, r, &RevolveOptions::at_level(3)).unwrap();
        assert_gauss_bonnet(&mesh, "revolution sphere");
        assert_eq!(sphere_intersection_check(&mesh, lambda).unwrap().verdict, Verdict::Pass);
    }
}

#[test]
fn branch_solutions_estimates() {
    let base: Arc<SphereBase> = SphereBase::new(2).unwrap();
    let branch = continue_branch(&base, -0.3, 0.5, 0.1, 1e-9).unwrap();
    assert!(branch.truncated.is_empty());
    for s in &branch.samples {
        let g = GraphOverSphere::new(base.clone(), s.u.clone(), s.lambda).unwrap();
        let mesh = graph_mesh(&g).unwrap();
        assert_gauss_bonnet(&mesh, &format!("branch λ={}", s.lambda));
        let rep = sphere_intersection_check(&mesh, s.lambda).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "λ={}: {rep:?}", s.lambda);
    }
}

#[test]
fn monotonicity_with_unit_weight() {
    for lambda in [0.0, 0.5] {
        let mesh = build_primitive(&ShapeSpec::icosphere(lambda_sphere_radius(lambda), 4)).unwrap();
        let ones = vec![1.0; mesh.n_vertices()];
        let x0 = mesh.vertices()[7];
        let rep = monotonicity_profile(&mesh, lambda, &x0, &ones, 1.0).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert!(rep.parameters["K"].is_finite());
    }
}

#[test]
fn torus_residual_is_translation_covariant() {
    let (_, mesh) = shoot_revolution(0.0, RevolutionMode::TorusLike, 3.3, &RevolveOptions::at_level(4)).unwrap();
    let original = lambda_residual(&mesh, 0.0).unwrap();
    for (z, alpha) in [(Vec3::new(0.3, -0.2, 0.1), 2.0), (Vec3::new(0.0, 0.0, 0.1), 1.0)] {
        let shifted = rescaled_residual(&mesh, &z, alpha, 0.0).unwrap();
        let worst = original.iter().zip(&shifted).map(|(o, s)| (alpha * s - o).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "z={z:?} α={alpha}: {worst:e}");
    }
}
