use std::f64::consts::PI;

use lamsurf_core::curvature::lambda_residual;
use lamsurf_core::estimates::{convex_area_growth, rescaled_residual};
use lamsurf_core::mesh::{build_primitive, ShapeSpec};
use lamsurf_core::operators::{drift_laplacian, stability_operator};
use lamsurf_core::shooting::{integrate_curve, integrate_rescaled_curve, PlanarCurveState};
use lamsurf_core::{TriMesh, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shapes() -> Vec<TriMesh> {
    [
        ShapeSpec::icosphere(2.0, 2),
        ShapeSpec::torus(2.0, 0.7, 2),
        ShapeSpec::ellipsoid(2.0, 1.5, 1.0, 2),
        ShapeSpec::disk(1.5, 2),
    ]
    .iter()
    .map(|s| build_primitive(s).unwrap())
    .collect()
}

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn operators_are_self_adjoint(shape in 0usize..4, seed in any::<u64>(), stability in any::<bool>()) {
        let mesh = &shapes()[shape];
        let op = if stability { stability_operator(mesh) } else { drift_laplacian(mesh) }.unwrap();
        let phi = random_field(op.dim(), seed);
        let psi = random_field(op.dim(), seed ^ 0x9e37_79b9);
        let (lphi, lpsi) = (op.apply(&phi), op.apply(&psi));
        let a = op.inner(&lphi, &psi);
        let b = op.inner(&phi, &lpsi);
        let scale = op.norm(&lphi) * op.norm(&psi) + op.norm(&phi) * op.norm(&lpsi);
        prop_assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
    }

    #[test]
    fn green_identity_holds(shape in 0usize..4, seed in any::<u64>()) {
        let mesh = &shapes()[shape];
        let op = stability_operator(mesh).unwrap();
        let phi = random_field(op.dim(), seed);
        let q = op.quadratic_form(&phi);
        let pairing = op.inner(&phi, &op.apply(&phi));
        prop_assert!((q + pairing).abs() <= 1e-10 * (q.abs() + pairing.abs()).max(1e-300));
    }

    #[test]
    fn residual_shifts_by_lambda(shape in 0usize..4, lambda in -3.0f64..3.0) {
        let mesh = &shapes()[shape];
        let base = lambda_residual(mesh, 0.0).unwrap();
        let shifted = lambda_residual(mesh, lambda).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            prop_assert_eq!(*b, *a - lambda);
        }
    }

    #[test]
    fn cubic_newton_identity(a in 0.8f64..3.0, b in 0.8f64..3.0, c in 0.8f64..3.0) {
        let mesh = build_primitive(&ShapeSpec::ellipsoid(a, b, c, 2)).unwrap();
        let curv = mesh.curvature().unwrap();
        for (k, a3) in curv.principal.iter().zip(&curv.a3) {
            let h = k[0] + k[1];
            let lhs = k[0].powi(3) + k[1].powi(3);
            let rhs = h.powi(3) - 3.0 * h * k[0] * k[1];
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-12));
            prop_assert!((lhs - a3).abs() <= 1e-9 * lhs.abs().max(1e-12));
        }
    }

    #[test]
    fn convex_meshes_have_positive_mean_curvature(a in 0.8f64..3.0, b in 0.8f64..3.0, c in 0.8f64..3.0) {
        let mesh = build_primitive(&ShapeSpec::ellipsoid(a, b, c, 3)).unwrap();
        prop_assert!(mesh.curvature().unwrap().h.iter().all(|h| *h > 0.0));
    }

    #[test]
    fn rescaling_is_covariant(
        shape in 0usize..4,
        lambda in -1.0f64..1.0,
        alpha in 0.1f64..10.0,
        z in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let mesh = &shapes()[shape];
        let z = Vec3::new(z[0], z[1], z[2]);
        let original = lambda_residual(mesh, lambda).unwrap();
        let rescaled = rescaled_residual(mesh, &z, alpha, lambda).unwrap();
        let scale = original.iter().fold(1.0f64, |m, r| m.max(r.abs()));
        for (o, r) in original.iter().zip(&rescaled) {
            prop_assert!((alpha * r - o).abs() <= 1e-10 * scale, "{} vs {}", alpha * r, o);
        }
    }

    #[test]
    fn curves_reflect_across_launch_axis(lambda in -2.0f64..1.0, d in 0.5f64..4.0) {
        let init = PlanarCurveState::launch(d);
        let fwd = integrate_curve(&init, lambda, 2.0, 1e-3).unwrap();
        let bwd = integrate_curve(&init, lambda, -2.0, 1e-3).unwrap();
        for (p, q) in fwd.iter().zip(&bwd) {
            prop_assert!((p.x - q.x).abs() < 1e-12);
            prop_assert!((p.y + q.y).abs() < 1e-12);
            prop_assert!((p.theta + q.theta - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_rescaling_reproduces_curve(lambda in -2.0f64..1.0, x in 0.5f64..3.0, theta in -3.0f64..3.0) {
        let init = PlanarCurveState::new(x, 0.0, theta);
        let a = integrate_curve(&init, lambda, 1.5, 1e-3).unwrap();
        let b = integrate_rescaled_curve(&init, lambda, 1.0, 1.5, 1e-3).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn area_growth_ratio_is_nonincreasing(r in 0.5f64..3.0) {
        let mesh = build_primitive(&ShapeSpec::icosphere(r, 3)).unwrap();
        let radii: Vec<f64> = (0..12).map(|k| r * (1.0 + 0.25 * k as f64)).collect();
        let rep = convex_area_growth(&mesh, &Vec3::zeros(), &radii).unwrap();
        let profile = rep.profile.unwrap();
        for w in profile.windows(2) {
            prop_assert!(w[1][1] <= w[0][1] + 1e-12, "{:?}", w);
        }
        prop_assert!(profile.iter().all(|p| p[1] <= 1.0));
        let expect = (r / radii[11]).powi(2);
        prop_assert!((profile[11][1] - expect).abs() < 0.01 * expect);
    }
}
