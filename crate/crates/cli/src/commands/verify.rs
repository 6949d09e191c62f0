use anyhow::Result;
use clap::Args;
use lamsurf_core::curvature::max_abs;
use lamsurf_core::identities::{
    require_lambda_surface, verify_drift_distance_identity, verify_eigenfunction_identity, verify_simons, IdentityReport,
    SIMONS_SIGN,
};
use lamsurf_core::mesh::{write_curvature_csv, write_obj};
use lamsurf_core::{Error, TriMesh, Vec3};
use serde_json::json;

use crate::config::{build_shape, Common};
use crate::report::{Artifact, Check, Report};

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
}

fn identity_check(name: &str, rep: &lamsurf_core::Result<IdentityReport>, tol: f64) -> Check {
    match rep {
        Ok(r) if r.exact_zero => Check::info(name, Some(0.0)).detail("both sides vanish"),
        Ok(r) => Check::at_most(name, r.residual_rel, tol),
        Err(e) => Check::failed(name, e),
    }
}

/// Every identity verifier on one mesh.
pub fn identities(report: &mut Report, mesh: &TriMesh, lambda: f64, tol: f64) {
    let mut results = Vec::new();
    match require_lambda_surface(mesh, lambda, None) {
        Ok((worst, threshold)) => report.push(Check::at_most("lambda_surface", worst, threshold)),
        Err(Error::NotLambdaSurface { residual, threshold }) => {
            report.push(Check::at_most("lambda_surface", residual, threshold))
        }
        Err(e) => report.push(Check::failed("lambda_surface", e)),
    }
    for (axis, v) in [("x", Vec3::x()), ("y", Vec3::y()), ("z", Vec3::z())] {
        let rep = verify_eigenfunction_identity(mesh, lambda, &v, None);
        report.push(identity_check(&format!("eigenfunction_{axis}"), &rep, tol));
        results.push(json!({ "check": format!("eigenfunction_{axis}"), "report": rep.ok() }));
    }
    for (label, x0) in [("origin", Vec3::zeros()), ("e1", Vec3::x())] {
        let rep = verify_drift_distance_identity(mesh, lambda, &x0, None);
        report.push(identity_check(&format!("drift_distance_{label}"), &rep, tol));
        results.push(json!({ "check": format!("drift_distance_{label}"), "report": rep.ok() }));
    }
    let rep = verify_simons(mesh, lambda, SIMONS_SIGN, None);
    match &rep {
        Err(Error::UnsupportedSurface(why)) => {
            report.push(Check::info("simons", None).detail(format!("skipped: {why}")))
        }
        _ => report.push(identity_check("simons", &rep, tol)),
    }
    results.push(json!({ "check": "simons", "sign": SIMONS_SIGN, "report": rep.ok() }));
    report.results = json!({ "identities": results });
}

pub fn run(args: &VerifyArgs) -> Result<Report> {
    let c = &args.common;
    let level = c.level_or(4)?;
    let tol = c.tol_or(0.05)?;
    let (mesh, shape) = build_shape(&c.shape, c.lambda, level)?;
    let mut report = Report::new("verify");
    report.param("lambda", c.lambda);
    report.param("shape", &shape);
    report.param("level", level);
    report.param("tol", tol);
    report.mesh_hash = Some(mesh.content_hash().to_string());
    identities(&mut report, &mesh, c.lambda, tol);
    let curv = mesh.curvature()?;
    report.results["mesh"] = json!({
        "vertices": mesh.n_vertices(),
        "faces": mesh.n_faces(),
        "euler_characteristic": mesh.euler_characteristic(),
        "max_abs_h": max_abs(&curv.h),
        "clamped_weights": curv.clamped_weights,
    });
    if c.dump_fields {
        let mut csv = Vec::new();
        write_curvature_csv(curv, &mut csv)?;
        report.artifacts.push(Artifact::new("curvature.csv", csv));
        let mut obj = Vec::new();
        write_obj(&mesh, &mut obj)?;
        report.artifacts.push(Artifact::new("mesh.obj", obj));
    }
    Ok(report)
}
