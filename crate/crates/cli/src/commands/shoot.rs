use anyhow::Result;
use clap::{Args, ValueEnum};
use lamsurf_core::mesh::write_obj;
use lamsurf_core::shooting::{
    curve_invariants, shoot_closed_curve, shoot_revolution, sweep_closed_curves, sweep_torus, Classification,
    RevolutionMode, RevolveOptions, ShootResult,
};
use lamsurf_core::{lambda_circle_radius, lambda_sphere_radius, Vec3};
use serde_json::{json, Value};

use crate::commands::verify::identities;
use crate::config::{Common, Sweep};
use crate::report::{csv, Artifact, Check, Report};

/// Closure tolerance for a profile or curve to count as closed.
pub const CLOSURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Args)]
pub struct ShootCurveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Order of the dihedral symmetry imposed on the curve.
    #[arg(long, default_value_t = 2)]
    pub symmetry: usize,
    /// Launch distance; defaults to the round circle radius.
    #[arg(long)]
    pub guess: Option<f64>,
    /// Sweep launch distances LO,HI,N instead of shooting from one guess.
    #[arg(long)]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    SphereLike,
    TorusLike,
}

#[derive(Debug, Clone, Args)]
pub struct ShootRevolutionArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = ModeChoice::SphereLike)]
    pub mode: ModeChoice,
    /// Pole depth (sphere-like) or equatorial radius (torus-like).
    #[arg(long)]
    pub guess: Option<f64>,
    /// Torus-like only: sweep equatorial radii LO,HI,N.
    #[arg(long)]
    pub sweep: Option<Sweep>,
}

fn summary(res: &ShootResult) -> Value {
    json!({
        "lambda": res.lambda,
        "kind": res.kind,
        "parameter": res.parameter,
        "iterations": res.iterations,
        "section_defect": res.section_defect,
        "closure_defect": res.closure_defect,
        "classification": res.classification,
        "curvature_stats": res.curvature_stats,
        "samples": res.trajectory.len(),
        "min_radius": res.min_radius(),
        "max_radius": res.max_radius(),
    })
}

fn trajectory_csv(res: &ShootResult) -> Vec<u8> {
    csv(&["s", "x", "y", "theta", "kappa"], res.trajectory.iter().map(|p| vec![p.s, p.x, p.y, p.theta, p.kappa]))
}

pub fn run_curve(args: &ShootCurveArgs) -> Result<Report> {
    let c = &args.common;
    anyhow::ensure!(args.symmetry >= 1, "--symmetry must be at least 1");
    let mut report = Report::new("shoot-curve");
    report.param("lambda", c.lambda);
    report.param("symmetry", args.symmetry);
    report.param("closure_tol", CLOSURE_TOL);
    let found = match args.sweep {
        Some(s) => {
            report.param("sweep", [s.lo, s.hi, s.n as f64]);
            sweep_closed_curves(c.lambda, args.symmetry, s.lo, s.hi, s.n)
        }
        None => {
            let guess = args.guess.unwrap_or_else(|| lambda_circle_radius(c.lambda));
            report.param("guess", guess);
            shoot_closed_curve(c.lambda, args.symmetry, guess).map(|r| vec![r])
        }
    };
    let found = match found {
        Ok(f) => f,
        Err(e) => {
            report.push(Check::failed("closed_curve", e));
            return Ok(report);
        }
    };
    let closed: Vec<&ShootResult> =
        found.iter().filter(|r| r.is_closed() && r.closure_defect <= CLOSURE_TOL).collect();
    report.push(Check::flag("closed_curve", !closed.is_empty()));
    let noncircular = closed.iter().filter(|r| r.classification == Classification::ClosedNoncircular).count();
    report.push(Check::info("noncircular_count", Some(noncircular as f64)));
    let mut curves = Vec::new();
    let mut apart = Vec::new();
    for (k, res) in found.iter().enumerate() {
        let mut v = summary(res);
        if let Ok(inv) = curve_invariants(res) {
            if !inv.intersects_round {
                apart.push(format!("curve {k} (winding {})", inv.winding_number));
            }
            v["invariants"] = json!(inv);
        }
        curves.push(v);
        if c.dump_fields {
            report.artifacts.push(Artifact::new(format!("curve_{k}.csv"), trajectory_csv(res)));
        }
    }
    // the maximum-principle argument needs the outward normal at the
    // farthest point, which immersed curves need not have
    let mut meets = Check::info("curves_missing_round_circle", Some(apart.len() as f64));
    if !apart.is_empty() {
        meets = meets.detail(apart.join(", "));
    }
    report.push(meets);
    report.results = json!({ "round_radius": lambda_circle_radius(c.lambda), "curves": curves });
    Ok(report)
}

pub fn run_revolution(args: &ShootRevolutionArgs) -> Result<Report> {
    let c = &args.common;
    let level = c.level_or(4)?;
    let tol = c.tol_or(0.05)?;
    let opts = RevolveOptions::at_level(level);
    let mut report = Report::new("shoot-revolution");
    report.param("lambda", c.lambda);
    report.param("level", level);
    report.param("tol", tol);
    report.param("closure_tol", CLOSURE_TOL);
    let shot = match args.mode {
        ModeChoice::SphereLike => {
            report.param("mode", "sphere_like");
            let guess = args.guess.unwrap_or_else(|| lambda_sphere_radius(c.lambda));
            report.param("guess", guess);
            shoot_revolution(c.lambda, RevolutionMode::SphereLike, guess, &opts)
        }
        ModeChoice::TorusLike => {
            report.param("mode", "torus_like");
            match (args.guess, args.sweep) {
                (Some(g), _) => {
                    report.param("guess", g);
                    shoot_revolution(c.lambda, RevolutionMode::TorusLike, g, &opts)
                }
                (None, sweep) => {
                    let s = sweep.unwrap_or(Sweep { lo: 1.0, hi: 5.0, n: 48 });
                    report.param("sweep", [s.lo, s.hi, s.n as f64]);
                    sweep_torus(c.lambda, s.lo, s.hi, s.n, &opts).map(|v| {
                        v.into_iter()
                            .min_by(|a, b| a.0.closure_defect.total_cmp(&b.0.closure_defect))
                            .expect("sweep returns at least one profile")
                    })
                }
            }
        }
    };
    let (res, mesh) = match shot {
        Ok(s) => s,
        Err(e) => {
            report.push(Check::failed("closed_profile", e));
            return Ok(report);
        }
    };
    report.mesh_hash = Some(mesh.content_hash().to_string());
    report.push(Check::at_most("closed_profile", res.closure_defect, CLOSURE_TOL));
    identities(&mut report, &mesh, c.lambda, tol);
    let identities = report.results["identities"].take();
    let norms: Vec<f64> = mesh.vertices().iter().map(Vec3::norm).collect();
    report.results = json!({
        "profile": summary(&res),
        "identities": identities,
        "mesh": {
            "vertices": mesh.n_vertices(),
            "faces": mesh.n_faces(),
            "euler_characteristic": mesh.euler_characteristic(),
            "min_norm": norms.iter().copied().fold(f64::INFINITY, f64::min),
            "max_norm": norms.iter().copied().fold(0.0, f64::max),
        },
    });
    let mut obj = Vec::new();
    write_obj(&mesh, &mut obj)?;
    report.artifacts.push(Artifact::new("revolution.obj", obj));
    if c.dump_fields {
        report.artifacts.push(Artifact::new("profile.csv", trajectory_csv(&res)));
    }
    Ok(report)
}
