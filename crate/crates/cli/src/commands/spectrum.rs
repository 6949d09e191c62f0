use anyhow::Result;
use clap::{Args, ValueEnum};
use lamsurf_core::eigen::{spectrum, WhichEnd};
use lamsurf_core::lambda_sphere_radius;
use lamsurf_core::operators::{drift_laplacian, stability_operator};
use serde_json::json;

use crate::config::{build_shape, Common, Shape};
use crate::report::{csv, Artifact, Check, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorChoice {
    Stability,
    Drift,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of eigenpairs from the top of the spectrum.
    #[arg(long, default_value_t = 9)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = OperatorChoice::Stability)]
    pub operator: OperatorChoice,
}

/// Top of the spectrum of `Δ + 2/r² + ½` (or `Δ` for the drift Laplacian)
/// on the round sphere of radius `r`.
pub fn round_sphere_top(r: f64, count: usize, stability: bool) -> Vec<f64> {
    let shift = if stability { 2.0 / (r * r) + 0.5 } else { 0.0 };
    let mut out = Vec::with_capacity(count);
    let mut l = 0usize;
    while out.len() < count {
        let mu = -((l * (l + 1)) as f64) / (r * r) + shift;
        out.extend(std::iter::repeat_n(mu, (2 * l + 1).min(count - out.len())));
        l += 1;
    }
    out
}

/// Smallest eigenvalue magnitude among the computed ones, provided the
/// computed range crosses zero.
pub fn gap_around_zero(eigenvalues: &[f64]) -> Option<f64> {
    let crosses = eigenvalues.iter().any(|&m| m < 0.0) && eigenvalues.iter().any(|&m| m > 0.0);
    crosses.then(|| eigenvalues.iter().map(|m| m.abs()).fold(f64::INFINITY, f64::min))
}

pub fn run(args: &SpectrumArgs) -> Result<Report> {
    let c = &args.common;
    let level = c.level_or(4)?;
    let tol = c.tol_or(0.02)?;
    anyhow::ensure!(args.count >= 1, "--count must be at least 1");
    let (mesh, shape) = build_shape(&c.shape, c.lambda, level)?;
    let stability = args.operator == OperatorChoice::Stability;
    let mut report = Report::new("spectrum");
    report.param("lambda", c.lambda);
    report.param("shape", &shape);
    report.param("level", level);
    report.param("tol", tol);
    report.param("count", args.count);
    report.param("operator", if stability { "stability" } else { "drift" });
    report.mesh_hash = Some(mesh.content_hash().to_string());

    let op = if stability { stability_operator(&mesh)? } else { drift_laplacian(&mesh)? };
    let spec = match spectrum(&op, args.count, WhichEnd::Largest) {
        Ok(s) => s,
        Err(e) => {
            report.push(Check::failed("eigensolver", e));
            return Ok(report);
        }
    };
    let worst = spec.residuals.iter().copied().fold(0.0, f64::max);
    report.push(Check::at_most("eigen_residual", worst, 1e-6));
    if c.shape == Shape::Sphere {
        let expect = round_sphere_top(lambda_sphere_radius(c.lambda), args.count, stability);
        let err = spec
            .eigenvalues
            .iter()
            .zip(&expect)
            .map(|(m, p)| (m - p).abs() / p.abs().max(0.05))
            .fold(0.0, f64::max);
        report.push(Check::at_most("round_sphere_spectrum", err, tol));
        report.results["predicted"] = json!(expect);
    }
    let gap = gap_around_zero(&spec.eigenvalues);
    report.push(Check::info("gap_around_zero", gap));
    report.results["operator"] = json!(if stability { "stability" } else { "drift" });
    report.results["eigenvalues"] = json!(spec.eigenvalues);
    report.results["residuals"] = json!(spec.residuals);
    report.results["restarts"] = json!(spec.restarts);
    report.results["gap_around_zero"] = json!(gap);
    if c.dump_fields {
        let mut header = vec!["vertex_id".to_string()];
        header.extend((0..spec.eigenvectors.len()).map(|k| format!("phi{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..mesh.n_vertices()).map(|i| {
            let mut row = vec![i as f64];
            row.extend(spec.eigenvectors.iter().map(|v| v[i]));
            row
        });
        report.artifacts.push(Artifact::new("eigenvectors.csv", csv(&header, rows)));
    }
    Ok(report)
}
