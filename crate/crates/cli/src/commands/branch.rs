use anyhow::Result;
use clap::Args;
use lamsurf_core::continuation::{
    continue_branch, linearization_order, rigidity_experiment, RigidityOutcome, SphereBase,
};
use serde_json::json;

use crate::config::{Common, List};
use crate::report::{csv, Artifact, Check, Report};

/// λ-range over which the round branch is certified.
pub const CERTIFIED: (f64, f64) = (-0.3, 0.5);
/// Largest perturbation amplitude asserted to return to the round sphere.
pub const CERTIFIED_AMPLITUDE: f64 = 0.05;

#[derive(Debug, Clone, Args)]
pub struct ContinueArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = CERTIFIED.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = CERTIFIED.1, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Newton residual tolerance (sup norm).
    #[arg(long, default_value_t = 1e-10)]
    pub newton_tol: f64,
    /// Comma-separated perturbation amplitudes for the rigidity grid.
    #[arg(long, default_value = "")]
    pub amplitudes: List,
    /// Extra λ values for the rigidity grid, outside the branch if desired.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub rigidity_lambdas: List,
}

fn within_certified(lambda: f64) -> bool {
    lambda >= CERTIFIED.0 - 1e-12 && lambda <= CERTIFIED.1 + 1e-12
}

pub fn run(args: &ContinueArgs) -> Result<Report> {
    let c = &args.common;
    let level = c.level_or(3)?;
    let tol = c.tol_or(1e-4)?;
    anyhow::ensure!(args.newton_tol > 0.0, "--newton-tol must be positive");
    let amplitudes = &args.amplitudes.0;
    let mut report = Report::new("continue");
    report.param("level", level);
    report.param("tol", tol);
    report.param("from", args.from);
    report.param("to", args.to);
    report.param("step", args.step);
    report.param("newton_tol", args.newton_tol);
    report.param("amplitudes", amplitudes);
    report.param("rigidity_lambdas", &args.rigidity_lambdas.0);
    report.param("seed", c.seed);

    let base = SphereBase::new(level)?;
    report.mesh_hash = Some(base.mesh.content_hash().to_string());
    report.push(Check::info("base_spectral_gap", Some(base.spectral_gap)));
    let branch = match continue_branch(&base, args.from, args.to, args.step, args.newton_tol) {
        Ok(b) => b,
        Err(e) => {
            report.push(Check::failed("branch", e));
            return Ok(report);
        }
    };
    let complete = branch.truncated.is_empty();
    let mut check = Check::flag("branch_complete", complete);
    if !complete {
        check = check.detail(branch.truncated.join("; "));
    }
    report.push(check);
    let deviation = branch
        .samples
        .iter()
        .filter(|s| within_certified(s.lambda))
        .map(|s| s.round_deviation)
        .fold(0.0, f64::max);
    report.push(Check::at_most("round_branch", deviation, tol));
    let residual = branch.samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    report.push(Check::at_most("newton_residual", residual, args.newton_tol));
    let nonneg: Vec<f64> = branch.samples.iter().filter(|s| s.lambda >= 0.0).map(|s| s.gaussian_area).collect();
    report.push(Check::flag("gaussian_area_decreasing", nonneg.windows(2).all(|w| w[1] < w[0])));
    let qc = branch.samples.iter().filter_map(|s| s.quadratic_constant).fold(None, |m: Option<f64>, q| {
        Some(m.map_or(q, |m| m.max(q)))
    });
    report.push(Check::info("quadratic_constant", qc));

    match linearization_order(level, 0.0, 0.1) {
        Ok(ratio) => report.push(Check::at_most("linearization_order", ratio, 0.30)),
        Err(e) => report.push(Check::failed("linearization_order", e)),
    }

    let mut cells = Vec::new();
    if !amplitudes.is_empty() {
        let mut lambdas: Vec<f64> = branch.samples.iter().map(|s| s.lambda).collect();
        lambdas.extend(&args.rigidity_lambdas.0);
        cells = rigidity_experiment(&base, &lambdas, amplitudes, args.newton_tol, c.seed);
        let bad: Vec<String> = cells
            .iter()
            .filter(|x| within_certified(x.lambda) && x.amplitude <= CERTIFIED_AMPLITUDE)
            .filter(|x| x.outcome != RigidityOutcome::Round)
            .map(|x| format!("λ={} amp={}: {:?}", x.lambda, x.amplitude, x.outcome))
            .collect();
        let mut check = Check::flag("rigidity_round", bad.is_empty());
        if !bad.is_empty() {
            check = check.detail(bad.join("; "));
        }
        report.push(check);
    }

    let mut lines = String::new();
    for s in &branch.samples {
        lines.push_str(&serde_json::to_string(s)?);
        lines.push('\n');
    }
    report.artifacts.push(Artifact::new("branch.jsonl", lines.into_bytes()));
    if c.dump_fields {
        let mut header = vec!["vertex_id".to_string()];
        header.extend(branch.samples.iter().map(|s| format!("u_at_{}", s.lambda)));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..base.n_vertices()).map(|i| {
            let mut row = vec![i as f64];
            row.extend(branch.samples.iter().map(|s| s.u[i]));
            row
        });
        report.artifacts.push(Artifact::new("fields.csv", csv(&header, rows)));
    }
    report.results = json!({
        "samples": branch.samples,
        "truncated": branch.truncated,
        "rigidity": cells,
        "max_round_deviation": deviation,
        "quadratic_constant": qc,
    });
    Ok(report)
}
