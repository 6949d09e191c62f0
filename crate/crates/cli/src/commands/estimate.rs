use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lamsurf_core::curvature::lambda_residual;
use lamsurf_core::estimates::{
    choi_schoen_quantity, convex_area_growth, gauss_bonnet_check, monotonicity_profile, reflex_edges,
    rescaled_residual, singularity_diagnostic, sphere_intersection_check, EstimateReport, Verdict,
};
use lamsurf_core::mesh::read_mesh;
use lamsurf_core::{TriMesh, Vec3};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::config::{build_shape, Common};
use crate::report::{Check, Report, Status};

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSON list of {check, mesh_path, params}; paths relative to the file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    pub check: String,
    pub mesh_path: PathBuf,
    #[serde(default)]
    pub params: Map<String, Value>,
}

pub const CHECKS: [&str; 7] = [
    "gauss_bonnet",
    "monotonicity",
    "choi_schoen",
    "singularity",
    "convex_area_growth",
    "sphere_intersection",
    "rescaled_residual",
];

struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn num(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.0.get(key) {
            Some(v) => v.as_f64().with_context(|| format!("parameter `{key}` must be a number")),
            None => default.with_context(|| format!("missing parameter `{key}`")),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.0.get(key) else { return Ok(None) };
        let arr = v.as_array().with_context(|| format!("parameter `{key}` must be a list"))?;
        arr.iter()
            .map(|x| x.as_f64().with_context(|| format!("parameter `{key}` must hold numbers")))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn point(&self, key: &str, default: Vec3) -> Result<Vec3> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 3 => Ok(Vec3::new(v[0], v[1], v[2])),
            Some(_) => bail!("parameter `{key}` must have three entries"),
        }
    }

    fn text<'b>(&'b self, key: &str, default: &'b str) -> Result<&'b str> {
        match self.0.get(key) {
            Some(v) => v.as_str().with_context(|| format!("parameter `{key}` must be a string")),
            None => Ok(default),
        }
    }
}

/// Runs one named estimate. Covariance of the rescaled residual is
/// reported as an inequality `max|α·rescaled − original| ≤ 1e-10·scale`.
pub fn evaluate(mesh: &TriMesh, check: &str, params: &Map<String, Value>) -> Result<EstimateReport> {
    let p = Params(params);
    let rep = match check {
        "gauss_bonnet" => {
            let x0 = p.point("x0", Vec3::zeros())?;
            gauss_bonnet_check(mesh, &x0, p.num("r", None)?, p.num("R", None)?, p.num("epsilon", Some(0.5))?)?
        }
        "monotonicity" => {
            let lambda = p.num("lambda", Some(0.0))?;
            let x0 = p.point("x0", mesh.vertices()[0])?;
            let f: Vec<f64> = match p.text("f", "one")? {
                "one" => vec![1.0; mesh.n_vertices()],
                "zero" => vec![0.0; mesh.n_vertices()],
                "a2" => mesh.curvature()?.a_norm2.clone(),
                other => bail!("unknown weight `{other}` (one, zero, a2)"),
            };
            monotonicity_profile(mesh, lambda, &x0, &f, p.num("t", Some(1.0))?)?
        }
        "choi_schoen" => {
            let x0 = p.point("x0", mesh.vertices()[0])?;
            choi_schoen_quantity(mesh, &x0, p.num("r", Some(1.0))?)?
        }
        "singularity" => singularity_diagnostic(mesh, &p.point("x0", Vec3::zeros())?)?,
        "convex_area_growth" => {
            let x0 = p.point("x0", Vec3::zeros())?;
            let radii = match p.list("radii")? {
                Some(r) => r,
                None => default_radii(mesh),
            };
            convex_area_growth(mesh, &x0, &radii)?
        }
        "sphere_intersection" => sphere_intersection_check(mesh, p.num("lambda", Some(0.0))?)?,
        "rescaled_residual" => {
            let lambda = p.num("lambda", Some(0.0))?;
            let alpha = p.num("alpha", Some(2.0))?;
            let z = p.point("z", Vec3::zeros())?;
            let original = lambda_residual(mesh, lambda)?;
            let rescaled = rescaled_residual(mesh, &z, alpha, lambda)?;
            let scale = original.iter().fold(1.0f64, |m, r| m.max(r.abs()));
            let worst = original.iter().zip(&rescaled).map(|(o, r)| (alpha * r - o).abs()).fold(0.0, f64::max);
            let mut rep = EstimateReport {
                name: "rescaled_residual".into(),
                lhs: worst,
                rhs: Some(1e-10 * scale),
                margin: Some(1e-10 * scale - worst),
                tolerance: 0.0,
                parameters: Default::default(),
                x0: Some([z.x, z.y, z.z]),
                profile: None,
                verdict: if worst <= 1e-10 * scale { Verdict::Pass } else { Verdict::Fail },
            };
            rep.parameters.insert("alpha".into(), alpha);
            rep.parameters.insert("lambda".into(), lambda);
            rep.parameters.insert("max_rescaled".into(), rescaled.iter().fold(0.0, |m, r| m.max(r.abs())));
            rep
        }
        other => bail!("unknown check `{other}` (one of {})", CHECKS.join(", ")),
    };
    Ok(rep)
}

fn default_radii(mesh: &TriMesh) -> Vec<f64> {
    let far = mesh.vertices().iter().map(Vec3::norm).fold(0.0, f64::max);
    [0.5, 0.75, 1.0, 1.25, 1.5, 2.0].iter().map(|k| k * far).collect()
}

/// The default suite on one surface.
fn default_jobs(mesh: &TriMesh, lambda: f64) -> Vec<(String, Map<String, Value>)> {
    let far = mesh.vertices().iter().map(Vec3::norm).fold(0.0, f64::max);
    let big_r = 1.05 * far;
    let obj = |v: Value| v.as_object().cloned().unwrap_or_default();
    let mut jobs = Vec::new();
    for eps in [0.25, 0.5] {
        jobs.push(("gauss_bonnet".into(), obj(json!({ "r": 0.6 * big_r, "R": big_r, "epsilon": eps }))));
    }
    jobs.push(("monotonicity".into(), obj(json!({ "lambda": lambda, "t": 1.0, "f": "one" }))));
    jobs.push(("choi_schoen".into(), obj(json!({ "r": 1.0 }))));
    jobs.push(("singularity".into(), Map::new()));
    if reflex_edges(mesh) == 0 {
        jobs.push(("convex_area_growth".into(), Map::new()));
    }
    if mesh.is_closed() {
        jobs.push(("sphere_intersection".into(), obj(json!({ "lambda": lambda }))));
    }
    jobs.push(("rescaled_residual".into(), obj(json!({ "lambda": lambda, "alpha": 2.0, "z": [0.3, -0.2, 0.1] }))));
    jobs
}

fn status(verdict: Verdict) -> Status {
    match verdict {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Informational => Status::Info,
    }
}

fn record(report: &mut Report, label: String, outcome: Result<EstimateReport>) -> Value {
    match outcome {
        Ok(rep) => {
            report.push(Check {
                name: label,
                status: status(rep.verdict),
                value: Some(rep.lhs),
                tolerance: rep.rhs,
                detail: None,
            });
            json!(rep)
        }
        Err(e) => {
            report.push(Check::failed(label, format!("{e:#}")));
            Value::Null
        }
    }
}

fn load_manifest(path: &Path) -> Result<Vec<Job>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let jobs: Vec<Job> =
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
    if let Some(j) = jobs.iter().find(|j| !CHECKS.contains(&j.check.as_str())) {
        bail!("unknown check `{}` in {} (one of {})", j.check, path.display(), CHECKS.join(", "));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    Ok(jobs
        .into_iter()
        .map(|mut j| {
            if j.mesh_path.is_relative() {
                j.mesh_path = dir.join(&j.mesh_path);
            }
            j
        })
        .collect())
}

pub fn run(args: &EstimateArgs) -> Result<Report> {
    let c = &args.common;
    let mut report = Report::new("estimate");
    match &args.manifest {
        Some(path) => {
            let jobs = load_manifest(path)?;
            report.param("manifest", path.display().to_string());
            report.param("jobs", jobs.len());
            let meshes: Vec<Result<TriMesh>> = jobs
                .par_iter()
                .map(|j| read_mesh(&j.mesh_path).with_context(|| format!("reading {}", j.mesh_path.display())))
                .collect();
            let outcomes: Vec<Result<EstimateReport>> = jobs
                .par_iter()
                .zip(&meshes)
                .map(|(j, m)| match m {
                    Ok(m) => evaluate(m, &j.check, &j.params),
                    Err(e) => Err(anyhow::anyhow!("{e:#}")),
                })
                .collect();
            let mut results = Vec::new();
            for (k, ((job, mesh), outcome)) in jobs.iter().zip(&meshes).zip(outcomes).enumerate() {
                let rep = record(&mut report, format!("{}[{k}]", job.check), outcome);
                results.push(json!({
                    "check": job.check,
                    "mesh_path": job.mesh_path.display().to_string(),
                    "mesh_hash": mesh.as_ref().ok().map(|m| m.content_hash().to_string()),
                    "params": job.params,
                    "report": rep,
                }));
            }
            report.results = json!({ "jobs": results });
        }
        None => {
            let level = c.level_or(4)?;
            let (mesh, shape) = build_shape(&c.shape, c.lambda, level)?;
            report.param("lambda", c.lambda);
            report.param("shape", &shape);
            report.param("level", level);
            report.mesh_hash = Some(mesh.content_hash().to_string());
            let jobs = default_jobs(&mesh, c.lambda);
            let outcomes: Vec<Result<EstimateReport>> =
                jobs.par_iter().map(|(check, params)| evaluate(&mesh, check, params)).collect();
            let mut results = Vec::new();
            for (k, ((check, params), outcome)) in jobs.iter().zip(outcomes).enumerate() {
                let rep = record(&mut report, format!("{check}[{k}]"), outcome);
                results.push(json!({ "check": check, "params": params, "report": rep }));
            }
            report.results = json!({ "jobs": results });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lamsurf_core::mesh::{build_primitive, ShapeSpec};

    #[test]
    fn unknown_checks_and_bad_params_are_errors() {
        let m = build_primitive(&ShapeSpec::icosphere(2.0, 2)).unwrap();
        assert!(evaluate(&m, "bogus", &Map::new()).is_err());
        assert!(evaluate(&m, "gauss_bonnet", &Map::new()).is_err());
        let bad = json!({ "r": "x", "R": 3.0 }).as_object().cloned().unwrap();
        assert!(evaluate(&m, "gauss_bonnet", &bad).is_err());
    }

    #[test]
    fn default_suite_passes_on_shrinker_sphere() {
        let m = build_primitive(&ShapeSpec::icosphere(2.0, 3)).unwrap();
        for (check, params) in default_jobs(&m, 0.0) {
            let rep = evaluate(&m, &check, &params).unwrap();
            assert!(rep.passed(), "{check}: {rep:?}");
        }
    }
}
