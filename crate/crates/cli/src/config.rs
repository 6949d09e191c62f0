use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use lamsurf_core::mesh::{build_primitive, read_mesh, ShapeSpec};
use lamsurf_core::shooting::{sweep_torus, RevolveOptions};
use lamsurf_core::{lambda_circle_radius, lambda_sphere_radius, Error, TriMesh};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const MAX_LEVEL: usize = 6;

/// Flags shared by every computing subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// λ in `H = ⟨x,n⟩/2 + λ`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// sphere, torus, cylinder, disk or file:PATH.
    #[arg(long, default_value = "sphere")]
    pub shape: Shape,
    /// Refinement level (at most 6).
    #[arg(long)]
    pub level: Option<usize>,
    /// Override of the command's main tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for reports and artifacts; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Omit wall-clock fields so reports are byte-reproducible.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Also write per-vertex fields and trajectories as CSV.
    #[arg(long)]
    pub dump_fields: bool,
}

impl Common {
    pub fn level_or(&self, default: usize) -> Result<usize> {
        let level = self.level.unwrap_or(default);
        if level > MAX_LEVEL {
            bail!("level {level} exceeds the memory guard ({MAX_LEVEL})");
        }
        Ok(level)
    }

    pub fn tol_or(&self, default: f64) -> Result<f64> {
        let tol = self.tol.unwrap_or(default);
        if !(tol > 0.0 && tol.is_finite()) {
            bail!("tolerance must be positive, got {tol}");
        }
        Ok(tol)
    }

    /// Arguments reproducing these flags, minus `--out`.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec![format!("--lambda={}", self.lambda), format!("--shape={}", self.shape)];
        if let Some(l) = self.level {
            a.push(format!("--level={l}"));
        }
        if let Some(t) = self.tol {
            a.push(format!("--tol={t}"));
        }
        a.push(format!("--seed={}", self.seed));
        if self.no_timestamp {
            a.push("--no-timestamp".into());
        }
        if self.dump_fields {
            a.push("--dump-fields".into());
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere,
    Torus,
    Cylinder,
    Disk,
    File(PathBuf),
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sphere" => Ok(Shape::Sphere),
            "torus" => Ok(Shape::Torus),
            "cylinder" => Ok(Shape::Cylinder),
            "disk" => Ok(Shape::Disk),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Shape::File(PathBuf::from(p))),
                _ => Err(Error::UnknownShape(s.to_string())),
            },
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Sphere => f.write_str("sphere"),
            Shape::Torus => f.write_str("torus"),
            Shape::Cylinder => f.write_str("cylinder"),
            Shape::Disk => f.write_str("disk"),
            Shape::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Builds the named surface as a λ-surface for the given λ where one is
/// available: the round sphere, a shooting torus, the round cylinder and
/// the plane through the origin (λ = 0 only).
pub fn build_shape(shape: &Shape, lambda: f64, level: usize) -> Result<(TriMesh, Value)> {
    let (mesh, info) = match shape {
        Shape::Sphere => {
            let r = lambda_sphere_radius(lambda);
            (build_primitive(&ShapeSpec::icosphere(r, level))?, json!({ "kind": "sphere", "radius": r }))
        }
        Shape::Torus => {
            let found = sweep_torus(lambda, 1.0, 5.0, 48, &RevolveOptions::at_level(level))
                .with_context(|| format!("no closed torus-like profile at λ = {lambda}"))?;
            let (res, mesh) = found
                .into_iter()
                .min_by(|a, b| a.0.closure_defect.total_cmp(&b.0.closure_defect))
                .expect("sweep returns at least one profile");
            let info = json!({
                "kind": "torus",
                "equatorial_radius": res.parameter,
                "closure_defect": res.closure_defect,
            });
            (mesh, info)
        }
        Shape::Cylinder => {
            let r = lambda_circle_radius(lambda);
            let h = 2.0 * r;
            (
                build_primitive(&ShapeSpec::cylinder_band(r, h, level))?,
                json!({ "kind": "cylinder", "radius": r, "height": h }),
            )
        }
        Shape::Disk => (build_primitive(&ShapeSpec::disk(2.0, level))?, json!({ "kind": "disk", "radius": 2.0 })),
        Shape::File(p) => (
            read_mesh(p).with_context(|| format!("reading mesh {}", p.display()))?,
            json!({ "kind": "file", "path": p.display().to_string() }),
        ),
    };
    Ok((mesh, info))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Verify,
    Spectrum,
    ShootCurve,
    ShootRevolution,
    Continue,
    Estimate,
    All,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Verify => "verify",
            CommandName::Spectrum => "spectrum",
            CommandName::ShootCurve => "shoot-curve",
            CommandName::ShootRevolution => "shoot-revolution",
            CommandName::Continue => "continue",
            CommandName::Estimate => "estimate",
            CommandName::All => "all",
        }
    }
}

/// A suite run described in a JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub command: CommandName,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub shape: Option<String>,
    #[serde(default)]
    pub level: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub no_timestamp: bool,
    #[serde(default)]
    pub dump_fields: bool,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Command line equivalent to this configuration.
    pub fn to_argv(&self) -> Vec<String> {
        let mut a = vec!["lamsurf".to_string(), self.command.as_str().to_string()];
        if let Some(l) = self.lambda {
            a.push(format!("--lambda={l}"));
        }
        if let Some(s) = &self.shape {
            a.push(format!("--shape={s}"));
        }
        if let Some(l) = self.level {
            a.push(format!("--level={l}"));
        }
        if let Some(t) = self.tol {
            a.push(format!("--tol={t}"));
        }
        if let Some(o) = &self.out {
            a.push(format!("--out={}", o.display()));
        }
        if let Some(j) = self.jobs {
            a.push(format!("--jobs={j}"));
        }
        if let Some(s) = self.seed {
            a.push(format!("--seed={s}"));
        }
        if self.no_timestamp {
            a.push("--no-timestamp".into());
        }
        if self.dump_fields {
            a.push("--dump-fields".into());
        }
        a
    }
}

/// Parses `"a,b,c"` into numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

/// Comma-separated numbers as one flag value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(List)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_list(s)?;
        match v[..] {
            [lo, hi, n] if lo < hi && n >= 1.0 && n.fract() == 0.0 => Ok(Sweep { lo, hi, n: n as usize }),
            _ => Err(format!("expected LO,HI,N with LO < HI, got `{s}`")),
        }
    }
}
