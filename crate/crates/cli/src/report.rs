use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 2;
pub const GIT_REVISION: &str = env!("LAMSURF_GIT_REV");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            status: if value <= tolerance { Status::Pass } else { Status::Fail },
            value: Some(value),
            tolerance: Some(tolerance),
            detail: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: None,
            tolerance: None,
            detail: None,
        }
    }

    pub fn info(name: impl Into<String>, value: Option<f64>) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            value,
            tolerance: None,
            detail: None,
        }
    }

    pub fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            detail: Some(err.to_string()),
            ..Self::flag(name, false)
        }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

/// A file produced alongside the report.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }
}

pub struct Report {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub mesh_hash: Option<String>,
    pub checks: Vec<Check>,
    pub results: Value,
    pub artifacts: Vec<Artifact>,
    started: Instant,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            parameters: Map::new(),
            mesh_hash: None,
            checks: Vec::new(),
            results: Value::Null,
            artifacts: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.to_string(), json!(value));
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn envelope(&self, timestamp: bool) -> Value {
        let mut v = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "lamsurf",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "git_revision": GIT_REVISION,
            "command": self.command,
            "parameters": self.parameters,
            "mesh_hash": self.mesh_hash,
            "passed": self.passed(),
            "checks": self.checks,
            "results": self.results,
        });
        if timestamp {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            v["generated_at_unix"] = json!(now);
            v["elapsed_seconds"] = json!(self.started.elapsed().as_secs_f64());
        }
        v
    }

    /// Pretty JSON with a trailing newline.
    pub fn render(&self, timestamp: bool) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.envelope(timestamp)).expect("report serializes");
        s.push('\n');
        s.into_bytes()
    }

    /// Writes `<command>.json` and the artifacts into `dir`, or prints the
    /// report when there is no directory.
    pub fn emit(&self, dir: Option<&Path>, timestamp: bool) -> Result<()> {
        let body = self.render(timestamp);
        match dir {
            None => {
                use std::io::Write;
                std::io::stdout().write_all(&body)?;
            }
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(format!("{}.json", self.command));
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                for a in &self.artifacts {
                    let path = dir.join(&a.name);
                    std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
                }
            }
        }
        Ok(())
    }
}

/// CSV with a header row; floats in shortest round-trip form.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s.into_bytes()
}
