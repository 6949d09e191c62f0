pub mod branch;
pub mod estimate;
pub mod shoot;
pub mod spectrum;
pub mod verify;

use serde_json::json;

use crate::config::Common;
use crate::report::{Check, Report};

/// Subcommand lines run by `all`, sharing the common flags.
pub fn all_argv(c: &Common) -> Vec<Vec<String>> {
    let common = c.to_args();
    let level = c.level.unwrap_or(4);
    let with = |name: &str, extra: &[String]| {
        let mut a = vec!["lamsurf".to_string(), name.to_string()];
        a.extend(extra.iter().cloned());
        a
    };
    let fixed = |lambda: f64, level: usize| {
        let mut a = vec![format!("--lambda={lambda}"), format!("--level={level}"), format!("--seed={}", c.seed)];
        if c.no_timestamp {
            a.push("--no-timestamp".into());
        }
        if c.dump_fields {
            a.push("--dump-fields".into());
        }
        a
    };
    let mut curve = fixed(-1.5, level);
    curve.extend(["--symmetry=2".into(), "--sweep=0.5,5,96".into()]);
    let mut torus = fixed(0.0, level);
    torus.push("--mode=torus-like".into());
    let mut branch = fixed(0.0, level.min(3));
    branch.extend(["--step=0.1".into(), "--amplitudes=0.05".into()]);
    vec![
        with("verify", &common),
        with("spectrum", &common),
        with("shoot-curve", &curve),
        with("shoot-revolution", &torus),
        with("continue", &branch),
        with("estimate", &common),
    ]
}

/// Summary report over the sub-reports of `all`.
pub fn summarize(c: &Common, reports: &[Report]) -> Report {
    let mut summary = Report::new("all");
    summary.param("lambda", c.lambda);
    summary.param("shape", c.shape.to_string());
    summary.param("level", c.level.unwrap_or(4));
    summary.param("seed", c.seed);
    let mut entries = Vec::new();
    for r in reports {
        let failures = r.failures();
        let mut check = Check::flag(r.command.clone(), failures == 0);
        if failures > 0 {
            let names: Vec<&str> =
                r.checks.iter().filter(|k| k.status == crate::report::Status::Fail).map(|k| k.name.as_str()).collect();
            check = check.detail(names.join(", "));
        }
        summary.push(check);
        entries.push(json!({
            "command": r.command,
            "file": format!("{}.json", r.command),
            "mesh_hash": r.mesh_hash,
            "passed": r.passed(),
            "checks": r.checks.len(),
            "failures": failures,
        }));
    }
    summary.results = json!({ "reports": entries });
    summary
}
