//! Report validation against the versioned schemas in `docs/schema`.

use serde_json::Value;

pub const REPORT_V1: &str = include_str!("../docs/schema/report-v1.json");
pub const REPORT_V2: &str = include_str!("../docs/schema/report-v2.json");

/// A violation located by a JSON pointer into the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{at}: {}", self.message)
    }
}

fn violation(pointer: &str, message: impl Into<String>) -> Violation {
    Violation {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

pub fn schema_for(version: u64) -> Option<Value> {
    let text = match version {
        1 => REPORT_V1,
        2 => REPORT_V2,
        _ => return None,
    };
    Some(serde_json::from_str(text).expect("shipped schema is valid JSON"))
}

/// Validates report text, choosing the schema from its `schema_version`.
pub fn validate_report(text: &str) -> Result<u64, Vec<Violation>> {
    let instance: Value = serde_json::from_str(text).map_err(|e| {
        vec![violation("", format!("not valid JSON (line {}, column {}): {e}", e.line(), e.column()))]
    })?;
    let Some(version) = instance.get("schema_version").and_then(Value::as_u64) else {
        return Err(vec![violation("/schema_version", "missing or not a non-negative integer")]);
    };
    let Some(schema) = schema_for(version) else {
        return Err(vec![violation("/schema_version", format!("unsupported version {version}"))]);
    };
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    let errors: Vec<Violation> = validator
        .iter_errors(&instance)
        .map(|e| violation(&e.instance_path().to_string(), e.to_string()))
        .collect();
    if errors.is_empty() {
        Ok(version)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{Check, Report};

    #[test]
    fn fresh_report_is_valid() {
        let mut r = Report::new("verify");
        r.mesh_hash = Some("a".repeat(64));
        r.push(Check::at_most("x", 0.1, 1.0));
        r.push(Check::info("y", None));
        for ts in [false, true] {
            let text = String::from_utf8(r.render(ts)).unwrap();
            assert_eq!(validate_report(&text), Ok(2));
        }
    }

    #[test]
    fn inconsistent_verdict_is_invalid() {
        let mut r = Report::new("verify");
        r.push(Check::at_most("x", 2.0, 1.0));
        let mut v = r.envelope(false);
        v["passed"] = Value::Bool(true);
        let errs = validate_report(&v.to_string()).unwrap_err();
        assert!(!errs.is_empty());
    }

    #[test]
    fn errors_carry_pointers() {
        let r = Report::new("spectrum");
        let mut v = r.envelope(false);
        v["checks"] = serde_json::json!([{ "name": "a", "status": "maybe", "value": null, "tolerance": null, "detail": null }]);
        let errs = validate_report(&v.to_string()).unwrap_err();
        assert!(errs.iter().any(|e| e.pointer == "/checks/0/status"), "{errs:?}");

        let text = String::from_utf8(r.render(false)).unwrap();
        let errs = validate_report(&text[..text.len() / 2]).unwrap_err();
        assert_eq!(errs[0].pointer, "");
        assert!(validate_report(r#"{"schema_version": 9}"#).unwrap_err()[0].pointer == "/schema_version");
    }
}
