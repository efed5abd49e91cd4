//! JSON-lines reports: one header, check and data records, one summary.
//!
//! Everything except the summary's `wall_time_s` is a function of the input,
//! the seed and the tolerances, so two runs produce identical lines up to that
//! field.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::tolerance;

/// Named tolerances, overridable with `--tolerance name=value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(BTreeMap::from([
            ("accretivity", tolerance::ACCRETIVITY),
            ("agmon_chain", tolerance::AGMON_CHAIN),
            ("agmon_form", tolerance::AGMON_FORM),
            ("agmon_pointwise", tolerance::AGMON_POINTWISE),
            ("contraction", tolerance::CONTRACTION),
            ("domination", tolerance::DOMINATION),
            ("eigen_residual", tolerance::EIGEN_RESIDUAL),
            ("green", tolerance::GREEN),
            ("ground", tolerance::GROUND_STATE),
            ("intrinsic", tolerance::INTRINSIC),
            ("kato", tolerance::KATO),
            ("mass", tolerance::MASS),
            ("positivity", tolerance::POSITIVITY),
            ("potential_floor", tolerance::ACCRETIVE_FLOOR),
            ("resolvent_residual", tolerance::RESOLVENT_RESIDUAL),
            ("unitarity", tolerance::UNITARITY),
        ]))
    }
}

impl Tolerances {
    /// Applies `name=value` overrides; unknown names are rejected.
    pub fn with_overrides(overrides: &[String]) -> Result<Self> {
        let mut tol = Self::default();
        for item in overrides {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::parse("--tolerance", format!("expected name=value, got '{item}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse("--tolerance", format!("'{value}' is not a number")))?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::parse("--tolerance", format!("{name} must be finite and nonnegative")));
            }
            let slot = tol
                .0
                .get_mut(name.trim())
                .ok_or_else(|| Error::parse("--tolerance", format!("unknown tolerance '{name}'")))?;
            *slot = value;
        }
        Ok(tol)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }
}

/// Direction of a check: the value must stay below or above `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub record: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl CheckRecord {
    fn new(name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
        };
        Self {
            record: "check",
            suite: None,
            instance: None,
            name: name.into(),
            value,
            relation,
            tolerance,
            pass,
            detail: None,
        }
    }

    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtMost, tolerance)
    }

    /// Passes when `value ≥ floor`.
    pub fn at_least(name: impl Into<String>, value: f64, floor: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, floor)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        let mut rec = Self::new(name, f64::NAN, Relation::AtMost, 0.0);
        rec.pass = false;
        rec.detail = Some(json!({ "error": err.to_string() }));
        rec
    }

    pub fn detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn in_suite(mut self, suite: &'static str, instance: usize) -> Self {
        self.suite = Some(suite);
        self.instance = Some(instance);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    lines: Vec<String>,
    checks: usize,
    failed: usize,
}

impl Report {
    pub fn new(command: &str, input_hash: &str, seed: u64, tolerances: &Tolerances) -> Self {
        let mut report = Self {
            lines: Vec::new(),
            checks: 0,
            failed: 0,
        };
        report.push(&json!({
            "record": "header",
            "tool": "hermgraph",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "input_sha256": input_hash,
            "seed": seed,
            "tolerances": tolerances,
        }));
        report
    }

    fn push(&mut self, value: &impl Serialize) {
        self.lines.push(serde_json::to_string(value).expect("report records serialize"));
    }

    pub fn check(&mut self, rec: CheckRecord) {
        self.checks += 1;
        if !rec.pass {
            self.failed += 1;
        }
        self.push(&rec);
    }

    pub fn data(&mut self, name: &str, value: impl Serialize) {
        self.push(&json!({ "record": "data", "name": name, "value": value }));
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    /// Appends the summary and returns the whole report.
    pub fn finish(mut self, wall_time_s: f64) -> String {
        let summary = json!({
            "record": "summary",
            "pass": self.failed == 0,
            "checks": self.checks,
            "failed": self.failed,
            "wall_time_s": wall_time_s,
        });
        self.push(&summary);
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}
