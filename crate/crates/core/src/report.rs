//! Versioned report documents: named values plus pass/fail checks.
//!
//! Complex numbers are written as `[re, im]` and rationals as `"p/q"`.

use std::fmt::Write as _;

use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::exact;

pub const SCHEMA: &str = "kvw-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Identifies the statement being checked.
    pub anchor: String,
    pub measured: Value,
    pub threshold: String,
    pub verdict: Verdict,
}

impl Check {
    /// Passes when `measured < bound`; NaN fails.
    pub fn below(name: &str, anchor: &str, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            measured: float(measured),
            threshold: format!("< {bound:e}"),
            verdict: if measured < bound { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn holds(name: &str, anchor: &str, ok: bool, measured: Value) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            threshold: "exact".into(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn skipped(name: &str, anchor: &str, reason: &str) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            measured: Value::String(reason.into()),
            threshold: "-".into(),
            verdict: Verdict::Skip,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub values: Vec<Entry>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { schema: SCHEMA, command: command.into(), values: Vec::new(), checks: Vec::new() }
    }

    pub fn value(&mut self, name: &str, value: Value) {
        self.values.push(Entry { name: name.into(), value });
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} ({})", self.command, self.schema);
        for e in &self.values {
            let _ = writeln!(out, "  {}: {}", e.name, render(&e.value));
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: measured {} (threshold {}) [{}]",
                c.verdict.as_str(),
                c.name,
                render(&c.measured),
                c.threshold,
                c.anchor
            );
        }
        let fails = self.checks.iter().filter(|c| c.verdict == Verdict::Fail).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), fails);
        out
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Finite floats as numbers, everything else as a string.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

pub fn complex(z: Complex64) -> Value {
    json!([float(z.re), float(z.im)])
}

pub fn complex_matrix(m: &[Vec<Complex64>]) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().copied().map(complex).collect())).collect())
}

pub fn rational(r: &BigRational) -> Value {
    Value::String(exact::rational_to_string(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(Check::below("a", "x", 1e-13, 1e-12).verdict, Verdict::Pass);
        assert_eq!(Check::below("a", "x", f64::NAN, 1e-12).verdict, Verdict::Fail);
        assert!(Check::skipped("a", "x", "too large").passed());
    }

    #[test]
    fn json_shape() {
        let mut r = Report::new("demo");
        r.value("z", complex(Complex64::new(1.0, -2.0)));
        r.extend([Check::holds("eq", "x", true, json!(5))]);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["values"][0]["value"], json!([1.0, -2.0]));
        assert_eq!(v["checks"][0]["verdict"], "PASS");
    }
}
