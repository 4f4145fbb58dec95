//! Structured pass/fail reports shared by the check suites and the CLI.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Serialize)]
pub struct CheckItem {
    pub id: String,
    pub status: Status,
    pub residual: f64,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub witness: Value,
}

/// A named suite's outcome over one subject groupoid.
#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub subject: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub items: Vec<CheckItem>,
    pub status: Status,
}

impl CheckReport {
    pub fn new(suite: impl Into<String>, subject: impl Into<String>, seed: Option<u64>) -> Self {
        CheckReport {
            suite: suite.into(),
            subject: subject.into(),
            seed,
            items: Vec::new(),
            status: Status::Pass,
        }
    }

    pub fn push(&mut self, id: impl Into<String>, status: Status, residual: f64, witness: Value) {
        if status == Status::Fail {
            self.status = Status::Fail;
        } else if status == Status::Warn && self.status == Status::Pass {
            self.status = Status::Warn;
        }
        self.items.push(CheckItem { id: id.into(), status, residual, witness });
    }

    /// Pass/fail against a tolerance, with the residual as evidence.
    pub fn check(&mut self, id: impl Into<String>, residual: f64, tol: f64) {
        let status = if residual <= tol { Status::Pass } else { Status::Fail };
        self.push(id, status, residual, Value::Null);
    }

    /// Boolean check with an attached witness payload.
    pub fn require(&mut self, id: impl Into<String>, ok: bool, residual: f64, witness: Value) {
        self.push(id, if ok { Status::Pass } else { Status::Fail }, residual, witness);
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    /// 0 on pass/warn, 1 on failure.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.seed {
            Some(seed) => {
                out.push_str(&format!("suite {} on {} (seed {})\n", self.suite, self.subject, seed))
            }
            None => out.push_str(&format!("suite {} on {}\n", self.suite, self.subject)),
        }
        for item in &self.items {
            let tag = match item.status {
                Status::Pass => "pass",
                Status::Warn => "warn",
                Status::Fail => "FAIL",
            };
            out.push_str(&format!("  {tag}  {:<44} residual {:9.3e}\n", item.id, item.residual));
            if item.status != Status::Pass && !item.witness.is_null() {
                out.push_str(&format!("        witness: {}\n", item.witness));
            }
        }
        let failed = self.items.iter().filter(|i| i.status == Status::Fail).count();
        let warned = self.items.iter().filter(|i| i.status == Status::Warn).count();
        let verdict = if failed == 0 { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "result: {verdict} ({} checks, {failed} failed, {warned} warnings)\n",
            self.items.len()
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_aggregation() {
        let mut r = CheckReport::new("demo", "r2", Some(0));
        r.check("a", 1e-12, 1e-10);
        assert!(r.passed());
        r.push("b", Status::Warn, 0.5, Value::Null);
        assert_eq!(r.status, Status::Warn);
        r.check("c", 1.0, 1e-10);
        assert!(!r.passed());
        assert_eq!(r.exit_code(), 1);
        let text = r.to_text();
        assert!(text.contains("FAIL  c"));
        assert!(text.contains("3 checks, 1 failed, 1 warnings"));
    }

    #[test]
    fn json_shape_is_stable() {
        let mut r = CheckReport::new("demo", "r2", Some(0));
        r.require("x", true, 0.0, serde_json::json!({"unit": "a", "min_eig": 0.25}));
        let j1 = r.to_json();
        let j2 = r.to_json();
        assert_eq!(j1, j2);
        assert!(j1.contains("\"status\": \"pass\""));
    }
}
