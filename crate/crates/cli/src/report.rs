//! Deterministic text and JSON reports.

use std::fmt::Write;

use serde::Serialize;

use fedosov::linalg::Matrix;
use fedosov::tensor::multi_indices;
use fedosov::{Chart, Check, Status, Suite, Tensor};

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub index: Vec<usize>,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Value {
    Flag(bool),
    Count(usize),
    Text(String),
    /// Nonzero components, 1-based indices.
    Tensor(Vec<Component>),
    Matrix(Vec<Vec<String>>),
}

#[derive(Clone, Debug, Serialize)]
pub struct Derived {
    pub name: String,
    pub value: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub subject: String,
    pub derived: Vec<Derived>,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, subject: &str) -> Self {
        Self {
            command: command.into(),
            subject: subject.into(),
            derived: Vec::new(),
            checks: Vec::new(),
            summary: Summary { passed: 0, failed: 0, skipped: 0 },
        }
    }

    pub fn derive(&mut self, name: &str, value: Value) {
        self.derived.push(Derived { name: name.into(), value });
    }

    pub fn tensor(&mut self, name: &str, t: &Tensor, chart: &Chart) {
        self.derive(name, tensor_value(t, chart));
    }

    pub fn matrix(&mut self, name: &str, m: &Matrix, chart: &Chart) {
        let rows = m.iter().map(|r| r.iter().map(|x| chart.display(x)).collect()).collect();
        self.derive(name, Value::Matrix(rows));
    }

    pub fn add_suite(&mut self, suite: Suite) {
        self.checks.extend(suite.checks);
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    /// Keeps checks whose name starts with `prefix`; `false` if none do.
    pub fn retain_checks(&mut self, prefix: &str) -> bool {
        self.checks.retain(|c| c.name.starts_with(prefix));
        !self.checks.is_empty()
    }

    pub fn finish(mut self) -> Self {
        let count = |s: Status| self.checks.iter().filter(|c| c.status == s).count();
        self.summary =
            Summary { passed: count(Status::Pass), failed: count(Status::Fail), skipped: count(Status::Skipped) };
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.command, self.subject);
        if !self.derived.is_empty() {
            out.push_str("\nderived:\n");
        }
        for d in &self.derived {
            match &d.value {
                Value::Flag(b) => writeln!(out, "  {} = {b}", d.name),
                Value::Count(k) => writeln!(out, "  {} = {k}", d.name),
                Value::Text(t) => writeln!(out, "  {} = {t}", d.name),
                Value::Tensor(cs) if cs.is_empty() => writeln!(out, "  {} = 0", d.name),
                Value::Tensor(cs) => {
                    let _ = writeln!(out, "  {}:", d.name);
                    cs.iter().try_for_each(|c| writeln!(out, "    {:?} {}", c.index, c.value))
                }
                Value::Matrix(rows) => {
                    let _ = writeln!(out, "  {}:", d.name);
                    rows.iter().try_for_each(|r| writeln!(out, "    [{}]", r.join(", ")))
                }
            }
            .expect("string write");
        }
        out.push_str("\nchecks:\n");
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let _ = write!(out, "  {tag} {}", c.name);
            if let Some(w) = &c.witness {
                let _ = write!(out, " at {:?}: {}", w.index, w.value);
            }
            if let Some(n) = &c.note {
                let _ = write!(out, " ({n})");
            }
            out.push('\n');
        }
        let s = &self.summary;
        let _ = writeln!(out, "\nsummary: {} passed, {} failed, {} skipped", s.passed, s.failed, s.skipped);
        out
    }
}

pub fn tensor_value(t: &Tensor, chart: &Chart) -> Value {
    let comps = multi_indices(t.dim(), t.rank())
        .zip(t.components())
        .filter(|(_, c)| !c.is_zero())
        .map(|(idx, c)| Component { index: idx.iter().map(|i| i + 1).collect(), value: chart.display(c) })
        .collect();
    Value::Tensor(comps)
}
