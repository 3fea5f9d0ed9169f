//! Named pass/fail results with residual witnesses.

use serde::Serialize;

use crate::expr::RationalExpr;
use crate::tensor::{Chart, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// The first component of a residual that fails to vanish.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub index: Vec<usize>,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes iff every component of `residual` vanishes.
    pub fn vanishing(name: impl Into<String>, residual: &Tensor, chart: &Chart) -> Self {
        let witness = residual.first_nonzero().map(|(index, value)| Witness {
            index: index.iter().map(|i| i + 1).collect(),
            value: chart.display(value),
        });
        let status = if witness.is_none() { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, witness, note: None }
    }

    pub fn scalar(name: impl Into<String>, residual: &RationalExpr, chart: &Chart) -> Self {
        Self::vanishing(name, &Tensor::scalar(residual.clone()), chart)
    }

    pub fn flag(name: impl Into<String>, ok: bool, note: Option<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, witness: None, note }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Skipped, witness: None, note: Some(reason.into()) }
    }

    pub fn failed(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Fail, witness: None, note: Some(reason.into()) }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// An ordered list of checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Suite {
    pub checks: Vec<Check>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Suite) {
        self.checks.extend(other.checks);
    }

    /// No check failed (skipped checks do not count against).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}
