use serde::Serialize;

use super::gof::GofResult;
use crate::sampling::Seed;

/// A pass/fail bound on a scalar that is not a p-value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lower,
            upper,
            passed: (lower..=upper).contains(&value),
        }
    }
}

/// Informational quantity; `flagged` marks a value that undermines the run
/// without being a test of the claim itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub flagged: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: serde_json::Value,
    pub seed: Seed,
    pub burn_in: Option<u64>,
    pub horizon: Option<u64>,
    pub tests: Vec<GofResult>,
    pub checks: Vec<Check>,
    pub diagnostics: Vec<Diagnostic>,
    /// Every test and every check passed.
    pub verdict: bool,
}

impl ExperimentReport {
    pub fn new(name: &str, params: serde_json::Value, seed: Seed) -> Self {
        ExperimentReport {
            name: name.to_string(),
            params,
            seed,
            burn_in: None,
            horizon: None,
            tests: Vec::new(),
            checks: Vec::new(),
            diagnostics: Vec::new(),
            verdict: false,
        }
    }

    pub fn test(&mut self, result: GofResult) {
        self.tests.push(result);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn diagnostic(&mut self, name: &str, value: f64, flagged: bool, note: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            name: name.to_string(),
            value,
            flagged,
            note: note.into(),
        });
    }

    pub fn finish(mut self) -> Self {
        self.verdict = self.tests.iter().all(|t| t.passed) && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn find_test(&self, name: &str) -> Option<&GofResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.flagged)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
