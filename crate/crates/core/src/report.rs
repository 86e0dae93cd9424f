//! Replayable check reports. Serialized with serde_json, whose object
//! maps are key-sorted, so identical configs produce byte-identical
//! output.

use serde::{Deserialize, Serialize};

/// Result of checking a single property over seeded random trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub property: String,
    pub trials: u64,
    pub max_violation: f64,
    pub seed: u64,
}

impl PropertyCheck {
    pub fn new(property: impl Into<String>, trials: u64, max_violation: f64, seed: u64) -> Self {
        PropertyCheck {
            property: property.into(),
            trials,
            max_violation,
            seed,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// A bundle of property checks sharing a tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: String,
    pub tolerance: f64,
    pub checks: Vec<PropertyCheck>,
}

impl CheckReport {
    pub fn new(suite: impl Into<String>, tolerance: f64) -> Self {
        CheckReport {
            suite: suite.into(),
            tolerance,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: PropertyCheck) {
        self.checks.push(check);
    }

    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.passes(self.tolerance))
    }

    pub fn worst(&self) -> Option<&PropertyCheck> {
        self.checks
            .iter()
            .max_by(|a, b| a.max_violation.total_cmp(&b.max_violation))
    }

    pub fn failures(&self) -> Vec<&PropertyCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passes(self.tolerance))
            .collect()
    }
}
