//! Verification reports: how many samples were checked, which ones violated
//! the property, and summary statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the witnessing sample.
    pub sample: usize,
    pub message: String,
    /// Witness data (points, sublattices, measured values).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub witness: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub lemma: String,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Samples whose check could not be certified (e.g. the enumeration
    /// budget ran out); these are neither passes nor violations.
    #[serde(default)]
    pub uncertified: usize,
    pub stats: BTreeMap<String, Value>,
}

/// Per-sample outcome, merged into a [`Report`] in sample order.
#[derive(Clone, Debug)]
pub enum Outcome {
    Pass,
    Skipped,
    Violation(String, Value),
    Uncertified,
}

impl Report {
    pub fn new(lemma: impl Into<String>) -> Self {
        Self {
            lemma: lemma.into(),
            samples: 0,
            violations: Vec::new(),
            uncertified: 0,
            stats: BTreeMap::new(),
        }
    }

    /// Builds a report from per-sample outcomes listed in sample order.
    pub fn from_outcomes(lemma: impl Into<String>, outcomes: Vec<Outcome>) -> Self {
        let mut r = Self::new(lemma);
        r.samples = outcomes.len();
        let mut skipped = 0usize;
        for (i, o) in outcomes.into_iter().enumerate() {
            match o {
                Outcome::Pass => {}
                Outcome::Skipped => skipped += 1,
                Outcome::Uncertified => r.uncertified += 1,
                Outcome::Violation(message, witness) => r.violations.push(Violation {
                    sample: i,
                    message,
                    witness,
                }),
            }
        }
        r.stat("skipped", skipped);
        r
    }

    pub fn stat(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.stats.insert(key.to_owned(), value.into());
        self
    }

    /// Passed: no violations (uncertified samples do not count as passes but
    /// are reported separately).
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}
