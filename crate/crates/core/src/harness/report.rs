//! The `report.json` record.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::certificates::{Certificate, DominationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every check passed.
    Pass,
    /// The run completed but at least one check failed.
    Fail,
    /// The run aborted.
    Error,
}

/// One pass/fail comparison `value` against `limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            limit,
            detail: format!("{value:e} <= {limit:e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            value,
            limit,
            detail: format!("{value:e} >= {limit:e}"),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: passed as u8 as f64,
            limit: 1.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub label: String,
    pub certificate: Certificate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domination: Option<DominationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub verdict: Verdict,
    /// The configuration with every default filled in.
    pub config: ScenarioConfig,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub certificates: Vec<CertificateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RunError>,
}

impl Report {
    pub fn new(config: &ScenarioConfig) -> Self {
        Self {
            scenario: config.scenario.name().to_string(),
            verdict: Verdict::Pass,
            config: config.clone(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            certificates: Vec::new(),
            error: None,
        }
    }

    /// Records a metric; non-finite values are dropped so that every
    /// number in the report stays finite.
    pub fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), value);
        }
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Sets the verdict from the checks unless the run already errored.
    pub fn finalize(&mut self) {
        if self.verdict != Verdict::Error {
            self.verdict = if self.checks.iter().all(|c| c.passed) {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
        }
        for c in &mut self.checks {
            if !c.value.is_finite() {
                c.value = if c.value > 0.0 { f64::MAX } else { -f64::MAX };
            }
            if !c.limit.is_finite() {
                c.limit = if c.limit > 0.0 { f64::MAX } else { -f64::MAX };
            }
        }
        for rec in &mut self.certificates {
            for m in &mut rec.certificate.margins {
                if !m.value.is_finite() {
                    m.value = if m.value > 0.0 { f64::MAX } else { -f64::MAX };
                }
            }
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::Error::Io(e.to_string()))
    }

    pub fn fail_with(&mut self, err: &crate::Error) {
        let (step, t) = match err {
            crate::Error::NonFinite { step, t, .. } => (Some(*step), Some(*t)),
            _ => (None, None),
        };
        self.verdict = Verdict::Error;
        self.error = Some(RunError {
            message: err.to_string(),
            step,
            t,
        });
    }
}
