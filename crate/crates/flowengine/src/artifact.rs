//! Fitted-model artifacts: the essential outputs a training engine keeps.

use crate::error::{FlowError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lm,
    Logistic,
    Penalized,
}

/// Per-column standardization statistics recorded at training time and
/// reused verbatim at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub sd: f64,
}

/// Model formula: the target and the predictor terms, in fit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub target: String,
    pub terms: Vec<String>,
}

/// What survives a model fit: coefficients (always including the
/// intercept), optional normalization statistics, the formula, and scalar
/// fit diagnostics. Kept deliberately lean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub model_kind: ModelKind,
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<BTreeMap<String, Normalization>>,
    pub formula: Formula,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fit_diagnostics: BTreeMap<String, f64>,
}

impl ModelArtifact {
    /// Invariant check: coefficients are exactly the formula terms plus the
    /// intercept, and any normalization sd is positive.
    pub fn validate(&self) -> Result<()> {
        if !self.coefficients.contains_key(INTERCEPT) {
            return Err(FlowError::Dataset(format!(
                "model artifact is missing the {INTERCEPT} coefficient"
            )));
        }
        let mut expected: Vec<&str> = self.formula.terms.iter().map(|s| s.as_str()).collect();
        expected.push(INTERCEPT);
        expected.sort_unstable();
        let mut actual: Vec<&str> = self.coefficients.keys().map(|s| s.as_str()).collect();
        actual.sort_unstable();
        if expected != actual {
            return Err(FlowError::Dataset(format!(
                "coefficient names {actual:?} do not match formula terms plus intercept {expected:?}"
            )));
        }
        if let Some(norm) = &self.normalization {
            for (name, n) in norm {
                if !(n.sd > 0.0) {
                    return Err(FlowError::Dataset(format!(
                        "normalization sd for {name:?} must be positive, got {}",
                        n.sd
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn artifact() -> ModelArtifact {
        ModelArtifact {
            model_kind: ModelKind::Lm,
            coefficients: BTreeMap::from([
                (INTERCEPT.to_string(), 1.0),
                ("x".to_string(), 2.0),
            ]),
            normalization: None,
            formula: Formula {
                target: "y".into(),
                terms: vec!["x".into()],
            },
            fit_diagnostics: BTreeMap::new(),
        }
    }

    #[test]
    fn valid_artifact_passes() {
        artifact().validate().unwrap();
    }

    #[test]
    fn missing_term_coefficient_rejected() {
        let mut a = artifact();
        a.coefficients.remove("x");
        assert!(a.validate().is_err());
    }

    #[test]
    fn zero_sd_rejected() {
        let mut a = artifact();
        a.normalization = Some(BTreeMap::from([(
            "x".to_string(),
            Normalization { mean: 0.0, sd: 0.0 },
        )]));
        assert!(a.validate().is_err());
    }
}
