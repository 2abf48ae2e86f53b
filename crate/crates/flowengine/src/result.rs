//! Accumulated workflow results: per-fold records, aggregates, provenance.

use crate::artifact::ModelArtifact;
use crate::canonical::{canonical_bytes, digest_hex};
use crate::error::{FlowError, Result, Violation};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

/// One metric: the overall value plus a per-protected-group breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub metric: String,
    pub overall: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub by_group: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params_used: BTreeMap<String, Value>,
}

/// One engine execution: which engine ran, under which seed and parameters,
/// and how long it took. Wall time lives in the timing sidecar, never in the
/// determinism-checked result bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub stage: String,
    pub fold_index: usize,
    pub engine_name: String,
    pub engine_version: String,
    pub seed_used: u64,
    pub param_digest: u64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub wall_time_ns: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

/// Per-fold outcome. `test_rows` are indices into the control's dataset so
/// downstream reporting can align predictions with group membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold_index: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_rows: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions_test: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions_adjusted: Option<Vec<f64>>,
    pub evals: Vec<EvaluationRecord>,
}

impl FoldRecord {
    /// The prediction vector evaluation engines saw: adjusted when a
    /// postprocessor ran, raw otherwise.
    pub fn final_predictions(&self) -> Option<&[f64]> {
        self.predictions_adjusted
            .as_deref()
            .or(self.predictions_test.as_deref())
    }
}

/// Everything a workflow run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowResult {
    pub control_digest: u64,
    pub folds: Vec<FoldRecord>,
    pub aggregate: Vec<EvaluationRecord>,
    pub provenance: Vec<ProvenanceEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub specific_outputs: BTreeMap<String, Value>,
}

impl WorkflowResult {
    /// Run identifier used in output file names: hex of the control digest.
    pub fn run_id(&self) -> String {
        digest_hex(self.control_digest)
    }

    /// Canonical bytes with wall times stripped. Two runs of the same
    /// control produce identical bytes regardless of execution mode.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let mut value = serde_json::to_value(self)
            .map_err(|e| FlowError::Unserializable(format!("workflow result: {e}")))?;
        if let Some(entries) = value.get_mut("provenance").and_then(Value::as_array_mut) {
            for entry in entries {
                if let Some(obj) = entry.as_object_mut() {
                    obj.remove("wall_time_ns");
                }
            }
        }
        canonical_bytes(&value)
    }

    /// Timing sidecar: one row per provenance entry plus the total.
    pub fn timing_sidecar(&self, total_wall_ns: u64) -> Value {
        serde_json::json!({
            "total_wall_ns": total_wall_ns,
            "engine_wall_ns": self
                .provenance
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "stage": p.stage,
                        "fold_index": p.fold_index,
                        "engine_name": p.engine_name,
                        "wall_time_ns": p.wall_time_ns,
                    })
                })
                .collect::<Vec<_>>(),
        })
    }

    /// Sum of engine wall times across all provenance entries.
    pub fn engine_wall_ns(&self) -> u64 {
        self.provenance.iter().map(|p| p.wall_time_ns).sum()
    }

    pub fn aggregate_metric(&self, metric: &str) -> Option<&EvaluationRecord> {
        self.aggregate.iter().find(|r| r.metric == metric)
    }

    /// Structural invariants checkable without the control object:
    /// aggregate metric set equals every fold's metric set.
    pub fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let agg: Vec<&str> = self.aggregate.iter().map(|r| r.metric.as_str()).collect();
        for fold in &self.folds {
            let fold_metrics: Vec<&str> = fold.evals.iter().map(|r| r.metric.as_str()).collect();
            if fold_metrics != agg {
                out.push(Violation::new(
                    format!("fold {}", fold.fold_index),
                    format!("metric set {fold_metrics:?} differs from aggregate {agg:?}"),
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result_with_times(t: u64) -> WorkflowResult {
        WorkflowResult {
            control_digest: 42,
            folds: vec![],
            aggregate: vec![EvaluationRecord {
                metric: "eval_mse".into(),
                overall: 0.5,
                by_group: BTreeMap::new(),
                params_used: BTreeMap::new(),
            }],
            provenance: vec![ProvenanceEntry {
                stage: "train".into(),
                fold_index: 0,
                engine_name: "train_lm".into(),
                engine_version: "0.1.0".into(),
                seed_used: 7,
                param_digest: 9,
                wall_time_ns: t,
            }],
            specific_outputs: BTreeMap::new(),
        }
    }

    #[test]
    fn canonical_bytes_ignore_wall_times() {
        let a = result_with_times(100).canonical_bytes().unwrap();
        let b = result_with_times(999).canonical_bytes().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_round_trip_exact() {
        let bytes = result_with_times(123).canonical_bytes().unwrap();
        let back: WorkflowResult = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back.canonical_bytes().unwrap(), bytes);
        assert_eq!(back.provenance[0].wall_time_ns, 0);
    }
}
