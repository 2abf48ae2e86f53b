//! Per-slot output schemas and their enforcement.

use crate::artifact::ModelArtifact;
use crate::contract::envelope::StageEnvelope;
use crate::data::Dataset;
use crate::engines::split::SplitPlan;
use crate::error::Violation;
use crate::report::ReportElement;
use crate::result::EvaluationRecord;
use crate::slot::Slot;
use serde_json::Value;
use std::collections::BTreeMap;

/// What an engine may return, one variant per slot family.
#[derive(Debug, Clone)]
pub enum EnginePayload {
    Split(SplitPlan),
    Preprocess {
        train: Dataset,
    },
    /// Train and inprocess engines share this shape.
    Model {
        artifact: ModelArtifact,
        predictions_test: Vec<f64>,
        predictions_train: Option<Vec<f64>>,
    },
    Postprocess {
        adjusted: Vec<f64>,
    },
    Eval(EvaluationRecord),
    Report {
        elements: Vec<ReportElement>,
        document: String,
    },
}

impl EnginePayload {
    /// Object form of the payload, used for the specific-output sub-map
    /// check and for reduced payload extraction.
    pub fn to_value(&self) -> Value {
        match self {
            EnginePayload::Split(plan) => serde_json::json!({ "plan": plan }),
            EnginePayload::Preprocess { train } => serde_json::json!({ "train": train }),
            EnginePayload::Model {
                artifact,
                predictions_test,
                predictions_train,
            } => {
                let mut obj = serde_json::json!({
                    "artifact": artifact,
                    "predictions_test": predictions_test,
                });
                if let Some(train) = predictions_train {
                    obj.as_object_mut()
                        .unwrap()
                        .insert("predictions_train".into(), serde_json::json!(train));
                }
                obj
            }
            EnginePayload::Postprocess { adjusted } => serde_json::json!({ "adjusted": adjusted }),
            EnginePayload::Eval(record) => serde_json::to_value(record).expect("record serializes"),
            EnginePayload::Report { elements, document } => serde_json::json!({
                "elements": elements,
                "document": document,
            }),
        }
    }
}

/// Payload plus the engine's optional reduced output, which must be a
/// sub-map of the full payload.
#[derive(Debug, Clone)]
pub struct EngineOutput {
    pub payload: EnginePayload,
    pub specific_output: Option<BTreeMap<String, Value>>,
}

impl EngineOutput {
    pub fn new(payload: EnginePayload) -> Self {
        Self {
            payload,
            specific_output: None,
        }
    }

    pub fn with_specific(payload: EnginePayload, specific: BTreeMap<String, Value>) -> Self {
        Self {
            payload,
            specific_output: Some(specific),
        }
    }
}

/// `sub` is contained in `full`: objects recurse key-wise, leaves must be
/// equal.
pub fn is_submap(sub: &Value, full: &Value) -> bool {
    match (sub, full) {
        (Value::Object(s), Value::Object(f)) => s
            .iter()
            .all(|(k, v)| f.get(k).map(|fv| is_submap(v, fv)).unwrap_or(false)),
        (a, b) => a == b,
    }
}

/// Enforce the per-slot output schema. Returns every violation found.
pub fn validate_engine_output(
    stage: Slot,
    output: &EngineOutput,
    env: &StageEnvelope<'_>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let subject = stage.name();
    match (stage, &output.payload) {
        (Slot::Split, EnginePayload::Split(plan)) => {
            // The split envelope carries the base dataset as train_data.
            out.extend(plan.violations(env.train_data.n_rows()));
        }
        (Slot::Preprocess, EnginePayload::Preprocess { train }) => {
            let expected: Vec<&str> = env.train_data.column_names();
            let got: Vec<&str> = train.column_names();
            if expected != got {
                out.push(Violation::new(
                    subject,
                    format!("preprocess changed the column set: {got:?} vs {expected:?}"),
                ));
            }
            if train.n_rows() == 0 {
                out.push(Violation::new(subject, "preprocess returned an empty dataset"));
            }
        }
        (Slot::Train | Slot::Inprocess, EnginePayload::Model { artifact, predictions_test, predictions_train }) => {
            if let Err(e) = artifact.validate() {
                out.push(Violation::new(subject, e.to_string()));
            }
            if predictions_test.len() != env.test_data.n_rows() {
                out.push(Violation::new(
                    subject,
                    format!(
                        "test predictions length {} does not match test rows {}",
                        predictions_test.len(),
                        env.test_data.n_rows()
                    ),
                ));
            }
            if predictions_test.iter().any(|p| !p.is_finite()) {
                out.push(Violation::new(subject, "non-finite test prediction"));
            }
            if let Some(train) = predictions_train {
                if train.len() != env.train_data.n_rows() {
                    out.push(Violation::new(
                        subject,
                        format!(
                            "train predictions length {} does not match train rows {}",
                            train.len(),
                            env.train_data.n_rows()
                        ),
                    ));
                }
            }
        }
        (Slot::Postprocess, EnginePayload::Postprocess { adjusted }) => {
            if adjusted.len() != env.test_data.n_rows() {
                out.push(Violation::new(
                    subject,
                    format!(
                        "adjusted vector length {} does not match test rows {}",
                        adjusted.len(),
                        env.test_data.n_rows()
                    ),
                ));
            }
            if adjusted.iter().any(|p| !p.is_finite()) {
                out.push(Violation::new(subject, "non-finite adjusted prediction"));
            }
        }
        (Slot::Eval, EnginePayload::Eval(record)) => {
            if !record.overall.is_finite() {
                out.push(Violation::new(subject, "overall metric value is not finite"));
            }
            for (group, value) in &record.by_group {
                if !env.vars.protected_vars_binary.contains(group) {
                    out.push(Violation::new(
                        subject,
                        format!("by_group key {group:?} is not a protected binary column"),
                    ));
                }
                if !value.is_finite() {
                    out.push(Violation::new(
                        subject,
                        format!("by_group value for {group:?} is not finite"),
                    ));
                }
            }
        }
        (Slot::Report, EnginePayload::Report { elements, document }) => {
            if elements.is_empty() && document.is_empty() {
                out.push(Violation::new(subject, "report engine produced nothing"));
            }
            for e in elements {
                if !e.is_well_formed() {
                    out.push(Violation::new(
                        subject,
                        format!("malformed report element {:?}", e.title()),
                    ));
                }
            }
        }
        (stage, payload) => {
            out.push(Violation::new(
                subject,
                format!(
                    "engine returned a {} payload for the {stage} slot",
                    payload_name(payload)
                ),
            ));
        }
    }
    if let Some(specific) = &output.specific_output {
        let full = output.payload.to_value();
        let specific_value = Value::Object(specific.clone().into_iter().collect());
        if !is_submap(&specific_value, &full) {
            out.push(Violation::new(
                subject,
                "specific_output is not a sub-map of the full payload",
            ));
        }
    }
    out
}

fn payload_name(p: &EnginePayload) -> &'static str {
    match p {
        EnginePayload::Split(_) => "split",
        EnginePayload::Preprocess { .. } => "preprocess",
        EnginePayload::Model { .. } => "model",
        EnginePayload::Postprocess { .. } => "postprocess",
        EnginePayload::Eval(_) => "eval",
        EnginePayload::Report { .. } => "report",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::envelope::{make_envelope, Upstream};
    use crate::control::ParamMap;
    use crate::result::FoldRecord;
    use crate::roles::VariableRoles;

    fn fixture() -> (Dataset, VariableRoles, FoldRecord) {
        let ds = Dataset::from_pairs(vec![
            ("x", vec![1.0, 2.0, 3.0, 4.0]),
            ("g", vec![0.0, 1.0, 0.0, 1.0]),
            ("y", vec![1.0, 0.0, 1.0, 0.0]),
        ])
        .unwrap();
        let vars = VariableRoles {
            feature_vars: vec!["x".into()],
            protected_vars: vec![],
            target_var: "y".into(),
            protected_vars_binary: vec!["g".into()],
        };
        let fold = FoldRecord {
            fold_index: 0,
            n_train: 2,
            n_test: 2,
            test_rows: vec![2, 3],
            model: None,
            predictions_test: Some(vec![0.5, 0.5]),
            predictions_adjusted: None,
            evals: vec![],
        };
        (ds, vars, fold)
    }

    #[test]
    fn postprocess_wrong_length_flagged() {
        let (ds, vars, fold) = fixture();
        let train = ds.select_rows(&[0, 1]).unwrap();
        let test = ds.select_rows(&[2, 3]).unwrap();
        let params = ParamMap::new();
        let env = make_envelope(
            Slot::Postprocess,
            0,
            &train,
            &test,
            &vars,
            Upstream::Fold(&fold),
            &params,
            1,
        )
        .unwrap();
        let output = EngineOutput::new(EnginePayload::Postprocess {
            adjusted: vec![0.1, 0.2, 0.3],
        });
        let violations = validate_engine_output(Slot::Postprocess, &output, &env);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("length 3"));
    }

    #[test]
    fn eval_non_finite_overall_flagged() {
        let (ds, vars, fold) = fixture();
        let train = ds.select_rows(&[0, 1]).unwrap();
        let test = ds.select_rows(&[2, 3]).unwrap();
        let params = ParamMap::new();
        let env = make_envelope(
            Slot::Eval,
            0,
            &train,
            &test,
            &vars,
            Upstream::Fold(&fold),
            &params,
            1,
        )
        .unwrap();
        let output = EngineOutput::new(EnginePayload::Eval(EvaluationRecord {
            metric: "eval_x".into(),
            overall: f64::NAN,
            by_group: BTreeMap::from([("not_protected".to_string(), 0.1)]),
            params_used: BTreeMap::new(),
        }));
        let violations = validate_engine_output(Slot::Eval, &output, &env);
        assert_eq!(violations.len(), 2);
    }

    #[test]
    fn wrong_payload_for_slot_flagged() {
        let (ds, vars, fold) = fixture();
        let train = ds.select_rows(&[0, 1]).unwrap();
        let test = ds.select_rows(&[2, 3]).unwrap();
        let params = ParamMap::new();
        let env = make_envelope(
            Slot::Eval,
            0,
            &train,
            &test,
            &vars,
            Upstream::Fold(&fold),
            &params,
            1,
        )
        .unwrap();
        let output = EngineOutput::new(EnginePayload::Postprocess { adjusted: vec![0.0, 0.0] });
        let violations = validate_engine_output(Slot::Eval, &output, &env);
        assert!(violations[0].message.contains("postprocess payload"));
    }

    #[test]
    fn specific_output_must_be_submap() {
        let (ds, vars, fold) = fixture();
        let train = ds.select_rows(&[0, 1]).unwrap();
        let test = ds.select_rows(&[2, 3]).unwrap();
        let params = ParamMap::new();
        let env = make_envelope(
            Slot::Eval,
            0,
            &train,
            &test,
            &vars,
            Upstream::Fold(&fold),
            &params,
            1,
        )
        .unwrap();
        let record = EvaluationRecord {
            metric: "eval_x".into(),
            overall: 0.5,
            by_group: BTreeMap::new(),
            params_used: BTreeMap::new(),
        };
        let good = EngineOutput::with_specific(
            EnginePayload::Eval(record.clone()),
            BTreeMap::from([("overall".to_string(), serde_json::json!(0.5))]),
        );
        assert!(validate_engine_output(Slot::Eval, &good, &env).is_empty());
        let bad = EngineOutput::with_specific(
            EnginePayload::Eval(record),
            BTreeMap::from([("overall".to_string(), serde_json::json!(0.9))]),
        );
        assert_eq!(validate_engine_output(Slot::Eval, &bad, &env).len(), 1);
    }

    #[test]
    fn submap_relation() {
        let full = serde_json::json!({"a": {"b": 1, "c": 2}, "d": [1, 2]});
        assert!(is_submap(&serde_json::json!({"a": {"b": 1}}), &full));
        assert!(is_submap(&serde_json::json!({"d": [1, 2]}), &full));
        assert!(!is_submap(&serde_json::json!({"a": {"b": 2}}), &full));
        assert!(!is_submap(&serde_json::json!({"e": 1}), &full));
        assert!(!is_submap(&serde_json::json!({"d": [1]}), &full));
    }
}
