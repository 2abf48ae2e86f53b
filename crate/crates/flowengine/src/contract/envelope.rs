//! The standardized payload handed to every engine.

use crate::artifact::ModelArtifact;
use crate::control::ParamMap;
use crate::data::Dataset;
use crate::error::{FlowError, Result};
use crate::result::{FoldRecord, WorkflowResult};
use crate::roles::VariableRoles;
use crate::slot::Slot;

/// Read-only view of what the workflow has accumulated so far. Stages
/// running inside a fold see that fold's record (results from sibling folds
/// are deliberately invisible so parallel execution cannot diverge from
/// sequential); report engines see the completed result.
#[derive(Debug, Clone, Copy)]
pub enum Upstream<'a> {
    Fold(&'a FoldRecord),
    Result(&'a WorkflowResult),
}

/// Everything an engine may read: the fold's data partitions, variable
/// roles, the model and predictions produced so far, its resolved
/// parameters, and its derived seed. Engines are pure functions of this
/// value.
pub struct StageEnvelope<'a> {
    pub stage: Slot,
    pub fold_index: usize,
    pub train_data: &'a Dataset,
    pub test_data: &'a Dataset,
    pub vars: &'a VariableRoles,
    pub model: Option<&'a ModelArtifact>,
    /// Most recent prediction vector of this fold: the postprocessor's
    /// adjusted vector when one ran, the raw test predictions otherwise.
    pub predictions: Option<&'a [f64]>,
    pub resolved_params: &'a ParamMap,
    pub seed: u64,
    pub upstream: Upstream<'a>,
}

impl<'a> StageEnvelope<'a> {
    pub fn param(&self, key: &str) -> Option<&serde_json::Value> {
        self.resolved_params.get(key)
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.param(key).and_then(|v| v.as_f64())
    }

    pub fn param_bool(&self, key: &str) -> Option<bool> {
        self.param(key).and_then(|v| v.as_bool())
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.param(key).and_then(|v| v.as_str())
    }

    pub fn param_names(&self, key: &str) -> Option<Vec<String>> {
        self.param(key).and_then(|v| {
            v.as_array().map(|a| {
                a.iter()
                    .filter_map(|x| x.as_str().map(str::to_string))
                    .collect()
            })
        })
    }
}

/// Build the envelope for one stage of one fold, copying the model and
/// predictions forward from the most recent producing stage and enforcing
/// stage preconditions (predictions present and of test length where the
/// stage consumes them).
#[allow(clippy::too_many_arguments)]
pub fn make_envelope<'a>(
    stage: Slot,
    fold_index: usize,
    train_data: &'a Dataset,
    test_data: &'a Dataset,
    vars: &'a VariableRoles,
    upstream: Upstream<'a>,
    resolved_params: &'a ParamMap,
    seed: u64,
) -> Result<StageEnvelope<'a>> {
    let (model, predictions) = match upstream {
        Upstream::Fold(fold) => (fold.model.as_ref(), fold.final_predictions()),
        Upstream::Result(_) => (None, None),
    };
    if matches!(stage, Slot::Postprocess | Slot::Eval) {
        let preds = predictions.ok_or_else(|| {
            FlowError::Envelope(format!(
                "predictions required for stage {stage}, fold {fold_index}"
            ))
        })?;
        if preds.len() != test_data.n_rows() {
            return Err(FlowError::Envelope(format!(
                "predictions length {} does not match test rows {} at stage {stage}, fold {fold_index}",
                preds.len(),
                test_data.n_rows()
            )));
        }
    }
    Ok(StageEnvelope {
        stage,
        fold_index,
        train_data,
        test_data,
        vars,
        model,
        predictions,
        resolved_params,
        seed,
        upstream,
    })
}

/// Materialize one fold's train/test partitions from row indices.
/// Index-out-of-range is an error; the partitions are lazy column views, so
/// each column is gathered at most once no matter how many stages read it.
pub fn materialize_partitions(
    base: &Dataset,
    train_idx: &[u32],
    test_idx: &[u32],
) -> Result<(Dataset, Dataset)> {
    Ok((base.select_rows(train_idx)?, base.select_rows(test_idx)?))
}
