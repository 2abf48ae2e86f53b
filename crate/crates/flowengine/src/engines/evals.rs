//! Evaluation engines: mean squared error, statistical parity difference,
//! the median demo engine, and cross-fold aggregation.

use crate::contract::envelope::StageEnvelope;
use crate::contract::output::{EngineOutput, EnginePayload};
use crate::data::ColumnKind;
use crate::error::{FlowError, Result};
use crate::result::EvaluationRecord;
use std::collections::BTreeMap;

fn predictions<'a>(env: &'a StageEnvelope<'_>) -> Result<&'a [f64]> {
    let preds = env
        .predictions
        .ok_or_else(|| FlowError::Envelope("predictions required".into()))?;
    if preds.is_empty() {
        return Err(FlowError::Envelope("predictions are empty".into()));
    }
    Ok(preds)
}

/// Binary protected columns actually present (and binary) on the test split.
fn protected_groups<'a>(env: &'a StageEnvelope<'_>) -> Vec<(&'a str, &'a [f64])> {
    env.vars
        .protected_vars_binary
        .iter()
        .filter_map(|name| {
            env.test_data
                .column(name)
                .filter(|c| c.kind() == ColumnKind::Binary)
                .map(|c| (name.as_str(), c.values()))
        })
        .collect()
}

fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / pred.len() as f64
}

/// Mean squared error overall and per protected group (rows where the
/// group column is 1).
pub fn run_eval_mse(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let preds = predictions(env)?;
    let truth = env.test_data.col(&env.vars.target_var)?;
    if preds.len() != truth.len() {
        return Err(FlowError::Dataset(format!(
            "predictions length {} does not match targets {}",
            preds.len(),
            truth.len()
        )));
    }
    let mut by_group = BTreeMap::new();
    for (name, group) in protected_groups(env) {
        let (mut sum, mut count) = (0.0, 0usize);
        for ((p, y), g) in preds.iter().zip(truth).zip(group) {
            if *g == 1.0 {
                sum += (p - y).powi(2);
                count += 1;
            }
        }
        if count > 0 {
            by_group.insert(name.to_string(), sum / count as f64);
        }
    }
    let record = EvaluationRecord {
        metric: "eval_mse".into(),
        overall: mse(preds, truth),
        by_group,
        params_used: env.resolved_params.clone(),
    };
    let specific = BTreeMap::from([
        ("metric".to_string(), serde_json::json!("eval_mse")),
        ("overall".to_string(), serde_json::json!(record.overall)),
    ]);
    Ok(EngineOutput::with_specific(EnginePayload::Eval(record), specific))
}

/// Statistical parity difference per protected binary column: the absolute
/// gap in positive-decision rates between the column's members and
/// non-members, decisions taken at `threshold`. `overall` is the worst
/// (largest) gap across columns. Columns with an empty side are skipped
/// with a note in `params_used`; all columns skipped is an error.
pub fn run_eval_statisticalparity(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let preds = predictions(env)?;
    let threshold = env
        .param_f64("threshold")
        .ok_or_else(|| FlowError::Params("threshold parameter resolved empty".into()))?;
    let decisions: Vec<bool> = preds.iter().map(|p| *p >= threshold).collect();

    let mut by_group = BTreeMap::new();
    let mut skipped = Vec::new();
    for (name, group) in protected_groups(env) {
        let (mut pos_in, mut n_in, mut pos_out, mut n_out) = (0usize, 0usize, 0usize, 0usize);
        for (d, g) in decisions.iter().zip(group) {
            if *g == 1.0 {
                n_in += 1;
                pos_in += usize::from(*d);
            } else {
                n_out += 1;
                pos_out += usize::from(*d);
            }
        }
        if n_in == 0 || n_out == 0 {
            skipped.push(name.to_string());
            continue;
        }
        let spd = (pos_in as f64 / n_in as f64 - pos_out as f64 / n_out as f64).abs();
        by_group.insert(name.to_string(), spd);
    }
    if by_group.is_empty() {
        return Err(FlowError::Dataset(
            "statistical parity undefined: every protected column has an empty side".into(),
        ));
    }
    let overall = by_group.values().copied().fold(0.0f64, f64::max);
    let mut params_used = env.resolved_params.clone();
    if !skipped.is_empty() {
        params_used.insert("skipped_columns".to_string(), serde_json::json!(skipped));
    }
    let record = EvaluationRecord {
        metric: "eval_statisticalparity".into(),
        overall,
        by_group,
        params_used,
    };
    let specific = BTreeMap::from([
        ("metric".to_string(), serde_json::json!("eval_statisticalparity")),
        ("overall".to_string(), serde_json::json!(record.overall)),
    ]);
    Ok(EngineOutput::with_specific(EnginePayload::Eval(record), specific))
}

/// Median of a sample: even lengths average the two central order
/// statistics.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(FlowError::Dataset("median of empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Median of the predictions, overall and per protected group. The
/// extensibility demo engine.
pub fn run_eval_median(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let preds = predictions(env)?;
    let mut by_group = BTreeMap::new();
    for (name, group) in protected_groups(env) {
        let members: Vec<f64> = preds
            .iter()
            .zip(group)
            .filter(|(_, g)| **g == 1.0)
            .map(|(p, _)| *p)
            .collect();
        if !members.is_empty() {
            by_group.insert(name.to_string(), median(&members)?);
        }
    }
    let record = EvaluationRecord {
        metric: "eval_median".into(),
        overall: median(preds)?,
        by_group,
        params_used: env.resolved_params.clone(),
    };
    Ok(EngineOutput::new(EnginePayload::Eval(record)))
}

/// Unweighted means across folds, metric by metric. Groups absent from some
/// fold are omitted from the aggregate; the omissions are reported back so
/// the caller can log them. Inconsistent metric sets are an error.
pub fn aggregate_evals(
    per_fold: &[Vec<EvaluationRecord>],
) -> Result<(Vec<EvaluationRecord>, Vec<String>)> {
    let first = per_fold
        .first()
        .ok_or_else(|| FlowError::Dataset("no folds to aggregate".into()))?;
    let metrics: Vec<&str> = first.iter().map(|r| r.metric.as_str()).collect();
    for (i, fold) in per_fold.iter().enumerate() {
        let fold_metrics: Vec<&str> = fold.iter().map(|r| r.metric.as_str()).collect();
        if fold_metrics != metrics {
            return Err(FlowError::Dataset(format!(
                "fold {i} produced metrics {fold_metrics:?}, expected {metrics:?}"
            )));
        }
    }
    let n = per_fold.len() as f64;
    let mut warnings = Vec::new();
    let mut aggregate = Vec::new();
    for (m_idx, metric) in metrics.iter().enumerate() {
        let records: Vec<&EvaluationRecord> = per_fold.iter().map(|fold| &fold[m_idx]).collect();
        let overall = records.iter().map(|r| r.overall).sum::<f64>() / n;
        // Groups present in every fold survive; the rest are dropped.
        let mut by_group = BTreeMap::new();
        for group in records[0].by_group.keys() {
            if records.iter().all(|r| r.by_group.contains_key(group)) {
                let mean =
                    records.iter().map(|r| r.by_group[group]).sum::<f64>() / n;
                by_group.insert(group.clone(), mean);
            }
        }
        for record in &records {
            for group in record.by_group.keys() {
                if !by_group.contains_key(group)
                    && !warnings.iter().any(|w: &String| w.contains(group.as_str()))
                {
                    warnings.push(format!(
                        "group {group:?} missing from some folds; omitted from the {metric} aggregate"
                    ));
                }
            }
        }
        aggregate.push(EvaluationRecord {
            metric: metric.to_string(),
            overall,
            by_group,
            params_used: records[0].params_used.clone(),
        });
    }
    Ok((aggregate, warnings))
}
