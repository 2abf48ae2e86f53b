//! Training engines: ordinary least squares and IRLS logistic regression,
//! with optional predictor standardization, plus prediction from artifacts.

use crate::artifact::{Formula, ModelArtifact, ModelKind, Normalization, INTERCEPT};
use crate::contract::envelope::StageEnvelope;
use crate::contract::output::{EngineOutput, EnginePayload};
use crate::data::{ColumnKind, Dataset};
use crate::error::{FlowError, Result};
use crate::linalg::{solve_least_squares, LinalgError, Mat};
use std::collections::BTreeMap;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Prepared design: fitted terms after dummy-drop, the standardization in
/// effect, and the materialized matrix with an intercept column first.
pub(crate) struct Design {
    pub terms: Vec<String>,
    pub dropped: Vec<String>,
    pub normalization: Option<BTreeMap<String, Normalization>>,
    pub x: Mat,
    pub y: Vec<f64>,
}

/// Build the design matrix on the train split. Complementary binary dummy
/// pairs (a + b = 1 on every row) are singular next to an intercept, so the
/// later member of each pair is dropped; the drop is recorded in the
/// artifact diagnostics. With `norm_data`, non-binary predictors are
/// standardized with train-split statistics only.
pub(crate) fn build_design(
    train: &Dataset,
    target: &str,
    terms: &[String],
    norm_data: bool,
) -> Result<Design> {
    let y = train.col(target)?.to_vec();
    for term in terms {
        if !train.has_column(term) {
            return Err(FlowError::Dataset(format!(
                "formula term {term:?} not present in training data"
            )));
        }
    }

    // Detect complementary dummy pairs among the terms.
    let mut dropped: Vec<String> = Vec::new();
    for i in 0..terms.len() {
        for j in (i + 1)..terms.len() {
            if dropped.contains(&terms[j]) || dropped.contains(&terms[i]) {
                continue;
            }
            let (a, b) = (train.column(&terms[i]), train.column(&terms[j]));
            let (Some(a), Some(b)) = (a, b) else { continue };
            if a.kind() == ColumnKind::Binary
                && b.kind() == ColumnKind::Binary
                && a.values()
                    .iter()
                    .zip(b.values())
                    .all(|(x, y)| x + y == 1.0)
            {
                dropped.push(terms[j].clone());
            }
        }
    }
    let kept: Vec<String> = terms.iter().filter(|t| !dropped.contains(t)).cloned().collect();

    let n = train.n_rows();
    if n <= kept.len() + 1 {
        return Err(FlowError::Dataset(format!(
            "{n} training rows cannot identify {} coefficients",
            kept.len() + 1
        )));
    }

    let mut normalization: Option<BTreeMap<String, Normalization>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(kept.len() + 1);
    columns.push(vec![1.0; n]);
    for term in &kept {
        let col = train.column(term).expect("term presence checked above");
        let values = col.values();
        if norm_data && col.kind() == ColumnKind::Numeric {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(FlowError::Dataset(format!(
                    "cannot standardize constant column {term:?}"
                )));
            }
            columns.push(values.iter().map(|v| (v - mean) / sd).collect());
            normalization
                .get_or_insert_with(BTreeMap::new)
                .insert(term.clone(), Normalization { mean, sd });
        } else {
            columns.push(values.to_vec());
        }
    }
    let x = Mat::from_columns(columns).map_err(|e| FlowError::Dataset(e.to_string()))?;
    Ok(Design {
        terms: kept,
        dropped,
        normalization,
        x,
        y,
    })
}

fn rank_error(design: &Design, e: LinalgError) -> FlowError {
    match e {
        LinalgError::RankDeficient { column } => {
            let name = if column == 0 {
                INTERCEPT.to_string()
            } else {
                design.terms[column - 1].clone()
            };
            FlowError::Dataset(format!(
                "design matrix is rank deficient at column {name:?} (collinear with preceding columns)"
            ))
        }
        other => FlowError::Dataset(other.to_string()),
    }
}

fn assemble_artifact(
    kind: ModelKind,
    target: &str,
    design: &Design,
    beta: &[f64],
    mut diagnostics: BTreeMap<String, f64>,
) -> ModelArtifact {
    let mut coefficients = BTreeMap::new();
    coefficients.insert(INTERCEPT.to_string(), beta[0]);
    for (term, b) in design.terms.iter().zip(&beta[1..]) {
        coefficients.insert(term.clone(), *b);
    }
    for name in &design.dropped {
        diagnostics.insert(format!("dropped.{name}"), 1.0);
    }
    ModelArtifact {
        model_kind: kind,
        coefficients,
        normalization: design.normalization.clone(),
        formula: Formula {
            target: target.to_string(),
            terms: design.terms.clone(),
        },
        fit_diagnostics: diagnostics,
    }
}

/// Linear predictor of an artifact on a dataset: stored normalization
/// applied first, then coefficients. No link function.
fn linear_predictor(artifact: &ModelArtifact, data: &Dataset) -> Result<Vec<f64>> {
    let n = data.n_rows();
    let mut eta = vec![artifact.coefficients[INTERCEPT]; n];
    for term in &artifact.formula.terms {
        let values = data.col(term).map_err(|_| {
            FlowError::Dataset(format!("prediction data is missing column {term:?}"))
        })?;
        let beta = artifact.coefficients[term];
        match artifact.normalization.as_ref().and_then(|m| m.get(term)) {
            Some(norm) => {
                for (e, v) in eta.iter_mut().zip(values) {
                    *e += beta * (v - norm.mean) / norm.sd;
                }
            }
            None => {
                for (e, v) in eta.iter_mut().zip(values) {
                    *e += beta * v;
                }
            }
        }
    }
    Ok(eta)
}

/// Predictions from a fitted artifact: linear for lm/penalized artifacts,
/// probabilities for logistic ones.
pub fn predict(artifact: &ModelArtifact, data: &Dataset) -> Result<Vec<f64>> {
    let eta = linear_predictor(artifact, data)?;
    Ok(match artifact.model_kind {
        ModelKind::Lm | ModelKind::Penalized => eta,
        ModelKind::Logistic => eta.into_iter().map(sigmoid).collect(),
    })
}

fn model_output(artifact: ModelArtifact, env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let predictions_train = predict(&artifact, env.train_data)?;
    let predictions_test = predict(&artifact, env.test_data)?;
    let specific = BTreeMap::from([(
        "artifact".to_string(),
        serde_json::json!({ "coefficients": artifact.coefficients }),
    )]);
    Ok(EngineOutput::with_specific(
        EnginePayload::Model {
            artifact,
            predictions_test,
            predictions_train: Some(predictions_train),
        },
        specific,
    ))
}

fn envelope_terms(env: &StageEnvelope<'_>) -> Result<Vec<String>> {
    env.param_names("terms")
        .filter(|t| !t.is_empty())
        .ok_or_else(|| FlowError::Params("terms parameter resolved empty".into()))
}

/// Ordinary least squares on the fold's train split.
pub fn run_train_lm(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let terms = envelope_terms(env)?;
    let norm_data = env.param_bool("norm_data").unwrap_or(false);
    let target = &env.vars.target_var;
    let design = build_design(env.train_data, target, &terms, norm_data)?;
    let beta = solve_least_squares(&design.x, &design.y).map_err(|e| rank_error(&design, e))?;
    let fitted = design.x.mul_vec(&beta);
    let rss: f64 = design
        .y
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    let diagnostics = BTreeMap::from([
        ("n_train".to_string(), design.y.len() as f64),
        ("rss".to_string(), rss),
    ]);
    let artifact = assemble_artifact(ModelKind::Lm, target, &design, &beta, diagnostics);
    model_output(artifact, env)
}

pub(crate) struct IrlsFit {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub deviance_trace: Vec<f64>,
}

fn deviance(x: &Mat, y: &[f64], beta: &[f64]) -> f64 {
    let eta = x.mul_vec(beta);
    -2.0 * y
        .iter()
        .zip(&eta)
        .map(|(&yi, &e)| {
            let p = sigmoid(e).clamp(1e-12, 1.0 - 1e-12);
            yi * p.ln() + (1.0 - yi) * (1.0 - p).ln()
        })
        .sum::<f64>()
}

/// Iteratively reweighted least squares with step-halving, so the deviance
/// never increases. Converges when max |Δβ| < 1e-8, up to 100 iterations.
pub(crate) fn irls(x: &Mat, y: &[f64]) -> Result<IrlsFit> {
    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-8;
    let p = x.cols();
    let n = x.rows();
    let mut beta = vec![0.0; p];
    let mut dev = deviance(x, y, &beta);
    let mut trace = vec![dev];
    for iteration in 1..=MAX_ITER {
        let eta = x.mul_vec(&beta);
        let mut wx_cols: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
        let mut wz = vec![0.0; n];
        for r in 0..n {
            let mu = sigmoid(eta[r]);
            let w = (mu * (1.0 - mu)).max(1e-10);
            let sw = w.sqrt();
            let z = eta[r] + (y[r] - mu) / w;
            wz[r] = sw * z;
            for c in 0..p {
                wx_cols[c][r] = sw * x.get(r, c);
            }
        }
        let wx = Mat::from_columns(wx_cols).map_err(|e| FlowError::Dataset(e.to_string()))?;
        let target = solve_least_squares(&wx, &wz).map_err(|e| match e {
            LinalgError::RankDeficient { column } => FlowError::Dataset(format!(
                "weighted design became rank deficient at column index {column}"
            )),
            other => FlowError::Dataset(other.to_string()),
        })?;

        // Step-halve toward the IRLS target until the deviance does not rise.
        let mut step = 1.0;
        let mut candidate;
        let mut candidate_dev;
        loop {
            candidate = beta
                .iter()
                .zip(&target)
                .map(|(b, t)| b + step * (t - b))
                .collect::<Vec<f64>>();
            candidate_dev = deviance(x, y, &candidate);
            if candidate_dev <= dev + 1e-12 || step < 1e-6 {
                break;
            }
            step *= 0.5;
        }
        let delta = beta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        beta = candidate;
        dev = candidate_dev;
        trace.push(dev);
        if delta < TOL {
            return Ok(IrlsFit {
                beta,
                iterations: iteration,
                deviance_trace: trace,
            });
        }
    }
    Ok(IrlsFit {
        beta,
        iterations: MAX_ITER,
        deviance_trace: trace,
    })
}

/// Logistic regression on the fold's train split; predictions are
/// probabilities.
pub fn run_train_glm(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let terms = envelope_terms(env)?;
    let norm_data = env.param_bool("norm_data").unwrap_or(false);
    let target = &env.vars.target_var;

    let y_raw = env.train_data.col(target)?;
    if y_raw.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(FlowError::Dataset(format!(
            "train_glm needs a binary target; {target:?} has other values"
        )));
    }
    if y_raw.iter().all(|v| *v == y_raw[0]) {
        return Err(FlowError::Dataset(format!(
            "degenerate target: {target:?} is constant on the training split"
        )));
    }

    let design = build_design(env.train_data, target, &terms, norm_data)?;
    let fit = irls(&design.x, &design.y)?;

    // Quasi-separation guard on the standardized scale: |beta| times the
    // design-column spread.
    for (idx, term) in design.terms.iter().enumerate() {
        let col = design.x.col(idx + 1);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let scaled = fit.beta[idx + 1].abs() * if sd > 0.0 { sd } else { 1.0 };
        if scaled > 30.0 {
            return Err(FlowError::Dataset(format!(
                "quasi-separation: coefficient for {term:?} has standardized magnitude {scaled:.1}"
            )));
        }
    }

    let diagnostics = BTreeMap::from([
        ("n_train".to_string(), design.y.len() as f64),
        ("iterations".to_string(), fit.iterations as f64),
        (
            "deviance".to_string(),
            *fit.deviance_trace.last().expect("trace never empty"),
        ),
    ]);
    let artifact = assemble_artifact(ModelKind::Logistic, target, &design, &fit.beta, diagnostics);
    model_output(artifact, env)
}
