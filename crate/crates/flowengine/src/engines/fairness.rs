//! Fairness interventions for the three mitigation slots: a rebalancing
//! resampler (preprocess), a covariance-penalty fit (inprocess), and a
//! group-residual adjustment (postprocess).

use crate::contract::envelope::StageEnvelope;
use crate::contract::output::{EngineOutput, EnginePayload};
use crate::data::{ColumnKind, Dataset};
use crate::artifact::{Formula, ModelArtifact, ModelKind, INTERCEPT};
use crate::engines::train::{build_design, predict};
use crate::error::{FlowError, Result};
use crate::rng::SplitMix64;
use std::collections::BTreeMap;

fn binary_protected_col<'d>(
    data: &'d Dataset,
    env: &StageEnvelope<'_>,
    name: &str,
) -> Result<&'d [f64]> {
    let col = data
        .column(name)
        .ok_or_else(|| FlowError::Dataset(format!("group column {name:?} not present")))?;
    if col.kind() != ColumnKind::Binary {
        return Err(FlowError::Dataset(format!("group column {name:?} is not binary")));
    }
    if !env.vars.protected_vars_binary.iter().any(|c| c == name) {
        return Err(FlowError::Dataset(format!(
            "group column {name:?} is not a declared protected binary column"
        )));
    }
    Ok(col.values())
}

/// Rebalance the training split so (group, target) cell counts match the
/// product of the marginals, by stratified resampling with replacement
/// inside each cell. Output size equals the input size; marginal
/// proportions are preserved within one count each.
pub fn run_preprocess_fairness_resample(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let group_name = env
        .param_str("group_col")
        .ok_or_else(|| FlowError::Params("group_col parameter resolved empty".into()))?;
    let train = env.train_data;
    let group = binary_protected_col(train, env, group_name)?;
    let target = train.col(&env.vars.target_var)?;
    if target.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(FlowError::Dataset(format!(
            "resampling needs a binary target; {:?} has other values",
            env.vars.target_var
        )));
    }

    let n = train.n_rows();
    let mut cells: [Vec<u32>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for r in 0..n {
        let idx = (group[r] as usize) * 2 + (target[r] as usize);
        cells[idx].push(r as u32);
    }
    if let Some(empty) = cells.iter().position(Vec::is_empty) {
        return Err(FlowError::Dataset(format!(
            "cannot rebalance: empty stratum (group={}, target={})",
            empty / 2,
            empty % 2
        )));
    }

    // Target cell counts: controlled rounding of the independence table
    // with both margins preserved exactly.
    let n_g1 = cells[2].len() + cells[3].len();
    let n_y1 = cells[1].len() + cells[3].len();
    let quota_11 = (n_g1 as f64) * (n_y1 as f64) / (n as f64);
    let lower = (n_g1 + n_y1).saturating_sub(n);
    let upper = n_g1.min(n_y1);
    let t_11 = (quota_11.round() as usize).clamp(lower, upper);
    let t_10 = n_g1 - t_11;
    let t_01 = n_y1 - t_11;
    let t_00 = n - t_11 - t_10 - t_01;
    let targets = [t_00, t_01, t_10, t_11];

    let mut rng = SplitMix64::new(env.seed);
    let mut rows = Vec::with_capacity(n);
    for (cell, &count) in cells.iter().zip(&targets) {
        for _ in 0..count {
            rows.push(cell[rng.next_below(cell.len() as u64) as usize]);
        }
    }
    let resampled = train.select_rows(&rows)?;
    Ok(EngineOutput::new(EnginePayload::Preprocess { train: resampled }))
}

/// Penalized least squares: minimize ||y - Xb||^2 / n + lambda * cov(Xb, g)^2
/// by gradient descent with backtracking line search, where g is the
/// centered group indicator. At lambda = 0 this reproduces the plain OLS
/// coefficients. Predictors are standardized internally by default
/// (`norm_data`, default true); raw-scale credit data is too ill-conditioned
/// for plain gradient descent otherwise.
pub fn run_inprocess_fairness_penalty(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    const MAX_STEPS: usize = 50_000;
    const GRAD_TOL: f64 = 1e-8;

    let lambda = env
        .param_f64("lambda")
        .ok_or_else(|| FlowError::Params("lambda parameter resolved empty".into()))?;
    if lambda < 0.0 {
        return Err(FlowError::Params(format!("lambda must be non-negative, got {lambda}")));
    }
    let group_name = env
        .param_str("group_col")
        .ok_or_else(|| FlowError::Params("group_col parameter resolved empty".into()))?;
    let terms = env
        .param_names("terms")
        .filter(|t| !t.is_empty())
        .ok_or_else(|| FlowError::Params("terms parameter resolved empty".into()))?;
    let norm_data = env.param_bool("norm_data").unwrap_or(true);

    let group = binary_protected_col(env.train_data, env, group_name)?.to_vec();
    let target = &env.vars.target_var;
    let design = build_design(env.train_data, target, &terms, norm_data)?;
    let n = design.y.len();
    let nf = n as f64;
    let g_mean = group.iter().sum::<f64>() / nf;
    let g_centered: Vec<f64> = group.iter().map(|v| v - g_mean).collect();

    let p = design.x.cols();
    let xt_g: Vec<f64> = design.x.tr_mul_vec(&g_centered);

    let objective_grad = |beta: &[f64]| -> (f64, Vec<f64>, f64) {
        let fitted = design.x.mul_vec(beta);
        let resid: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let rss: f64 = resid.iter().map(|r| r * r).sum();
        let cov = fitted.iter().zip(&g_centered).map(|(f, g)| f * g).sum::<f64>() / nf;
        let value = rss / nf + lambda * cov * cov;
        let xt_resid = design.x.tr_mul_vec(&resid);
        let grad: Vec<f64> = (0..p)
            .map(|c| -2.0 * xt_resid[c] / nf + 2.0 * lambda * cov * xt_g[c] / nf)
            .collect();
        (value, grad, cov)
    };

    let mut beta = vec![0.0; p];
    let (mut value, mut grad, mut cov) = objective_grad(&beta);
    let mut step = 1.0;
    let mut converged = false;
    let mut steps_used = 0;
    for s in 1..=MAX_STEPS {
        steps_used = s;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < GRAD_TOL {
            converged = true;
            steps_used = s - 1;
            break;
        }
        // Backtracking line search (Armijo), warm-started from the last
        // accepted step.
        step *= 2.0;
        loop {
            let candidate: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - step * g).collect();
            let (c_value, c_grad, c_cov) = objective_grad(&candidate);
            if c_value <= value - 0.5 * step * grad_norm * grad_norm {
                beta = candidate;
                value = c_value;
                grad = c_grad;
                cov = c_cov;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                return Err(FlowError::Dataset(format!(
                    "penalty fit stalled: line search failed at gradient norm {grad_norm:.3e}"
                )));
            }
        }
    }
    if !converged {
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm >= GRAD_TOL {
            return Err(FlowError::Dataset(format!(
                "penalty fit did not converge within {MAX_STEPS} steps; final gradient norm {grad_norm:.3e}"
            )));
        }
    }

    let diagnostics = BTreeMap::from([
        ("n_train".to_string(), nf),
        ("steps".to_string(), steps_used as f64),
        ("lambda".to_string(), lambda),
        ("cov_train".to_string(), cov),
        ("objective".to_string(), value),
    ]);
    let mut coefficients = BTreeMap::new();
    coefficients.insert(INTERCEPT.to_string(), beta[0]);
    for (term, b) in design.terms.iter().zip(&beta[1..]) {
        coefficients.insert(term.clone(), *b);
    }
    let mut fit_diagnostics = diagnostics;
    for name in &design.dropped {
        fit_diagnostics.insert(format!("dropped.{name}"), 1.0);
    }
    let artifact = ModelArtifact {
        model_kind: ModelKind::Penalized,
        coefficients,
        normalization: design.normalization.clone(),
        formula: Formula {
            target: target.to_string(),
            terms: design.terms.clone(),
        },
        fit_diagnostics,
    };
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

/// Resolve the group partition for the residual postprocessor: either a
/// complementary pair [a, b] (groups a=1 vs b=1) or a single binary column
/// [c] (groups c=1 vs c=0).
fn group_membership(env: &StageEnvelope<'_>, cols: &[String]) -> Result<Vec<bool>> {
    match cols {
        [single] => {
            let v = binary_protected_col(env.test_data, env, single)?;
            Ok(v.iter().map(|x| *x == 1.0).collect())
        }
        [a, b] => {
            let va = binary_protected_col(env.test_data, env, a)?;
            let vb = binary_protected_col(env.test_data, env, b)?;
            if va.iter().zip(vb).any(|(x, y)| x + y != 1.0) {
                return Err(FlowError::Dataset(format!(
                    "group columns {a:?} and {b:?} are not complementary on the test split"
                )));
            }
            Ok(va.iter().map(|x| *x == 1.0).collect())
        }
        _ => Err(FlowError::Params(format!(
            "group_cols must name one binary column or one complementary pair, got {cols:?}"
        ))),
    }
}

/// Shift each group's predictions by its mean deviation so group means
/// coincide with the overall mean: adjusted_i = pred_i - m_g(i) + m.
/// Preserves the overall mean and the within-group ordering exactly;
/// applying it twice equals applying it once.
pub fn run_postprocess_fairness_genresidual(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let predictions = env
        .predictions
        .ok_or_else(|| FlowError::Envelope("predictions required".into()))?;
    let cols = env
        .param_names("group_cols")
        .ok_or_else(|| FlowError::Params("group_cols parameter resolved empty".into()))?;
    if cols.is_empty() {
        return Err(FlowError::Params(
            "group_cols resolved empty: no complementary protected pair available".into(),
        ));
    }
    let membership = group_membership(env, &cols)?;

    let n = predictions.len() as f64;
    let overall = predictions.iter().sum::<f64>() / n;
    let (mut sum_in, mut count_in, mut sum_out, mut count_out) = (0.0, 0usize, 0.0, 0usize);
    for (p, is_member) in predictions.iter().zip(&membership) {
        if *is_member {
            sum_in += p;
            count_in += 1;
        } else {
            sum_out += p;
            count_out += 1;
        }
    }
    if count_in == 0 || count_out == 0 {
        return Err(FlowError::Dataset(format!(
            "group defined by {cols:?} has an empty side on this fold"
        )));
    }
    let mean_in = sum_in / count_in as f64;
    let mean_out = sum_out / count_out as f64;
    let adjusted: Vec<f64> = predictions
        .iter()
        .zip(&membership)
        .map(|(p, is_member)| p - if *is_member { mean_in } else { mean_out } + overall)
        .collect();
    let specific = BTreeMap::from([(
        "adjusted".to_string(),
        serde_json::json!(adjusted),
    )]);
    Ok(EngineOutput::with_specific(
        EnginePayload::Postprocess { adjusted },
        specific,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::envelope::{make_envelope, Upstream};
    use crate::control::ParamMap;
    use crate::engines::train::run_train_lm;
    use crate::result::FoldRecord;
    use crate::rng::SplitMix64;
    use crate::roles::VariableRoles;
    use crate::slot::Slot;
    use serde_json::json;

    fn vars_with_group() -> VariableRoles {
        VariableRoles {
            feature_vars: vec!["x".into()],
            protected_vars: vec!["g".into()],
            target_var: "y".into(),
            protected_vars_binary: vec!["g".into(), "h".into()],
        }
    }

    fn fold_with_predictions(preds: Vec<f64>) -> FoldRecord {
        FoldRecord {
            fold_index: 0,
            n_train: 0,
            n_test: preds.len(),
            test_rows: vec![],
            model: None,
            predictions_test: Some(preds),
            predictions_adjusted: None,
            evals: vec![],
        }
    }

    fn cell_dataset(counts: [usize; 4]) -> Dataset {
        // counts indexed by (g, y): [g0y0, g0y1, g1y0, g1y1]
        let mut g = Vec::new();
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (idx, &count) in counts.iter().enumerate() {
            for i in 0..count {
                g.push((idx / 2) as f64);
                y.push((idx % 2) as f64);
                x.push(i as f64);
            }
        }
        Dataset::from_pairs(vec![("x", x), ("g", g), ("y", y), ("h", vec![0.0; counts.iter().sum()])]).unwrap()
    }

    fn cell_counts(ds: &Dataset) -> [usize; 4] {
        let g = ds.col("g").unwrap();
        let y = ds.col("y").unwrap();
        let mut counts = [0usize; 4];
        for r in 0..ds.n_rows() {
            counts[(g[r] as usize) * 2 + (y[r] as usize)] += 1;
        }
        counts
    }

    fn resample(ds: &Dataset, seed: u64) -> Result<Dataset> {
        let vars = vars_with_group();
        let fold = fold_with_predictions(vec![]);
        let params = ParamMap::from([("group_col".to_string(), json!("g"))]);
        let env = make_envelope(
            Slot::Preprocess,
            0,
            ds,
            ds,
            &vars,
            Upstream::Fold(&fold),
            &params,
            seed,
        )
        .unwrap();
        match run_preprocess_fairness_resample(&env)?.payload {
            EnginePayload::Preprocess { train } => Ok(train),
            _ => panic!("expected preprocess payload"),
        }
    }

    #[test]
    fn skewed_cells_rebalanced_to_independence() {
        // cells (g=1,y=1)=40, (1,0)=10, (0,1)=10, (0,0)=40; marginals 50/50
        // each way, so independence means 25 per cell.
        let ds = cell_dataset([40, 10, 10, 40]);
        let out = resample(&ds, 9).unwrap();
        assert_eq!(out.n_rows(), 100);
        assert_eq!(cell_counts(&out), [25, 25, 25, 25]);
        assert_eq!(out.column_names(), ds.column_names());
    }

    #[test]
    fn independent_cells_are_a_fixed_point() {
        let ds = cell_dataset([30, 30, 20, 20]);
        // marginals: g0=60, g1=40, y0=50, y1=50 -> quotas (30, 30, 20, 20).
        let out = resample(&ds, 1).unwrap();
        assert_eq!(cell_counts(&out), [30, 30, 20, 20]);
    }

    #[test]
    fn resample_deterministic_under_seed() {
        let ds = cell_dataset([40, 10, 10, 40]);
        let a = resample(&ds, 5).unwrap();
        let b = resample(&ds, 5).unwrap();
        assert!(a.bits_eq(&b));
    }

    #[test]
    fn empty_stratum_is_error() {
        let ds = cell_dataset([40, 0, 10, 50]);
        let err = resample(&ds, 1).unwrap_err().to_string();
        assert!(err.contains("empty stratum"));
    }

    #[test]
    fn marginals_preserved_within_one_count() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..20 {
            let counts = [
                1 + rng.next_below(40) as usize,
                1 + rng.next_below(40) as usize,
                1 + rng.next_below(40) as usize,
                1 + rng.next_below(40) as usize,
            ];
            let ds = cell_dataset(counts);
            let out = resample(&ds, rng.next_u64()).unwrap();
            let before = cell_counts(&ds);
            let after = cell_counts(&out);
            let g1_before = before[2] + before[3];
            let g1_after = after[2] + after[3];
            let y1_before = before[1] + before[3];
            let y1_after = after[1] + after[3];
            assert!(g1_before.abs_diff(g1_after) <= 1, "{before:?} -> {after:?}");
            assert!(y1_before.abs_diff(y1_after) <= 1, "{before:?} -> {after:?}");
            assert_eq!(ds.n_rows(), out.n_rows());
        }
    }

    fn penalty_fixture(n: usize, seed: u64) -> (Dataset, VariableRoles) {
        let mut rng = SplitMix64::new(seed);
        let g: Vec<f64> = (0..n).map(|_| f64::from(rng.next_f64() < 0.5)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&g)
            .map(|(x, g)| 1.0 + 0.8 * x + 0.6 * g + rng.normal(0.0, 0.3))
            .collect();
        let ds = Dataset::from_pairs(vec![("x", x), ("g", g), ("y", y), ("h", vec![0.0; n])]).unwrap();
        (ds, vars_with_group())
    }

    fn fit_penalty(ds: &Dataset, vars: &VariableRoles, lambda: f64) -> (ModelArtifact, Vec<f64>) {
        let fold = fold_with_predictions(vec![]);
        let params = ParamMap::from([
            ("lambda".to_string(), json!(lambda)),
            ("group_col".to_string(), json!("g")),
            ("terms".to_string(), json!(["x", "g"])),
            ("norm_data".to_string(), json!(false)),
        ]);
        let env = make_envelope(
            Slot::Inprocess,
            0,
            ds,
            ds,
            vars,
            Upstream::Fold(&fold),
            &params,
            3,
        )
        .unwrap();
        match run_inprocess_fairness_penalty(&env).unwrap().payload {
            EnginePayload::Model {
                artifact,
                predictions_train,
                ..
            } => (artifact, predictions_train.unwrap()),
            _ => panic!("expected model payload"),
        }
    }

    #[test]
    fn lambda_zero_reproduces_ols() {
        let (ds, vars) = penalty_fixture(80, 7);
        let (artifact, _) = fit_penalty(&ds, &vars, 0.0);

        let fold = fold_with_predictions(vec![]);
        let params = ParamMap::from([
            ("terms".to_string(), json!(["x", "g"])),
            ("norm_data".to_string(), json!(false)),
        ]);
        let env = make_envelope(Slot::Train, 0, &ds, &ds, &vars, Upstream::Fold(&fold), &params, 3)
            .unwrap();
        let ols = match run_train_lm(&env).unwrap().payload {
            EnginePayload::Model { artifact, .. } => artifact,
            _ => panic!("expected model"),
        };
        for (key, value) in &ols.coefficients {
            assert!(
                (artifact.coefficients[key] - value).abs() < 1e-6,
                "{key}: {} vs {}",
                artifact.coefficients[key],
                value
            );
        }
    }

    #[test]
    fn huge_lambda_kills_group_covariance() {
        let (ds, vars) = penalty_fixture(80, 11);
        let (_, fitted) = fit_penalty(&ds, &vars, 1e6);
        let g = ds.col("g").unwrap();
        let n = g.len() as f64;
        let g_mean = g.iter().sum::<f64>() / n;
        let f_mean = fitted.iter().sum::<f64>() / n;
        let cov = fitted
            .iter()
            .zip(g)
            .map(|(f, g)| (f - f_mean) * (g - g_mean))
            .sum::<f64>()
            / n;
        assert!(cov.abs() < 1e-4, "cov {cov}");
    }

    #[test]
    fn penalized_objective_dominates_ols_point() {
        let (ds, vars) = penalty_fixture(60, 13);
        let lambda = 1.0;
        let (pen_artifact, pen_fitted) = fit_penalty(&ds, &vars, lambda);

        let fold = fold_with_predictions(vec![]);
        let params = ParamMap::from([
            ("terms".to_string(), json!(["x", "g"])),
            ("norm_data".to_string(), json!(false)),
        ]);
        let env = make_envelope(Slot::Train, 0, &ds, &ds, &vars, Upstream::Fold(&fold), &params, 3)
            .unwrap();
        let (ols_artifact, ols_fitted) = match run_train_lm(&env).unwrap().payload {
            EnginePayload::Model {
                artifact,
                predictions_train,
                ..
            } => (artifact, predictions_train.unwrap()),
            _ => panic!("expected model"),
        };
        let objective = |fitted: &[f64]| {
            let y = ds.col("y").unwrap();
            let g = ds.col("g").unwrap();
            let n = y.len() as f64;
            let rss: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b).powi(2)).sum();
            let g_mean = g.iter().sum::<f64>() / n;
            let cov = fitted
                .iter()
                .zip(g)
                .map(|(f, gv)| f * (gv - g_mean))
                .sum::<f64>()
                / n;
            rss / n + lambda * cov * cov
        };
        assert!(objective(&pen_fitted) <= objective(&ols_fitted) + 1e-9);
        let _ = (pen_artifact, ols_artifact);
    }

    #[test]
    fn covariance_monotone_in_lambda() {
        let (ds, vars) = penalty_fixture(60, 17);
        let g = ds.col("g").unwrap().to_vec();
        let n = g.len() as f64;
        let g_mean = g.iter().sum::<f64>() / n;
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let (_, fitted) = fit_penalty(&ds, &vars, lambda);
            let f_mean = fitted.iter().sum::<f64>() / n;
            let cov = fitted
                .iter()
                .zip(&g)
                .map(|(f, gv)| (f - f_mean) * (gv - g_mean))
                .sum::<f64>()
                .abs()
                / n;
            assert!(cov <= last + 1e-8, "cov rose at lambda {lambda}: {cov} > {last}");
            last = cov;
        }
    }

    #[test]
    fn negative_lambda_rejected() {
        let (ds, vars) = penalty_fixture(40, 19);
        let fold = fold_with_predictions(vec![]);
        let params = ParamMap::from([
            ("lambda".to_string(), json!(-1.0)),
            ("group_col".to_string(), json!("g")),
            ("terms".to_string(), json!(["x", "g"])),
        ]);
        let env = make_envelope(
            Slot::Inprocess,
            0,
            &ds,
            &ds,
            &vars,
            Upstream::Fold(&fold),
            &params,
            3,
        )
        .unwrap();
        assert!(run_inprocess_fairness_penalty(&env).is_err());
    }

    fn genresidual(ds: &Dataset, preds: Vec<f64>, cols: &[&str]) -> Result<Vec<f64>> {
        let vars = vars_with_group();
        let fold = fold_with_predictions(preds);
        let params = ParamMap::from([("group_cols".to_string(), json!(cols))]);
        let env = make_envelope(
            Slot::Postprocess,
            0,
            ds,
            ds,
            &vars,
            Upstream::Fold(&fold),
            &params,
            3,
        )
        .unwrap();
        match run_postprocess_fairness_genresidual(&env)?.payload {
            EnginePayload::Postprocess { adjusted } => Ok(adjusted),
            _ => panic!("expected postprocess payload"),
        }
    }

    #[test]
    fn equal_sized_groups_meet_at_grand_mean() {
        // group means 0.7 and 0.3 with equal sizes -> both adjusted to 0.5.
        let ds = Dataset::from_pairs(vec![
            ("x", vec![0.0; 4]),
            ("g", vec![1.0, 1.0, 0.0, 0.0]),
            ("y", vec![0.0; 4]),
            ("h", vec![0.0; 4]),
        ])
        .unwrap();
        let adjusted = genresidual(&ds, vec![0.6, 0.8, 0.2, 0.4], &["g"]).unwrap();
        let mean_in = (adjusted[0] + adjusted[1]) / 2.0;
        let mean_out = (adjusted[2] + adjusted[3]) / 2.0;
        assert!((mean_in - 0.5).abs() < 1e-12);
        assert!((mean_out - 0.5).abs() < 1e-12);
        // within-group ordering preserved
        assert!(adjusted[1] > adjusted[0]);
        assert!(adjusted[3] > adjusted[2]);
    }

    #[test]
    fn constant_predictions_unchanged() {
        let ds = Dataset::from_pairs(vec![
            ("x", vec![0.0; 4]),
            ("g", vec![1.0, 1.0, 0.0, 0.0]),
            ("y", vec![0.0; 4]),
            ("h", vec![0.0; 4]),
        ])
        .unwrap();
        let adjusted = genresidual(&ds, vec![0.4; 4], &["g"]).unwrap();
        assert_eq!(adjusted, vec![0.4; 4]);
    }

    #[test]
    fn single_group_is_identity() {
        let ds = Dataset::from_pairs(vec![
            ("x", vec![0.0; 3]),
            ("g", vec![1.0, 1.0, 1.0]),
            ("y", vec![0.0; 3]),
            ("h", vec![0.0; 3]),
        ])
        .unwrap();
        let err = genresidual(&ds, vec![0.1, 0.2, 0.3], &["g"]).unwrap_err();
        assert!(err.to_string().contains("empty side"));
    }

    #[test]
    fn adjustment_is_idempotent_and_mean_preserving() {
        let mut rng = SplitMix64::new(23);
        let n = 101;
        let g: Vec<f64> = (0..n).map(|_| f64::from(rng.next_f64() < 0.4)).collect();
        let preds: Vec<f64> = (0..n)
            .map(|i| rng.normal(0.0, 1.0) + 0.5 * g[i])
            .collect();
        let ds = Dataset::from_pairs(vec![
            ("x", vec![0.0; n]),
            ("g", g),
            ("y", vec![0.0; n]),
            ("h", vec![0.0; n]),
        ])
        .unwrap();
        let once = genresidual(&ds, preds.clone(), &["g"]).unwrap();
        let twice = genresidual(&ds, once.clone(), &["g"]).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
        let before: f64 = preds.iter().sum::<f64>() / n as f64;
        let after: f64 = once.iter().sum::<f64>() / n as f64;
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn complementary_pair_accepted_single_noncomplementary_pair_rejected() {
        let ds = Dataset::from_pairs(vec![
            ("x", vec![0.0; 4]),
            ("g", vec![1.0, 0.0, 1.0, 0.0]),
            ("h", vec![1.0, 1.0, 0.0, 0.0]),
            ("y", vec![0.0; 4]),
        ])
        .unwrap();
        // (g, h) is not complementary
        let err = genresidual(&ds, vec![0.1, 0.2, 0.3, 0.4], &["g", "h"]).unwrap_err();
        assert!(err.to_string().contains("not complementary"));
    }
}
