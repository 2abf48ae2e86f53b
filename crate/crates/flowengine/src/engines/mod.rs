//! Built-in engines and the registry that ships with them.

pub mod datagen;
pub mod evals;
pub mod fairness;
pub mod report_engine;
pub mod split;
pub mod train;

use crate::contract::output::{EngineOutput, EnginePayload};
use crate::contract::params::{ParamKind, ParamSchema, ParamSpec};
use crate::error::FlowError;
use crate::registry::{EngineSpec, Registry};
use crate::slot::Slot;
use serde_json::json;
use std::sync::Arc;

pub const BUILTIN_VERSION: &str = "0.1.0";

/// A fresh registry holding every built-in engine, unsealed so callers can
/// add their own before sealing.
pub fn builtin_registry() -> Registry {
    let mut reg = Registry::new();
    let mut add = |spec: EngineSpec| {
        reg.register_engine(spec, false)
            .expect("built-in engines register cleanly");
    };

    add(EngineSpec::new(
        "split_holdout",
        Slot::Split,
        BUILTIN_VERSION,
        ParamSchema::new().with(
            "test_fraction",
            ParamSpec::new(ParamKind::Real)
                .default_value(json!(0.2))
                .open_range(Some(0.0), Some(1.0)),
        ),
        "Single seeded holdout split",
        Arc::new(|env| {
            let fraction = env
                .param_f64("test_fraction")
                .ok_or_else(|| FlowError::Params("test_fraction resolved empty".into()))?;
            let plan = split::split_holdout(env.train_data.n_rows(), fraction, env.seed)?;
            Ok(EngineOutput::new(EnginePayload::Split(plan)))
        }),
    ));

    add(EngineSpec::new(
        "split_kfold",
        Slot::Split,
        BUILTIN_VERSION,
        ParamSchema::new().with(
            "k",
            ParamSpec::new(ParamKind::Int)
                .default_value(json!(5))
                .range(Some(2.0), None),
        ),
        "Seeded k-fold cross-validation split",
        Arc::new(|env| {
            let k = env
                .param_f64("k")
                .ok_or_else(|| FlowError::Params("k resolved empty".into()))?
                as usize;
            let plan = split::split_kfold(env.train_data.n_rows(), k, env.seed)?;
            Ok(EngineOutput::new(EnginePayload::Split(plan)))
        }),
    ));

    add(EngineSpec::new(
        "preprocess_fairness_resample",
        Slot::Preprocess,
        BUILTIN_VERSION,
        ParamSchema::new().with("group_col", ParamSpec::new(ParamKind::String).required()),
        "Rebalance (group x target) cells to independence by stratified resampling",
        Arc::new(fairness::run_preprocess_fairness_resample),
    ));

    add(EngineSpec::new(
        "train_lm",
        Slot::Train,
        BUILTIN_VERSION,
        train_schema(),
        "Ordinary least squares",
        Arc::new(train::run_train_lm),
    ));

    add(EngineSpec::new(
        "train_glm",
        Slot::Train,
        BUILTIN_VERSION,
        train_schema(),
        "Logistic regression fit by IRLS",
        Arc::new(train::run_train_glm),
    ));

    add(EngineSpec::new(
        "inprocess_fairness_penalty",
        Slot::Inprocess,
        BUILTIN_VERSION,
        ParamSchema::new()
            .with(
                "lambda",
                ParamSpec::new(ParamKind::Real)
                    .default_value(json!(1.0))
                    .range(Some(0.0), None),
            )
            .with("group_col", ParamSpec::new(ParamKind::String).required())
            .with("terms", ParamSpec::new(ParamKind::NameList).required())
            .with("norm_data", ParamSpec::new(ParamKind::Bool).default_value(json!(true))),
        "Least squares with a squared group-covariance penalty",
        Arc::new(fairness::run_inprocess_fairness_penalty),
    ));

    add(EngineSpec::new(
        "postprocessing_fairness_genresidual",
        Slot::Postprocess,
        BUILTIN_VERSION,
        ParamSchema::new().with("group_cols", ParamSpec::new(ParamKind::NameList).required()),
        "Equalize group prediction means by per-group residual shifts",
        Arc::new(fairness::run_postprocess_fairness_genresidual),
    ));

    add(EngineSpec::new(
        "eval_mse",
        Slot::Eval,
        BUILTIN_VERSION,
        ParamSchema::new(),
        "Mean squared error with per-group breakdown",
        Arc::new(evals::run_eval_mse),
    ));

    add(EngineSpec::new(
        "eval_statisticalparity",
        Slot::Eval,
        BUILTIN_VERSION,
        ParamSchema::new().with(
            "threshold",
            ParamSpec::new(ParamKind::Real)
                .default_value(json!(0.5))
                .range(Some(0.0), Some(1.0)),
        ),
        "Statistical parity difference of thresholded decisions",
        Arc::new(evals::run_eval_statisticalparity),
    ));

    add(EngineSpec::new(
        "eval_median",
        Slot::Eval,
        BUILTIN_VERSION,
        ParamSchema::new(),
        "Median of the predictions",
        Arc::new(evals::run_eval_median),
    ));

    add(EngineSpec::new(
        "report_markdown",
        Slot::Report,
        BUILTIN_VERSION,
        ParamSchema::new().with(
            "box_group_cols",
            ParamSpec::new(ParamKind::NameList).default_value(json!([])),
        ),
        "Markdown report: metrics table plus per-group prediction spreads",
        Arc::new(report_engine::run_report_markdown),
    ));

    reg
}

fn train_schema() -> ParamSchema {
    ParamSchema::new()
        .with("terms", ParamSpec::new(ParamKind::NameList).required())
        .with("norm_data", ParamSpec::new(ParamKind::Bool).default_value(json!(false)))
}
