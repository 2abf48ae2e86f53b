//! Workflow execution: drives a validated control object through the engine
//! pipeline fold by fold, with derived seeds, per-engine timing, and a
//! bit-deterministic result regardless of execution mode.

mod bench;
mod log;

pub use bench::{
    benchmark_csv, benchmark_markdown, benchmark_workflow, method_label, model_label,
    BenchmarkRow, ExecMode,
};
pub use log::{emit_log, Logger};

use crate::canonical::fnv1a64;
use crate::contract::envelope::{make_envelope, Upstream};
use crate::contract::output::{validate_engine_output, EngineOutput, EnginePayload};
use crate::contract::params::resolve_params;
use crate::contract::validate::{controller_defaults, detect_complementary_pair, validate_control};
use crate::control::{ControlObject, LogLevel};
use crate::data::Dataset;
use crate::engines::evals::aggregate_evals;
use crate::engines::split::{FoldIndices, SplitPlan};
use crate::error::{FlowError, Result};
use crate::registry::Registry;
use crate::report::ReportElement;
use crate::result::{FoldRecord, ProvenanceEntry, WorkflowResult};
use crate::rng::SplitMix64;
use crate::slot::Slot;
use rayon::prelude::*;
use serde_json::Value;
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

/// Deterministic per-engine seed: splitmix64 over the FNV-1a hash of
/// "stage|fold|engine" xor the global seed. A pure function, so execution
/// order cannot influence any engine's randomness.
pub fn derive_seed(global_seed: u64, stage: &str, fold_index: usize, engine_name: &str) -> u64 {
    let key = format!("{stage}|{fold_index}|{engine_name}");
    SplitMix64::new(fnv1a64(key.as_bytes()) ^ global_seed).next_u64()
}

/// A finished run: the deterministic result plus the wall-clock total and
/// any aggregation warnings (side-channel data, never in the result bytes).
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: WorkflowResult,
    pub total_wall_ns: u64,
    pub warnings: Vec<String>,
}

/// Run sequentially. See [`run_parallel`] for the multi-worker variant;
/// both produce byte-identical results.
pub fn run_workflow(control: &ControlObject, registry: &Registry) -> Result<RunOutcome> {
    run_with_workers(control, registry, 1)
}

/// Run with fold-level parallelism across `workers` threads. Seeds are
/// derived, not drawn from shared state, and fold outputs are merged by
/// fold index, so the serialized result is identical to a sequential run.
pub fn run_parallel(
    control: &ControlObject,
    registry: &Registry,
    workers: usize,
) -> Result<RunOutcome> {
    if workers == 0 {
        return Err(FlowError::Params("workers must be at least 1".into()));
    }
    run_with_workers(control, registry, workers)
}

struct EngineCall {
    output: EngineOutput,
    provenance: ProvenanceEntry,
}

/// The per-stage wrapper: resolve params, build the envelope, run the
/// engine, validate its output. Only the engine call itself is timed;
/// everything around it is framework work.
#[allow(clippy::too_many_arguments)]
fn call_engine(
    registry: &Registry,
    control: &ControlObject,
    pair: Option<&(String, String)>,
    logger: &Logger,
    stage: Slot,
    fold_index: usize,
    engine_name: &str,
    train_data: &Dataset,
    test_data: &Dataset,
    upstream: Upstream<'_>,
) -> Result<EngineCall> {
    let spec = registry.get_engine(engine_name)?;
    let defaults = controller_defaults(stage, &control.data.vars, pair);
    let resolved = resolve_params(&spec.param_schema, &defaults, &control.params_for(stage))?;
    let seed = derive_seed(control.settings.global_seed, stage.name(), fold_index, engine_name);
    let env = make_envelope(
        stage,
        fold_index,
        train_data,
        test_data,
        &control.data.vars,
        upstream,
        &resolved,
        seed,
    )?;
    logger.log(LogLevel::Debug, stage.name(), fold_index, engine_name, "start");

    let started = Instant::now();
    let output = (spec.run)(&env).map_err(|e| FlowError::Engine {
        stage: stage.name().to_string(),
        fold: fold_index,
        engine: engine_name.to_string(),
        message: e.to_string(),
    })?;
    let wall_time_ns = started.elapsed().as_nanos() as u64;

    let violations = validate_engine_output(stage, &output, &env);
    if !violations.is_empty() {
        return Err(FlowError::EngineOutput {
            stage: stage.name().to_string(),
            fold: fold_index,
            engine: engine_name.to_string(),
            violations,
        });
    }
    let param_digest = fnv1a64(&crate::canonical::canonicalize(&resolved)?);
    logger.log(LogLevel::Info, stage.name(), fold_index, engine_name, "done");
    Ok(EngineCall {
        output,
        provenance: ProvenanceEntry {
            stage: stage.name().to_string(),
            fold_index,
            engine_name: engine_name.to_string(),
            engine_version: spec.version.clone(),
            seed_used: seed,
            param_digest,
            wall_time_ns,
        },
    })
}

/// Where fold partitions come from: a split plan over one base dataset, or
/// explicit train/test datasets (one fold, splitter bypassed).
enum FoldSource {
    Plan { base: Arc<Dataset>, plan: SplitPlan },
    Explicit { train: Arc<Dataset>, test: Arc<Dataset> },
}

impl FoldSource {
    fn fold_count(&self) -> usize {
        match self {
            FoldSource::Plan { plan, .. } => plan.folds.len(),
            FoldSource::Explicit { .. } => 1,
        }
    }

    fn fold_data(&self, index: usize) -> Result<(Dataset, Dataset, Vec<u32>)> {
        match self {
            FoldSource::Plan { base, plan } => {
                let FoldIndices { train_idx, test_idx } = &plan.folds[index];
                let train = base.select_rows(train_idx)?;
                let test = base.select_rows(test_idx)?;
                Ok((train, test, test_idx.clone()))
            }
            FoldSource::Explicit { train, test } => {
                let test_rows: Vec<u32> = (0..test.n_rows() as u32).collect();
                Ok(((**train).clone(), (**test).clone(), test_rows))
            }
        }
    }
}

struct FoldOutcome {
    record: FoldRecord,
    provenance: Vec<ProvenanceEntry>,
    specifics: Vec<(String, Value)>,
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    control: &ControlObject,
    registry: &Registry,
    pair: Option<&(String, String)>,
    logger: &Logger,
    source: &FoldSource,
    fold_index: usize,
) -> Result<FoldOutcome> {
    let (train, test, test_rows) = source.fold_data(fold_index)?;
    let mut record = FoldRecord {
        fold_index,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        test_rows,
        model: None,
        predictions_test: None,
        predictions_adjusted: None,
        evals: vec![],
    };
    let mut provenance = Vec::new();
    let mut specifics = Vec::new();
    let mut current_train = train;

    let engines = &control.engines;
    if let Some(name) = &engines.preprocess {
        let call = call_engine(
            registry,
            control,
            pair,
            logger,
            Slot::Preprocess,
            fold_index,
            name,
            &current_train,
            &test,
            Upstream::Fold(&record),
        )?;
        provenance.push(call.provenance);
        if let Some(s) = call.output.specific_output {
            specifics.push((name.clone(), Value::Object(s.into_iter().collect())));
        }
        match call.output.payload {
            EnginePayload::Preprocess { train } => current_train = train,
            _ => unreachable!("output validation enforces the payload shape"),
        }
    }

    let (model_stage, model_engine) = match &engines.inprocess {
        Some(name) => (Slot::Inprocess, name.as_str()),
        None => (Slot::Train, engines.train.as_str()),
    };
    let call = call_engine(
        registry,
        control,
        pair,
        logger,
        model_stage,
        fold_index,
        model_engine,
        &current_train,
        &test,
        Upstream::Fold(&record),
    )?;
    provenance.push(call.provenance);
    if let Some(s) = call.output.specific_output {
        specifics.push((model_engine.to_string(), Value::Object(s.into_iter().collect())));
    }
    match call.output.payload {
        EnginePayload::Model {
            artifact,
            predictions_test,
            ..
        } => {
            record.model = Some(artifact);
            record.predictions_test = Some(predictions_test);
        }
        _ => unreachable!("output validation enforces the payload shape"),
    }

    if let Some(name) = &engines.postprocess {
        let call = call_engine(
            registry,
            control,
            pair,
            logger,
            Slot::Postprocess,
            fold_index,
            name,
            &current_train,
            &test,
            Upstream::Fold(&record),
        )?;
        provenance.push(call.provenance);
        if let Some(s) = call.output.specific_output {
            specifics.push((name.clone(), Value::Object(s.into_iter().collect())));
        }
        match call.output.payload {
            EnginePayload::Postprocess { adjusted } => {
                record.predictions_adjusted = Some(adjusted);
            }
            _ => unreachable!("output validation enforces the payload shape"),
        }
    }

    for name in &engines.eval {
        let call = call_engine(
            registry,
            control,
            pair,
            logger,
            Slot::Eval,
            fold_index,
            name,
            &current_train,
            &test,
            Upstream::Fold(&record),
        )?;
        provenance.push(call.provenance);
        if let Some(s) = call.output.specific_output {
            specifics.push((name.clone(), Value::Object(s.into_iter().collect())));
        }
        match call.output.payload {
            EnginePayload::Eval(eval) => record.evals.push(eval),
            _ => unreachable!("output validation enforces the payload shape"),
        }
    }

    Ok(FoldOutcome {
        record,
        provenance,
        specifics,
    })
}

fn run_with_workers(
    control: &ControlObject,
    registry: &Registry,
    workers: usize,
) -> Result<RunOutcome> {
    let started = Instant::now();
    if !registry.is_sealed() {
        return Err(FlowError::Registry(
            "executor requires a sealed registry (call seal() after setup)".into(),
        ));
    }
    let violations = validate_control(control, registry);
    if !violations.is_empty() {
        return Err(FlowError::Validation(violations));
    }
    let control_digest = control.digest()?;
    let logger = Logger::from_settings(&control.settings);
    let mut warnings = Vec::new();

    // Group-pair detection feeds the controller defaults for every stage.
    let pair_base = control
        .data
        .full
        .as_ref()
        .or(control.data.train.as_ref())
        .expect("validation guarantees a dataset");
    let pair = detect_complementary_pair(pair_base, &control.data.vars.protected_vars_binary);

    let mut provenance: Vec<ProvenanceEntry> = Vec::new();
    let mut specific_acc: BTreeMap<String, Vec<Value>> = BTreeMap::new();

    // Split once, before folds.
    let source = if let Some(full) = &control.data.full {
        let name = control
            .engines
            .split
            .as_ref()
            .expect("validation guarantees a split engine on the full-data route");
        let empty_fold = FoldRecord {
            fold_index: 0,
            n_train: full.n_rows(),
            n_test: 0,
            test_rows: vec![],
            model: None,
            predictions_test: None,
            predictions_adjusted: None,
            evals: vec![],
        };
        let call = call_engine(
            registry,
            control,
            pair.as_ref(),
            &logger,
            Slot::Split,
            0,
            name,
            full,
            full,
            Upstream::Fold(&empty_fold),
        )?;
        provenance.push(call.provenance);
        if let Some(s) = call.output.specific_output {
            specific_acc
                .entry(name.clone())
                .or_default()
                .push(Value::Object(s.into_iter().collect()));
        }
        let plan = match call.output.payload {
            EnginePayload::Split(plan) => plan,
            _ => unreachable!("output validation enforces the payload shape"),
        };
        FoldSource::Plan {
            base: Arc::new(full.clone()),
            plan,
        }
    } else {
        FoldSource::Explicit {
            train: Arc::new(control.data.train.clone().expect("validated")),
            test: Arc::new(control.data.test.clone().expect("validated")),
        }
    };

    let fold_count = source.fold_count();
    let fold_outcomes: Vec<FoldOutcome> = if workers == 1 {
        let mut out = Vec::with_capacity(fold_count);
        for i in 0..fold_count {
            out.push(run_fold(control, registry, pair.as_ref(), &logger, &source, i)?);
        }
        out
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| FlowError::Registry(format!("could not build worker pool: {e}")))?;
        pool.install(|| {
            (0..fold_count)
                .into_par_iter()
                .map(|i| run_fold(control, registry, pair.as_ref(), &logger, &source, i))
                .collect::<Result<Vec<_>>>()
        })?
    };

    // Merge in fold order regardless of completion order.
    let mut folds = Vec::with_capacity(fold_count);
    for outcome in fold_outcomes {
        provenance.extend(outcome.provenance);
        for (engine, value) in outcome.specifics {
            specific_acc.entry(engine).or_default().push(value);
        }
        folds.push(outcome.record);
    }

    let per_fold: Vec<Vec<crate::result::EvaluationRecord>> =
        folds.iter().map(|f| f.evals.clone()).collect();
    let (aggregate, agg_warnings) = aggregate_evals(&per_fold)?;
    for w in &agg_warnings {
        logger.log(LogLevel::Warn, "aggregate", 0, "aggregate_evals", w);
    }
    warnings.extend(agg_warnings);

    let mut result = WorkflowResult {
        control_digest,
        folds,
        aggregate,
        provenance,
        specific_outputs: BTreeMap::new(),
    };

    // Report engines run once, on the completed result.
    let report_base: &Dataset = control
        .data
        .full
        .as_ref()
        .or(control.data.test.as_ref())
        .expect("validation guarantees a dataset");
    for name in &control.engines.report {
        let call = call_engine(
            registry,
            control,
            pair.as_ref(),
            &logger,
            Slot::Report,
            0,
            name,
            report_base,
            report_base,
            Upstream::Result(&result),
        )?;
        result.provenance.push(call.provenance);
        if let Some(s) = call.output.specific_output {
            specific_acc
                .entry(name.clone())
                .or_default()
                .push(Value::Object(s.into_iter().collect()));
        }
    }

    let declared: Vec<String> = specific_acc.keys().cloned().collect();
    result.specific_outputs = specific_acc
        .into_iter()
        .map(|(engine, values)| (engine, Value::Array(values)))
        .collect();

    // Selective output: engines that declared a specific_output have their
    // full payloads dropped from the serialized result.
    if control.settings.specific_output_only {
        let model_engine = control
            .engines
            .inprocess
            .clone()
            .unwrap_or_else(|| control.engines.train.clone());
        let strip_model = declared.contains(&model_engine);
        let strip_adjusted = control
            .engines
            .postprocess
            .as_ref()
            .map(|n| declared.contains(n))
            .unwrap_or(false);
        for fold in &mut result.folds {
            if strip_model {
                fold.model = None;
                fold.predictions_test = None;
            }
            if strip_adjusted {
                fold.predictions_adjusted = None;
            }
        }
    }

    Ok(RunOutcome {
        result,
        total_wall_ns: started.elapsed().as_nanos() as u64,
        warnings,
    })
}

/// A mitigated run next to its fairness-stripped baseline, with a
/// side-by-side metric table.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub mitigated: RunOutcome,
    pub baseline: RunOutcome,
    pub table: ReportElement,
}

/// Run the control as configured and once more with every fairness slot
/// (preprocess, inprocess, postprocess) removed, and tabulate both metric
/// sets side by side.
pub fn run_comparison(
    control: &ControlObject,
    registry: &Registry,
    workers: usize,
) -> Result<Comparison> {
    let mitigated = run_with_workers(control, registry, workers)?;
    let mut baseline_control = control.clone();
    baseline_control.engines.preprocess = None;
    baseline_control.engines.inprocess = None;
    baseline_control.engines.postprocess = None;
    baseline_control.params.remove(&Slot::Preprocess);
    baseline_control.params.remove(&Slot::Inprocess);
    baseline_control.params.remove(&Slot::Postprocess);
    let baseline = run_with_workers(&baseline_control, registry, workers)?;

    let mut rows = Vec::new();
    for record in &mitigated.result.aggregate {
        let base = baseline.result.aggregate_metric(&record.metric);
        rows.push(vec![
            record.metric.clone(),
            "(overall)".to_string(),
            base.map(|r| crate::report::sig6(r.overall)).unwrap_or_default(),
            crate::report::sig6(record.overall),
        ]);
        for (group, value) in &record.by_group {
            rows.push(vec![
                record.metric.clone(),
                group.clone(),
                base.and_then(|r| r.by_group.get(group))
                    .map(|v| crate::report::sig6(*v))
                    .unwrap_or_default(),
                crate::report::sig6(*value),
            ]);
        }
    }
    let table = ReportElement::Table {
        title: "Baseline vs fairness-aware".to_string(),
        header: vec![
            "metric".into(),
            "group".into(),
            "baseline".into(),
            "mitigated".into(),
        ],
        rows,
    };
    Ok(Comparison {
        mitigated,
        baseline,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn derived_seeds_stable_and_order_free() {
        let a = derive_seed(1, "train", 0, "train_lm");
        let b = derive_seed(1, "train", 0, "train_lm");
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(2, "train", 0, "train_lm"));
        assert_ne!(a, derive_seed(1, "eval", 0, "train_lm"));
        assert_ne!(a, derive_seed(1, "train", 1, "train_lm"));
    }

    #[test]
    fn derived_seeds_collision_free_across_folds() {
        let mut seen = BTreeSet::new();
        for fold in 0..1000 {
            for stage in ["split", "preprocess", "train", "postprocess", "eval"] {
                assert!(
                    seen.insert(derive_seed(1, stage, fold, "engine_x")),
                    "collision at {stage}/{fold}"
                );
            }
        }
    }
}
