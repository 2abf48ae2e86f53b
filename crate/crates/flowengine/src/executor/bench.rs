//! Runtime benchmark harness: median wall times by dataset size and
//! execution mode, normalized per 1000 rows, with the framework's share of
//! each run broken out.

use super::run_with_workers;
use crate::control::ControlObject;
use crate::engines::datagen::generate_bank_dataset;
use crate::error::{FlowError, Result};
use crate::registry::Registry;
use crate::report::{element_to_markdown, sig6, ReportElement};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    pub fn name(self) -> &'static str {
        match self {
            ExecMode::Sequential => "sequential",
            ExecMode::Parallel => "multicore",
        }
    }

    pub fn parse(s: &str) -> Option<ExecMode> {
        match s {
            "seq" | "sequential" => Some(ExecMode::Sequential),
            "par" | "parallel" | "multicore" => Some(ExecMode::Parallel),
            _ => None,
        }
    }

    fn workers(self) -> usize {
        match self {
            ExecMode::Sequential => 1,
            ExecMode::Parallel => std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(2),
        }
    }
}

/// One measured (size, mode) cell.
#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    pub model: String,
    pub method: String,
    pub mode: String,
    pub size: usize,
    pub repetitions: usize,
    pub median_wall_s: f64,
    pub per_1000_rows_s: f64,
    /// (total - sum of engine time) / total, from the median-time run.
    pub framework_share: f64,
    /// Per-engine share of total wall time, from the median-time run.
    pub engine_share: BTreeMap<String, f64>,
}

/// Fairness-method label derived from the control's slot selections.
pub fn method_label(control: &ControlObject) -> String {
    let mut parts = Vec::new();
    if control.engines.preprocess.is_some() {
        parts.push("pre");
    }
    if control.engines.inprocess.is_some() {
        parts.push("in");
    }
    if control.engines.postprocess.is_some() {
        parts.push("post");
    }
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join("+")
    }
}

/// Model label: the train engine's name without its slot prefix.
pub fn model_label(control: &ControlObject) -> String {
    control
        .engines
        .train
        .strip_prefix("train_")
        .unwrap_or(&control.engines.train)
        .to_string()
}

/// Run the template at every (size, mode) combination, `repetitions` times
/// each, regenerating the synthetic credit dataset at each size with the
/// control's global seed. Returns machine-readable rows plus two table
/// elements: the flat measurement table and the per-1000-rows pivot
/// (rows = model/method/mode, columns = sizes).
pub fn benchmark_workflow(
    control_template: &ControlObject,
    registry: &Registry,
    sizes: &[usize],
    modes: &[ExecMode],
    repetitions: usize,
) -> Result<(Vec<BenchmarkRow>, Vec<ReportElement>)> {
    if repetitions < 3 {
        return Err(FlowError::Params(format!(
            "benchmark needs at least 3 repetitions, got {repetitions}"
        )));
    }
    if sizes.is_empty() || modes.is_empty() {
        return Err(FlowError::Params("benchmark needs at least one size and one mode".into()));
    }
    if sizes.iter().any(|&s| s < 1) {
        return Err(FlowError::Params("benchmark sizes must be at least 1".into()));
    }
    if control_template.data.full.is_none() {
        return Err(FlowError::Params(
            "benchmark needs a control template on the full-data route (data.full)".into(),
        ));
    }

    let model = model_label(control_template);
    let method = method_label(control_template);
    let mut rows = Vec::new();
    for &size in sizes {
        let mut control = control_template.clone();
        control.data.full = Some(generate_bank_dataset(size, control.settings.global_seed)?);
        for &mode in modes {
            let mut runs = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                runs.push(run_with_workers(&control, registry, mode.workers())?);
            }
            runs.sort_by_key(|o| o.total_wall_ns);
            let median_run = &runs[runs.len() / 2];
            let total_s = median_run.total_wall_ns as f64 / 1e9;
            let engine_ns = median_run.result.engine_wall_ns();
            let mut engine_share = BTreeMap::new();
            for entry in &median_run.result.provenance {
                *engine_share.entry(entry.engine_name.clone()).or_insert(0.0) +=
                    entry.wall_time_ns as f64 / median_run.total_wall_ns as f64;
            }
            rows.push(BenchmarkRow {
                model: model.clone(),
                method: method.clone(),
                mode: mode.name().to_string(),
                size,
                repetitions,
                median_wall_s: total_s,
                per_1000_rows_s: total_s / (size as f64 / 1000.0),
                framework_share: (median_run.total_wall_ns.saturating_sub(engine_ns)) as f64
                    / median_run.total_wall_ns as f64,
                engine_share,
            });
        }
    }

    let flat = ReportElement::Table {
        title: "Benchmark measurements".to_string(),
        header: vec![
            "model".into(),
            "method".into(),
            "mode".into(),
            "size".into(),
            "median_s".into(),
            "s_per_1000_rows".into(),
            "framework_share".into(),
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.model.clone(),
                    r.method.clone(),
                    r.mode.clone(),
                    r.size.to_string(),
                    sig6(r.median_wall_s),
                    sig6(r.per_1000_rows_s),
                    sig6(r.framework_share),
                ]
            })
            .collect(),
    };

    // Pivot: per-1000-row medians, one row per (model, method, mode),
    // one column per size.
    let mut header = vec!["model".to_string(), "method".to_string(), "mode".to_string()];
    header.extend(sizes.iter().map(|s| format!("n={s}")));
    let pivot_rows = modes
        .iter()
        .map(|mode| {
            let mut row = vec![model.clone(), method.clone(), mode.name().to_string()];
            for &size in sizes {
                let cell = rows
                    .iter()
                    .find(|r| r.size == size && r.mode == mode.name())
                    .map(|r| sig6(r.per_1000_rows_s))
                    .unwrap_or_default();
                row.push(cell);
            }
            row
        })
        .collect();
    let pivot = ReportElement::Table {
        title: "Runtime per 1000 rows by model and processing method".to_string(),
        header,
        rows: pivot_rows,
    };
    Ok((rows, vec![flat, pivot]))
}

/// Benchmark results rendered as a standalone markdown document.
pub fn benchmark_markdown(elements: &[ReportElement]) -> String {
    let mut out = String::from("# Benchmark\n\n");
    for e in elements {
        out.push_str(&element_to_markdown(e));
    }
    out
}

/// Benchmark rows as CSV for downstream tooling.
pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(
        "model,method,mode,size,repetitions,median_s,s_per_1000_rows,framework_share\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.model,
            r.method,
            r.mode,
            r.size,
            r.repetitions,
            r.median_wall_s,
            r.per_1000_rows_s,
            r.framework_share
        ));
    }
    out
}
