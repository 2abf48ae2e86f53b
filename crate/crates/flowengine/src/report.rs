//! Two-layer reporting: self-contained report elements composed into
//! markdown or structured documents.
//!
//! Reports are pure functions of their inputs: no timestamps, hostnames, or
//! locale-dependent formatting ever reach the bytes, so the same result
//! always renders to the same document.

use crate::canonical::{canonical_bytes, digest_hex, format_f64};
use crate::data::Dataset;
use crate::error::{FlowError, Result};
use crate::result::WorkflowResult;
use serde::{Deserialize, Serialize};

/// One self-contained building block of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportElement {
    Table {
        title: String,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    PlotData {
        title: String,
        /// Named numeric series, all of equal length.
        series: Vec<(String, Vec<f64>)>,
    },
    Text {
        title: String,
        body: String,
    },
}

impl ReportElement {
    pub fn title(&self) -> &str {
        match self {
            ReportElement::Table { title, .. }
            | ReportElement::PlotData { title, .. }
            | ReportElement::Text { title, .. } => title,
        }
    }

    /// Structural validity: table rows match header arity; plot series have
    /// equal lengths.
    pub fn is_well_formed(&self) -> bool {
        match self {
            ReportElement::Table { header, rows, .. } => {
                rows.iter().all(|r| r.len() == header.len())
            }
            ReportElement::PlotData { series, .. } => {
                series.windows(2).all(|w| w[0].1.len() == w[1].1.len())
            }
            ReportElement::Text { .. } => true,
        }
    }
}

/// Render a real with six significant digits, plain decimal where readable.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Metric summary table: one row per (metric, overall) plus one per
/// (metric, group), ordered by metric then group name.
pub fn element_metrics_table(result: &WorkflowResult) -> Result<ReportElement> {
    if result.aggregate.is_empty() {
        return Err(FlowError::Dataset(
            "cannot tabulate a result without aggregate evaluations".into(),
        ));
    }
    let mut records: Vec<&crate::result::EvaluationRecord> = result.aggregate.iter().collect();
    records.sort_by(|a, b| a.metric.cmp(&b.metric));
    let mut rows = Vec::new();
    for record in records {
        rows.push(vec![
            record.metric.clone(),
            "(overall)".to_string(),
            sig6(record.overall),
        ]);
        for (group, value) in &record.by_group {
            rows.push(vec![record.metric.clone(), group.clone(), sig6(*value)]);
        }
    }
    Ok(ReportElement::Table {
        title: "Metrics".to_string(),
        header: vec!["metric".into(), "group".into(), "value".into()],
        rows,
    })
}

/// Five-number summary (min, q1, median, q3, max) with quartiles by linear
/// interpolation over the sorted sample.
pub fn five_number_summary(values: &[f64]) -> Result<[f64; 5]> {
    if values.is_empty() {
        return Err(FlowError::Dataset("five-number summary of empty series".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok([sorted[0], q(0.25), q(0.5), q(0.75), sorted[sorted.len() - 1]])
}

/// Per-group five-number summaries of the final (adjusted when present)
/// predictions, grouped by a binary column of the workflow's dataset.
pub fn element_group_boxdata(
    result: &WorkflowResult,
    dataset: &Dataset,
    group_col: &str,
) -> Result<ReportElement> {
    let group = dataset.col(group_col)?;
    let mut member = Vec::new();
    let mut non_member = Vec::new();
    for fold in &result.folds {
        let Some(preds) = fold.final_predictions() else {
            return Err(FlowError::Dataset(format!(
                "fold {} carries no predictions",
                fold.fold_index
            )));
        };
        for (&row, &p) in fold.test_rows.iter().zip(preds) {
            if group[row as usize] == 1.0 {
                member.push(p);
            } else {
                non_member.push(p);
            }
        }
    }
    if member.is_empty() || non_member.is_empty() {
        return Err(FlowError::Dataset(format!(
            "group column {group_col:?} has an empty side"
        )));
    }
    let m = five_number_summary(&member)?;
    let n = five_number_summary(&non_member)?;
    Ok(ReportElement::PlotData {
        title: format!("Prediction spread by {group_col}"),
        series: vec![
            (format!("{group_col}=1"), m.to_vec()),
            (format!("{group_col}=0"), n.to_vec()),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Structured,
}

/// Compose elements into one document. Markdown: H1 title, one H2 per
/// element, pipe tables, plot data as fenced CSV. Structured: canonical
/// key-sorted JSON embedding the same content plus the control digest and
/// provenance chain.
pub fn compose_report(
    elements: &[ReportElement],
    format: ReportFormat,
    result: &WorkflowResult,
) -> Result<Vec<u8>> {
    if elements.is_empty() {
        return Err(FlowError::Dataset("cannot compose a report without elements".into()));
    }
    for e in elements {
        if !e.is_well_formed() {
            return Err(FlowError::Dataset(format!(
                "malformed report element {:?}",
                e.title()
            )));
        }
    }
    match format {
        ReportFormat::Markdown => Ok(compose_markdown(elements, result).into_bytes()),
        ReportFormat::Structured => {
            let doc = serde_json::json!({
                "control_digest": digest_hex(result.control_digest),
                "elements": elements,
                "provenance": strip_wall_times(result),
            });
            canonical_bytes(&doc)
        }
    }
}

fn strip_wall_times(result: &WorkflowResult) -> serde_json::Value {
    let mut v = serde_json::to_value(&result.provenance).expect("provenance serializes");
    if let Some(entries) = v.as_array_mut() {
        for e in entries {
            if let Some(obj) = e.as_object_mut() {
                obj.remove("wall_time_ns");
            }
        }
    }
    v
}

/// One element as a markdown section (H2 heading plus body).
pub fn element_to_markdown(element: &ReportElement) -> String {
    let mut out = format!("## {}\n\n", element.title());
    match element {
        ReportElement::Table { header, rows, .. } => {
            out.push_str(&format!("| {} |\n", header.join(" | ")));
            out.push_str(&format!(
                "|{}\n",
                header.iter().map(|_| " --- |").collect::<String>()
            ));
            for row in rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
            out.push('\n');
        }
        ReportElement::PlotData { series, .. } => {
            out.push_str("```csv\n");
            out.push_str("series,min,q1,median,q3,max\n");
            for (name, values) in series {
                out.push_str(name);
                for v in values {
                    out.push(',');
                    out.push_str(&format_f64(*v));
                }
                out.push('\n');
            }
            out.push_str("```\n\n");
        }
        ReportElement::Text { body, .. } => {
            out.push_str(body);
            out.push_str("\n\n");
        }
    }
    out
}

fn compose_markdown(elements: &[ReportElement], result: &WorkflowResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Workflow report `{}`\n\n", digest_hex(result.control_digest)));
    out.push_str(&format!(
        "Control digest: `{}`\n\n",
        digest_hex(result.control_digest)
    ));
    for element in elements {
        out.push_str(&element_to_markdown(element));
    }
    out
}
