//! Built-in markdown report engine: metrics table plus per-group
//! prediction spreads, composed deterministically.

use crate::contract::envelope::{StageEnvelope, Upstream};
use crate::contract::output::{EngineOutput, EnginePayload};
use crate::error::{FlowError, Result};
use crate::report::{
    compose_report, element_group_boxdata, element_metrics_table, ReportFormat,
};
use std::collections::BTreeMap;

pub fn run_report_markdown(env: &StageEnvelope<'_>) -> Result<EngineOutput> {
    let Upstream::Result(result) = env.upstream else {
        return Err(FlowError::Envelope(
            "report engines run on the completed result".into(),
        ));
    };
    let mut elements = vec![element_metrics_table(result)?];
    if let Some(cols) = env.param_names("box_group_cols") {
        for col in cols {
            // Columns whose groups are degenerate on this data are skipped;
            // the metrics table always renders.
            if let Ok(element) = element_group_boxdata(result, env.test_data, &col) {
                elements.push(element);
            }
        }
    }
    let document = String::from_utf8(compose_report(&elements, ReportFormat::Markdown, result)?)
        .expect("markdown is utf-8");
    let specific = BTreeMap::from([("document".to_string(), serde_json::json!(document))]);
    Ok(EngineOutput::with_specific(
        EnginePayload::Report { elements, document },
        specific,
    ))
}
