//! Offline scaffolding for new engines: a prompt pack plus a source
//! skeleton, ready to hand to a human or a code-generating model.

use crate::error::{FlowError, Result};
use crate::slot::Slot;
use std::path::{Path, PathBuf};

/// Write (a) a prompt file embedding the description and the slot's I/O
/// contract, (b) a source skeleton with the required signature and a TODO
/// body, and (c) a contract reference document. Returns the written paths.
pub fn scaffold_engine(slot: Slot, description: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if description.trim().is_empty() {
        return Err(FlowError::Params("description required".into()));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| FlowError::io(out_dir.display().to_string(), e))?;

    let files = [
        (
            format!("llm_prompt_{slot}.txt"),
            prompt_text(slot, description),
        ),
        (
            format!("engine_{slot}_template.rs"),
            skeleton_source(slot, description),
        ),
        (format!("contract_{slot}.md"), contract_doc(slot)),
    ];
    let mut written = Vec::new();
    for (name, content) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| FlowError::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}

fn prompt_text(slot: Slot, description: &str) -> String {
    format!(
        "You are implementing a new {slot} engine for a modular workflow framework.\n\
         \n\
         Task description:\n\
         {description}\n\
         \n\
         Read the contract document (contract_{slot}.md) first, then complete the\n\
         template (engine_{slot}_template.rs). Keep the function signature exactly as\n\
         given; fill in the TODO body only. The engine must be a pure function of its\n\
         envelope: same envelope, same output. Do not read files, clocks, or any\n\
         global state, and draw randomness only from `env.seed`.\n\
         \n\
         When done, the engine registers via its `engine_spec()` function.\n"
    )
}

/// The payload-construction snippet and result expression per slot.
fn slot_body(slot: Slot) -> (&'static str, &'static str) {
    match slot {
        Slot::Split => (
            "    let n_rows = env.train_data.n_rows();\n    // TODO: build a SplitPlan over n_rows using env.seed.\n    let plan = flowengine::engines::split::split_holdout(n_rows, 0.2, env.seed)?;",
            "EnginePayload::Split(plan)",
        ),
        Slot::Preprocess => (
            "    // TODO: derive a transformed training dataset (same columns).\n    let transformed = env.train_data.clone();",
            "EnginePayload::Preprocess { train: transformed }",
        ),
        Slot::Train | Slot::Inprocess => (
            "    // TODO: fit a model on env.train_data and predict env.test_data.\n    let (artifact, predictions_test) = unimplemented!();",
            "EnginePayload::Model { artifact, predictions_test, predictions_train: None }",
        ),
        Slot::Postprocess => (
            "    let predictions = env.predictions.expect(\"postprocess stage always has predictions\");\n    // TODO: adjust the predictions.\n    let adjusted = predictions.to_vec();",
            "EnginePayload::Postprocess { adjusted }",
        ),
        Slot::Eval => (
            "    let predictions = env.predictions.expect(\"eval stage always has predictions\");\n    // TODO: compute the metric from `predictions` (and env.test_data as needed).\n    let overall = 0.0;",
            "EnginePayload::Eval(EvaluationRecord {\n        metric: ENGINE_NAME.to_string(),\n        overall,\n        by_group: Default::default(),\n        params_used: env.resolved_params.clone(),\n    })",
        ),
        Slot::Report => (
            "    // TODO: build report elements from the upstream result.\n    let elements = Vec::new();\n    let document = String::from(\"# TODO\");",
            "EnginePayload::Report { elements, document }",
        ),
    }
}

fn skeleton_source(slot: Slot, description: &str) -> String {
    let (body, payload) = slot_body(slot);
    let eval_import = if slot == Slot::Eval {
        "use flowengine::result::EvaluationRecord;\n"
    } else {
        ""
    };
    format!(
        "//! {description}\n\
         \n\
         use flowengine::contract::envelope::StageEnvelope;\n\
         use flowengine::contract::output::{{EngineOutput, EnginePayload}};\n\
         use flowengine::contract::params::ParamSchema;\n\
         use flowengine::error::Result;\n\
         use flowengine::registry::EngineSpec;\n\
         use flowengine::slot::Slot;\n\
         {eval_import}use std::sync::Arc;\n\
         \n\
         /// Rename to a lowercase_underscore name with the `{prefix}` prefix.\n\
         pub const ENGINE_NAME: &str = \"{prefix}fill_me\";\n\
         \n\
         pub fn engine_spec() -> EngineSpec {{\n\
         \x20   EngineSpec::new(\n\
         \x20       ENGINE_NAME,\n\
         \x20       Slot::{variant},\n\
         \x20       \"0.1.0\",\n\
         \x20       ParamSchema::new(),\n\
         \x20       {description:?},\n\
         \x20       Arc::new(run),\n\
         \x20   )\n\
         }}\n\
         \n\
         fn run(env: &StageEnvelope<'_>) -> Result<EngineOutput> {{\n\
         {body}\n\
         \x20   Ok(EngineOutput::new({payload}))\n\
         }}\n",
        prefix = slot.name_prefixes()[0],
        variant = slot_variant(slot),
    )
}

fn slot_variant(slot: Slot) -> &'static str {
    match slot {
        Slot::Split => "Split",
        Slot::Preprocess => "Preprocess",
        Slot::Train => "Train",
        Slot::Inprocess => "Inprocess",
        Slot::Postprocess => "Postprocess",
        Slot::Eval => "Eval",
        Slot::Report => "Report",
    }
}

fn contract_doc(slot: Slot) -> String {
    let output_shape = match slot {
        Slot::Split => "a `SplitPlan`: folds of disjoint train/test index sets covering every row",
        Slot::Preprocess => "a transformed training `Dataset` with the same column set as the input",
        Slot::Train | Slot::Inprocess => {
            "a `ModelArtifact` (coefficients incl. \"(intercept)\", formula, diagnostics) plus test predictions of test length"
        }
        Slot::Postprocess => "an adjusted prediction vector of test length",
        Slot::Eval => "an `EvaluationRecord`: metric name, finite overall value, per-protected-group breakdown",
        Slot::Report => "report elements and/or a composed document string",
    };
    format!(
        "# {slot} engine contract\n\
         \n\
         ## Input\n\
         \n\
         Every engine receives a `StageEnvelope`:\n\
         \n\
         - `train_data`, `test_data`: the fold's partitions (for the split stage,\n\
         \x20 `train_data` is the full dataset)\n\
         - `vars`: variable roles (features, protected, target, protected binary)\n\
         - `model`: the fold's fitted model, when one exists\n\
         - `predictions`: the fold's most recent prediction vector (adjusted when a\n\
         \x20 postprocessor ran)\n\
         - `resolved_params`: exactly the keys declared in the engine's `ParamSchema`\n\
         \x20 (closed design: undeclared keys never arrive, unknown user keys are\n\
         \x20 rejected upstream)\n\
         - `seed`: the engine's derived seed; the only legitimate randomness source\n\
         - `upstream`: read-only view of results accumulated so far\n\
         \n\
         ## Output\n\
         \n\
         A `{slot}` engine must return {output_shape}.\n\
         \n\
         An optional `specific_output` may expose a reduced payload; it must be a\n\
         sub-map of the full payload and is validated as such.\n\
         \n\
         ## Rules\n\
         \n\
         - Pure function of the envelope: no I/O, no clocks, no global state.\n\
         - Deterministic: identical envelopes must produce identical outputs.\n\
         - Declare every accepted parameter in the `ParamSchema`; required entries\n\
         \x20 carry no default.\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let files =
            scaffold_engine(Slot::Eval, "The Median of all predictions.", dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files {
            assert!(f.exists());
        }
        let prompt = std::fs::read_to_string(&files[0]).unwrap();
        assert!(prompt.contains("The Median of all predictions."));
        let skeleton = std::fs::read_to_string(&files[1]).unwrap();
        assert!(skeleton.contains("fn run(env: &StageEnvelope<'_>) -> Result<EngineOutput>"));
        assert!(skeleton.contains("TODO"));
        let contract = std::fs::read_to_string(&files[2]).unwrap();
        assert!(contract.contains("EvaluationRecord"));
    }

    #[test]
    fn empty_description_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = scaffold_engine(Slot::Eval, "  ", dir.path()).unwrap_err();
        assert!(err.to_string().contains("description required"));
    }

    #[test]
    fn deterministic_output() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let f1 = scaffold_engine(Slot::Train, "Fit something.", d1.path()).unwrap();
        let f2 = scaffold_engine(Slot::Train, "Fit something.", d2.path()).unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            assert_eq!(
                std::fs::read(a).unwrap(),
                std::fs::read(b).unwrap()
            );
        }
    }
}
