//! Whole-control structural validation: every check the executor relies on,
//! run up front, with all violations accumulated and no engine executed.

use crate::contract::params::try_resolve_params;
use crate::control::{check_param_value, ControlObject, ParamMap};
use crate::data::{ColumnKind, Dataset};
use crate::error::Violation;
use crate::registry::Registry;
use crate::roles::VariableRoles;
use crate::slot::Slot;
use serde_json::json;

/// First pair of protected binary columns that sum to one on every row.
pub fn detect_complementary_pair(
    dataset: &Dataset,
    protected_binary: &[String],
) -> Option<(String, String)> {
    for i in 0..protected_binary.len() {
        for j in (i + 1)..protected_binary.len() {
            let (Some(a), Some(b)) = (
                dataset.column(&protected_binary[i]),
                dataset.column(&protected_binary[j]),
            ) else {
                continue;
            };
            if a.kind() != ColumnKind::Binary || b.kind() != ColumnKind::Binary {
                continue;
            }
            if a.values().iter().zip(b.values()).all(|(x, y)| x + y == 1.0) {
                return Some((protected_binary[i].clone(), protected_binary[j].clone()));
            }
        }
    }
    None
}

/// The controller layer: workflow-level defaults derived from the variable
/// roles and data, merged below user params and above schema defaults.
pub fn controller_defaults(
    slot: Slot,
    roles: &VariableRoles,
    pair: Option<&(String, String)>,
) -> ParamMap {
    let mut defaults = ParamMap::new();
    match slot {
        Slot::Train | Slot::Inprocess => {
            let terms: Vec<&str> = roles
                .feature_vars
                .iter()
                .chain(&roles.protected_vars)
                .map(String::as_str)
                .collect();
            defaults.insert("terms".to_string(), json!(terms));
            if slot == Slot::Inprocess {
                if let Some((a, _)) = pair {
                    defaults.insert("group_col".to_string(), json!(a));
                }
            }
        }
        Slot::Preprocess => {
            if let Some((a, _)) = pair {
                defaults.insert("group_col".to_string(), json!(a));
            }
        }
        Slot::Postprocess => {
            if let Some((a, b)) = pair {
                defaults.insert("group_cols".to_string(), json!([a, b]));
            }
        }
        Slot::Report => {
            if let Some((a, b)) = pair {
                defaults.insert("box_group_cols".to_string(), json!([a, b]));
            }
        }
        Slot::Split | Slot::Eval => {}
    }
    defaults
}

/// The dataset the variable roles bind to (full when present, otherwise the
/// explicit partitions).
fn bound_datasets(control: &ControlObject) -> Vec<(&Dataset, &'static str)> {
    let mut out = Vec::new();
    if let Some(ds) = &control.data.full {
        out.push((ds, "full"));
    }
    if let Some(ds) = &control.data.train {
        out.push((ds, "train"));
    }
    if let Some(ds) = &control.data.test {
        out.push((ds, "test"));
    }
    out
}

/// The engines that will actually execute, given the control's selections:
/// the split engine only on the full-data route, and the train engine only
/// when no inprocess engine replaces it.
pub fn executed_selections(control: &ControlObject) -> Vec<(Slot, String)> {
    let engines = &control.engines;
    let mut out = Vec::new();
    if control.data.full.is_some() {
        if let Some(name) = &engines.split {
            out.push((Slot::Split, name.clone()));
        }
    }
    if let Some(name) = &engines.preprocess {
        out.push((Slot::Preprocess, name.clone()));
    }
    match &engines.inprocess {
        Some(name) => out.push((Slot::Inprocess, name.clone())),
        None => out.push((Slot::Train, engines.train.clone())),
    }
    if let Some(name) = &engines.postprocess {
        out.push((Slot::Postprocess, name.clone()));
    }
    for name in &engines.eval {
        out.push((Slot::Eval, name.clone()));
    }
    for name in &engines.report {
        out.push((Slot::Report, name.clone()));
    }
    out
}

/// Validate a control object against a registry. Returns every violation
/// found (empty means valid); never executes an engine. A clean pass
/// guarantees the executor cannot fail structurally — only numeric or
/// engine-internal errors remain possible.
pub fn validate_control(control: &ControlObject, registry: &Registry) -> Vec<Violation> {
    let mut out = Vec::new();
    let data = &control.data;

    // Data section: exactly one of full / (train and test).
    let has_full = data.full.is_some();
    let has_split_pair = data.train.is_some() && data.test.is_some();
    if has_full && (data.train.is_some() || data.test.is_some()) {
        out.push(Violation::new(
            "data",
            "provide either data.full or data.train+data.test, not both",
        ));
    }
    if !has_full && !has_split_pair {
        out.push(Violation::new(
            "data",
            "provide data.full (with a split engine) or both data.train and data.test",
        ));
    }
    if has_full && control.engines.split.is_none() {
        out.push(Violation::new(
            "split",
            "data.full requires a split engine in the split slot",
        ));
    }

    // Variable roles, structurally and against each bound dataset.
    out.extend(control.data.vars.structural_violations());
    for (ds, which) in bound_datasets(control) {
        out.extend(control.data.vars.dataset_violations(ds, which));
    }

    if control.engines.train.is_empty() {
        out.push(Violation::new("train", "engines.train must name an engine"));
    }
    if control.engines.eval.is_empty() {
        out.push(Violation::new("eval", "engines.eval must name at least one engine"));
    }

    // Every referenced engine resolves and sits in the right slot.
    for (slot, name) in control.engines.selections() {
        if name.is_empty() {
            continue;
        }
        match registry.get_engine(name) {
            Err(_) => out.push(Violation::new(slot.name(), format!("unresolved engine {name}"))),
            Ok(spec) => {
                if spec.slot != slot {
                    out.push(Violation::new(
                        slot.name(),
                        format!("engine {name} fills slot {}, not {slot}", spec.slot),
                    ));
                }
            }
        }
    }

    // Params for slots that select no engine are dead configuration.
    for (slot, params) in &control.params {
        if params.is_empty() {
            continue;
        }
        let selected = control
            .engines
            .selections()
            .iter()
            .any(|(s, _)| s == slot);
        if !selected {
            out.push(Violation::new(
                slot.name(),
                format!("params given for slot {slot} but no engine selected"),
            ));
        }
        for (key, value) in params {
            if check_param_value(&format!("params.{slot}.{key}"), value).is_err() {
                out.push(Violation::new(
                    slot.name(),
                    format!("parameter {key} must be a scalar, string, or list"),
                ));
            }
        }
    }

    // Dry-run parameter resolution for every engine that will execute.
    let pair = bound_datasets(control)
        .first()
        .and_then(|(ds, _)| detect_complementary_pair(ds, &control.data.vars.protected_vars_binary));
    for (slot, name) in executed_selections(control) {
        let Ok(spec) = registry.get_engine(&name) else {
            continue; // already reported above
        };
        if spec.slot != slot {
            continue;
        }
        let defaults = controller_defaults(slot, &control.data.vars, pair.as_ref());
        if let Err(violations) = try_resolve_params(&spec.param_schema, &defaults, &control.params_for(slot)) {
            for v in violations {
                out.push(Violation::new(
                    format!("{}/{name}", slot.name()),
                    v.message,
                ));
            }
        }
    }

    out
}
