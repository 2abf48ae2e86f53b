//! The control object: one declarative value specifying an entire workflow.

use crate::canonical::{canonical_bytes, canonicalize, fnv1a64};
use crate::data::Dataset;
use crate::error::{FlowError, Result};
use crate::roles::VariableRoles;
use crate::slot::Slot;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl Default for LogLevel {
    fn default() -> Self {
        LogLevel::Info
    }
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub log_show: bool,
    #[serde(default)]
    pub log_level: LogLevel,
    pub global_seed: u64,
    /// When set, engines that declare a `specific_output` have their full
    /// payloads omitted from the final result; only the reduced sub-maps
    /// are retained.
    #[serde(default, skip_serializing_if = "is_false")]
    pub specific_output_only: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            log_show: true,
            log_level: LogLevel::Info,
            global_seed: 0,
            specific_output_only: false,
        }
    }
}

/// The data section: variable roles plus either one full dataset (to be
/// split) or explicit train/test partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSection {
    pub vars: VariableRoles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<Dataset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<Dataset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<Dataset>,
}

/// Engine selections per slot. `train` is always named; `inprocess`, when
/// set, replaces the train engine's fitting procedure at execution time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineSelection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<String>,
    pub train: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inprocess: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postprocess: Option<String>,
    pub eval: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub report: Vec<String>,
}

impl EngineSelection {
    /// Every (slot, engine-name) selection, evals and reports expanded.
    pub fn selections(&self) -> Vec<(Slot, &str)> {
        let mut out = Vec::new();
        if let Some(name) = &self.split {
            out.push((Slot::Split, name.as_str()));
        }
        if let Some(name) = &self.preprocess {
            out.push((Slot::Preprocess, name.as_str()));
        }
        out.push((Slot::Train, self.train.as_str()));
        if let Some(name) = &self.inprocess {
            out.push((Slot::Inprocess, name.as_str()));
        }
        if let Some(name) = &self.postprocess {
            out.push((Slot::Postprocess, name.as_str()));
        }
        for name in &self.eval {
            out.push((Slot::Eval, name.as_str()));
        }
        for name in &self.report {
            out.push((Slot::Report, name.as_str()));
        }
        out
    }
}

pub type ParamMap = BTreeMap<String, Value>;

/// Full declarative workflow specification: settings, data and roles,
/// engine choices, and per-slot parameter maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlObject {
    pub settings: Settings,
    pub data: DataSection,
    pub engines: EngineSelection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<Slot, ParamMap>,
}

impl ControlObject {
    pub fn params_for(&self, slot: Slot) -> ParamMap {
        self.params.get(&slot).cloned().unwrap_or_default()
    }

    /// Canonical bytes of the full control object (round-trips through
    /// deserialization to an identical value).
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        canonicalize(self)
    }

    /// Encoding used for the digest: identical to the canonical form except
    /// that each embedded dataset is represented by its column metadata,
    /// row count, and a content hash over raw value bits, and empty
    /// per-slot param maps are pruned (so `params = {}` and an absent map
    /// digest equally).
    fn digest_value(&self) -> Result<Value> {
        let mut root = serde_json::to_value(self)
            .map_err(|e| FlowError::Unserializable(format!("control object: {e}")))?;

        let data = root
            .get_mut("data")
            .and_then(Value::as_object_mut)
            .expect("control serializes with a data object");
        for (field, ds) in [
            ("full", &self.data.full),
            ("train", &self.data.train),
            ("test", &self.data.test),
        ] {
            if let Some(ds) = ds {
                data.insert(field.to_string(), dataset_summary(ds));
            }
        }

        if let Some(params) = root.get_mut("params").and_then(Value::as_object_mut) {
            for (slot, map) in params.iter() {
                if let Some(obj) = map.as_object() {
                    for (key, value) in obj {
                        check_param_value(&format!("params.{slot}.{key}"), value)?;
                    }
                }
            }
            params.retain(|_, v| v.as_object().map(|m| !m.is_empty()).unwrap_or(true));
            if params.is_empty() {
                root.as_object_mut().unwrap().remove("params");
            }
        }
        Ok(root)
    }

    /// Stable 64-bit digest of this control object: FNV-1a over the canonical
    /// bytes of the digest encoding. Identical controls digest identically
    /// across processes and platforms.
    pub fn digest(&self) -> Result<u64> {
        Ok(fnv1a64(&canonical_bytes(&self.digest_value()?)?))
    }
}

fn dataset_summary(ds: &Dataset) -> Value {
    serde_json::json!({
        "columns": ds
            .columns()
            .iter()
            .map(|c| serde_json::json!({"name": c.name(), "kind": serde_json::to_value(c.kind()).unwrap()}))
            .collect::<Vec<_>>(),
        "n_rows": ds.n_rows(),
        "content_hash": ds.content_hash(),
    })
}

/// Param values are scalars, strings, or lists thereof; anything else is
/// not a legal parameter and cannot be digested.
pub fn check_param_value(path: &str, value: &Value) -> Result<()> {
    match value {
        Value::Bool(_) | Value::String(_) => Ok(()),
        Value::Number(n) => {
            if n.as_f64().map(|f| f.is_finite()).unwrap_or(true) {
                Ok(())
            } else {
                Err(FlowError::Unserializable(path.to_string()))
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Bool(_) | Value::String(_) | Value::Number(_) => {
                        check_param_value(&format!("{path}[{i}]"), item)?;
                    }
                    _ => return Err(FlowError::Unserializable(format!("{path}[{i}]"))),
                }
            }
            Ok(())
        }
        Value::Null | Value::Object(_) => Err(FlowError::Unserializable(path.to_string())),
    }
}

/// Stable digest of a control object. See [`ControlObject::digest`].
pub fn digest_control(control: &ControlObject) -> Result<u64> {
    control.digest()
}
