//! Engine manifests: declarative parameterizations of built-in engines.
//!
//! A compiled binary cannot discover user script files the way a dynamic
//! runtime can; manifests are the substitute. One TOML document per engine
//! declares a name, a slot, a base engine, and parameter values that become
//! the derived engine's defaults.

use crate::control::check_param_value;
use crate::error::{FlowError, Result};
use crate::registry::{EngineSpec, Registry};
use crate::slot::Slot;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
pub struct EngineManifest {
    pub name: String,
    pub slot: String,
    #[serde(default = "default_version")]
    pub version: String,
    pub base_engine: String,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
}

fn default_version() -> String {
    "0.1.0".to_string()
}

pub fn load_manifest(path: &Path) -> Result<EngineManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FlowError::io(path.display().to_string(), e))?;
    toml::from_str(&text).map_err(|e| FlowError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn toml_to_json(value: &toml::Value) -> Result<serde_json::Value> {
    serde_json::to_value(value)
        .map_err(|e| FlowError::Parse {
            path: "<manifest params>".into(),
            message: e.to_string(),
        })
}

/// Derive an engine from `manifest.base_engine` and register it: same
/// callable, same schema, with the manifest's params baked in as defaults.
pub fn register_from_manifest(registry: &mut Registry, manifest: &EngineManifest) -> Result<()> {
    let slot = Slot::parse(&manifest.slot)
        .ok_or_else(|| FlowError::Registry(format!("unknown slot {:?}", manifest.slot)))?;
    let base = registry.get_engine(&manifest.base_engine)?.clone();
    if base.slot != slot {
        return Err(FlowError::Registry(format!(
            "manifest slot {slot} does not match base engine {:?} (slot {})",
            manifest.base_engine, base.slot
        )));
    }
    let mut schema = base.param_schema.clone();
    for (key, value) in &manifest.params {
        let Some(spec) = schema.entries.get_mut(key) else {
            return Err(FlowError::Registry(format!(
                "manifest parameter {key:?} is not declared by base engine {:?}",
                manifest.base_engine
            )));
        };
        let json = toml_to_json(value)?;
        check_param_value(&format!("params.{key}"), &json)?;
        spec.default = Some(json);
        spec.required = false;
    }
    registry.register_engine(
        EngineSpec::new(
            manifest.name.clone(),
            slot,
            manifest.version.clone(),
            schema,
            format!("{} (derived from {})", base.description, base.name),
            base.run,
        ),
        false,
    )
}

/// Load every manifest under `dir`: `<dir>/*.toml` plus
/// `<dir>/<engine>/engine.toml`, in lexicographic path order.
pub fn load_manifest_dir(registry: &mut Registry, dir: &Path) -> Result<Vec<String>> {
    let mut manifest_paths = Vec::new();
    let entries =
        std::fs::read_dir(dir).map_err(|e| FlowError::io(dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| FlowError::io(dir.display().to_string(), e))?;
        let path = entry.path();
        if path.is_dir() {
            let nested = path.join("engine.toml");
            if nested.is_file() {
                manifest_paths.push(nested);
            }
        } else if path.extension().map(|e| e == "toml").unwrap_or(false) {
            manifest_paths.push(path);
        }
    }
    manifest_paths.sort();
    let mut registered = Vec::new();
    for path in manifest_paths {
        let manifest = load_manifest(&path)?;
        register_from_manifest(registry, &manifest)?;
        registered.push(manifest.name);
    }
    Ok(registered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::builtin_registry;

    #[test]
    fn manifest_derives_engine_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("strict.toml"),
            "name = \"eval_sp_strict\"\nslot = \"eval\"\nbase_engine = \"eval_statisticalparity\"\n\n[params]\nthreshold = 0.7\n",
        )
        .unwrap();
        let mut reg = builtin_registry();
        let names = load_manifest_dir(&mut reg, dir.path()).unwrap();
        assert_eq!(names, vec!["eval_sp_strict".to_string()]);
        let spec = reg.get_engine("eval_sp_strict").unwrap();
        assert_eq!(
            spec.param_schema.entries["threshold"].default,
            Some(serde_json::json!(0.7))
        );
    }

    #[test]
    fn unknown_manifest_param_rejected() {
        let mut reg = builtin_registry();
        let manifest = EngineManifest {
            name: "eval_sp_bad".into(),
            slot: "eval".into(),
            version: "0.1.0".into(),
            base_engine: "eval_statisticalparity".into(),
            params: BTreeMap::from([("mystery".to_string(), toml::Value::Integer(1))]),
        };
        assert!(register_from_manifest(&mut reg, &manifest).is_err());
    }

    #[test]
    fn nested_engine_toml_discovered() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("eval_sp_loose");
        std::fs::create_dir(&sub).unwrap();
        std::fs::write(
            sub.join("engine.toml"),
            "name = \"eval_sp_loose\"\nslot = \"eval\"\nbase_engine = \"eval_statisticalparity\"\n\n[params]\nthreshold = 0.3\n",
        )
        .unwrap();
        let mut reg = builtin_registry();
        let names = load_manifest_dir(&mut reg, dir.path()).unwrap();
        assert_eq!(names.len(), 1);
        assert!(reg.contains("eval_sp_loose"));
    }
}
