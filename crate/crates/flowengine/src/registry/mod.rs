//! Typed engine registry: registration, lookup, enumeration, sealing.
//!
//! The registry is an explicit value handed to the executor, not global
//! state. It is mutable during setup and sealed before any workflow runs;
//! a sealed registry is read-only and freely shareable across threads.

mod manifest;
mod scaffold;

pub use manifest::{load_manifest, load_manifest_dir, register_from_manifest, EngineManifest};
pub use scaffold::scaffold_engine;

use crate::contract::envelope::StageEnvelope;
use crate::contract::output::EngineOutput;
use crate::contract::params::ParamSchema;
use crate::error::{FlowError, Result};
use crate::slot::Slot;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub type EngineRun =
    Arc<dyn for<'a> Fn(&StageEnvelope<'a>) -> Result<EngineOutput> + Send + Sync>;

/// A registered engine: identity, slot, declared parameters, and the
/// callable implementing it. The callable must be a pure function of its
/// envelope.
#[derive(Clone)]
pub struct EngineSpec {
    pub name: String,
    pub slot: Slot,
    pub version: String,
    pub param_schema: ParamSchema,
    pub description: String,
    pub run: EngineRun,
}

impl EngineSpec {
    pub fn new(
        name: impl Into<String>,
        slot: Slot,
        version: impl Into<String>,
        param_schema: ParamSchema,
        description: impl Into<String>,
        run: EngineRun,
    ) -> Self {
        Self {
            name: name.into(),
            slot,
            version: version.into(),
            param_schema,
            description: description.into(),
        run,
        }
    }

    /// Identity on the declared surface. Callables cannot be compared, so
    /// two specs agreeing on every declared field count as identical.
    pub fn same_declaration(&self, other: &EngineSpec) -> bool {
        self.name == other.name
            && self.slot == other.slot
            && self.version == other.version
            && self.param_schema == other.param_schema
            && self.description == other.description
    }
}

impl std::fmt::Debug for EngineSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EngineSpec")
            .field("name", &self.name)
            .field("slot", &self.slot)
            .field("version", &self.version)
            .finish_non_exhaustive()
    }
}

#[derive(Default)]
pub struct Registry {
    engines: BTreeMap<String, EngineSpec>,
    sealed: bool,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register an engine. Re-registering an identical declaration is a
    /// no-op; a different declaration under an existing name needs
    /// `overwrite`.
    pub fn register_engine(&mut self, spec: EngineSpec, overwrite: bool) -> Result<()> {
        if self.sealed {
            return Err(FlowError::Registry(
                "registry is sealed; no further registrations".into(),
            ));
        }
        validate_engine_name(&spec.name, spec.slot)?;
        let schema_violations = spec.param_schema.violations();
        if !schema_violations.is_empty() {
            return Err(FlowError::Registry(format!(
                "engine {:?} has a malformed parameter schema: {}",
                spec.name,
                schema_violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        if let Some(existing) = self.engines.get(&spec.name) {
            if existing.same_declaration(&spec) {
                return Ok(());
            }
            if !overwrite {
                return Err(FlowError::Registry(format!(
                    "engine {:?} is already registered with a different declaration (pass overwrite to replace)",
                    spec.name
                )));
            }
        }
        self.engines.insert(spec.name.clone(), spec);
        Ok(())
    }

    pub fn get_engine(&self, name: &str) -> Result<&EngineSpec> {
        self.engines.get(name).ok_or_else(|| {
            let mut near: Vec<&str> = self
                .engines
                .keys()
                .filter(|k| levenshtein(k, name) <= 2)
                .map(|k| k.as_str())
                .collect();
            near.sort_unstable();
            if near.is_empty() {
                FlowError::Registry(format!("unknown engine {name:?}"))
            } else {
                FlowError::Registry(format!(
                    "unknown engine {name:?}; nearest matches: {}",
                    near.join(", ")
                ))
            }
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.engines.contains_key(name)
    }

    /// Sorted (name, slot, version) listing, optionally filtered by slot.
    pub fn list_registered_engines(&self, slot: Option<Slot>) -> Vec<(String, Slot, String)> {
        self.engines
            .values()
            .filter(|spec| slot.map(|s| spec.slot == s).unwrap_or(true))
            .map(|spec| (spec.name.clone(), spec.slot, spec.version.clone()))
            .collect()
    }

    /// Listing keyed by a slot name string; unknown slots are an error.
    pub fn list_by_slot_name(&self, slot: Option<&str>) -> Result<Vec<(String, Slot, String)>> {
        let slot = match slot {
            None => None,
            Some(s) => Some(
                Slot::parse(s)
                    .ok_or_else(|| FlowError::Registry(format!("unknown slot {s:?}")))?,
            ),
        };
        Ok(self.list_registered_engines(slot))
    }

    /// Freeze the registry. The executor refuses unsealed registries.
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// Wrap every registered callable so each invocation bumps `counter`.
    /// Used by tests to prove that validation never executes engines.
    pub fn instrument_counter(&mut self, counter: Arc<AtomicU64>) -> Result<()> {
        if self.sealed {
            return Err(FlowError::Registry("cannot instrument a sealed registry".into()));
        }
        for spec in self.engines.values_mut() {
            let inner = Arc::clone(&spec.run);
            let counter = Arc::clone(&counter);
            spec.run = Arc::new(move |env| {
                counter.fetch_add(1, Ordering::Relaxed);
                inner(env)
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("engines", &self.engines.keys().collect::<Vec<_>>())
            .field("sealed", &self.sealed)
            .finish()
    }
}

fn validate_engine_name(name: &str, slot: Slot) -> Result<()> {
    if name.is_empty() {
        return Err(FlowError::Registry("engine name must not be empty".into()));
    }
    if !name
        .chars()
        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
    {
        return Err(FlowError::Registry(format!(
            "engine name {name:?} must be lowercase with underscores"
        )));
    }
    if !slot.matches_name(name) {
        return Err(FlowError::Registry(format!(
            "name/slot prefix mismatch: {name:?} is not a valid {slot} engine name (expected prefix {})",
            slot.name_prefixes().join(" or ")
        )));
    }
    Ok(())
}

/// Classic edit distance, used only for "did you mean" suggestions.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        current[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            current[j + 1] = (prev[j + 1] + 1).min(current[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::output::EnginePayload;
    use crate::result::EvaluationRecord;

    fn dummy_eval(name: &str) -> EngineSpec {
        EngineSpec::new(
            name,
            Slot::Eval,
            "0.1.0",
            ParamSchema::new(),
            "test engine",
            Arc::new(|env| {
                Ok(EngineOutput::new(EnginePayload::Eval(EvaluationRecord {
                    metric: "eval_dummy".into(),
                    overall: env.predictions.map(|p| p.len() as f64).unwrap_or(0.0),
                    by_group: Default::default(),
                    params_used: Default::default(),
                })))
            }),
        )
    }

    #[test]
    fn register_then_get_round_trip() {
        let mut reg = Registry::new();
        reg.register_engine(dummy_eval("eval_median"), false).unwrap();
        let spec = reg.get_engine("eval_median").unwrap();
        assert_eq!(spec.name, "eval_median");
        assert_eq!(spec.slot, Slot::Eval);
        assert_eq!(spec.version, "0.1.0");
        let listed = reg.list_registered_engines(Some(Slot::Eval));
        assert_eq!(listed.len(), 1);
        assert_eq!(listed[0].0, "eval_median");
    }

    #[test]
    fn idempotent_re_registration() {
        let mut reg = Registry::new();
        reg.register_engine(dummy_eval("eval_x"), false).unwrap();
        reg.register_engine(dummy_eval("eval_x"), false).unwrap();
        assert_eq!(reg.list_registered_engines(None).len(), 1);
    }

    #[test]
    fn conflicting_declaration_needs_overwrite() {
        let mut reg = Registry::new();
        reg.register_engine(dummy_eval("eval_x"), false).unwrap();
        let mut changed = dummy_eval("eval_x");
        changed.version = "0.2.0".into();
        assert!(reg.register_engine(changed.clone(), false).is_err());
        reg.register_engine(changed, true).unwrap();
        assert_eq!(reg.get_engine("eval_x").unwrap().version, "0.2.0");
    }

    #[test]
    fn prefix_mismatch_rejected() {
        let mut reg = Registry::new();
        let mut wrong = dummy_eval("train_x");
        wrong.slot = Slot::Eval;
        let err = reg.register_engine(wrong, false).unwrap_err();
        assert!(err.to_string().contains("name/slot prefix mismatch"));
    }

    #[test]
    fn case_sensitive_lookup() {
        let mut reg = Registry::new();
        reg.register_engine(dummy_eval("eval_median"), false).unwrap();
        assert!(reg.get_engine("Eval_Median").is_err());
    }

    #[test]
    fn unknown_name_suggests_near_matches() {
        let mut reg = Registry::new();
        reg.register_engine(dummy_eval("eval_median"), false).unwrap();
        reg.register_engine(dummy_eval("eval_mse"), false).unwrap();
        let err = reg.get_engine("eval_mediam").unwrap_err().to_string();
        assert!(err.contains("eval_median"));
        assert!(!err.contains("eval_mse"));
    }

    #[test]
    fn list_sorted_and_registration_order_free() {
        let mut a = Registry::new();
        a.register_engine(dummy_eval("eval_b"), false).unwrap();
        a.register_engine(dummy_eval("eval_a"), false).unwrap();
        let mut b = Registry::new();
        b.register_engine(dummy_eval("eval_a"), false).unwrap();
        b.register_engine(dummy_eval("eval_b"), false).unwrap();
        assert_eq!(a.list_registered_engines(None), b.list_registered_engines(None));
        let names: Vec<String> = a
            .list_registered_engines(None)
            .into_iter()
            .map(|(n, _, _)| n)
            .collect();
        assert_eq!(names, vec!["eval_a".to_string(), "eval_b".to_string()]);
    }

    #[test]
    fn unknown_slot_name_is_error() {
        let reg = Registry::new();
        assert!(reg.list_by_slot_name(Some("nonexistent")).is_err());
        assert_eq!(reg.list_by_slot_name(Some("eval")).unwrap().len(), 0);
    }

    #[test]
    fn sealed_registry_rejects_registration() {
        let mut reg = Registry::new();
        reg.seal();
        assert!(reg.register_engine(dummy_eval("eval_x"), false).is_err());
    }

    #[test]
    fn edit_distance_oracle() {
        // Brute-force recursive oracle on short strings.
        fn oracle(a: &[char], b: &[char]) -> usize {
            match (a, b) {
                ([], b) => b.len(),
                (a, []) => a.len(),
                ([a0, ar @ ..], [b0, br @ ..]) => {
                    let sub = oracle(ar, br) + usize::from(a0 != b0);
                    let del = oracle(ar, b) + 1;
                    let ins = oracle(a, br) + 1;
                    sub.min(del).min(ins)
                }
            }
        }
        let words = ["eval", "evla", "train", "t", "", "median", "mediam"];
        for a in words {
            for b in words {
                let ac: Vec<char> = a.chars().collect();
                let bc: Vec<char> = b.chars().collect();
                assert_eq!(levenshtein(a, b), oracle(&ac, &bc), "{a} vs {b}");
            }
        }
    }
}
