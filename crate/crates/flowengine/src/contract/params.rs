//! Declared parameter schemas and closed-design parameter resolution.

use crate::control::ParamMap;
use crate::error::{FlowError, Result, Violation};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Real,
    Int,
    Bool,
    String,
    NameList,
}

impl ParamKind {
    fn accepts(self, value: &Value) -> bool {
        match self {
            ParamKind::Real => value.is_number(),
            ParamKind::Int => value.is_i64() || value.is_u64(),
            ParamKind::Bool => value.is_boolean(),
            ParamKind::String => value.is_string(),
            ParamKind::NameList => value
                .as_array()
                .map(|a| a.iter().all(Value::is_string))
                .unwrap_or(false),
        }
    }

    fn describe(self) -> &'static str {
        match self {
            ParamKind::Real => "a real number",
            ParamKind::Int => "an integer",
            ParamKind::Bool => "a boolean",
            ParamKind::String => "a string",
            ParamKind::NameList => "a list of names",
        }
    }
}

/// Value constraint: a numeric range (either bound optional, either bound
/// open or closed) or a string enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Range {
        min: Option<f64>,
        max: Option<f64>,
        min_open: bool,
        max_open: bool,
    },
    Enum(Vec<String>),
}

impl Domain {
    fn satisfied_by(&self, value: &Value) -> bool {
        match self {
            Domain::Range {
                min,
                max,
                min_open,
                max_open,
            } => {
                let Some(x) = value.as_f64() else { return false };
                if let Some(lo) = min {
                    if *min_open && x <= *lo || !*min_open && x < *lo {
                        return false;
                    }
                }
                if let Some(hi) = max {
                    if *max_open && x >= *hi || !*max_open && x > *hi {
                        return false;
                    }
                }
                true
            }
            Domain::Enum(options) => value
                .as_str()
                .map(|s| options.iter().any(|o| o == s))
                .unwrap_or(false),
        }
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Range {
                min,
                max,
                min_open,
                max_open,
            } => {
                let lo = min
                    .map(|v| format!("{}{v}", if *min_open { ">" } else { ">=" }))
                    .unwrap_or_default();
                let hi = max
                    .map(|v| format!("{}{v}", if *max_open { "<" } else { "<=" }))
                    .unwrap_or_default();
                match (lo.is_empty(), hi.is_empty()) {
                    (false, false) => write!(f, "{lo} and {hi}"),
                    (false, true) => write!(f, "{lo}"),
                    (true, false) => write!(f, "{hi}"),
                    (true, true) => write!(f, "unbounded"),
                }
            }
            Domain::Enum(options) => write!(f, "one of {options:?}"),
        }
    }
}

/// One declared parameter. Required entries carry no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub kind: ParamKind,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
}

impl ParamSpec {
    pub fn new(kind: ParamKind) -> Self {
        Self {
            kind,
            required: false,
            default: None,
            domain: None,
        }
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self.default = None;
        self
    }

    pub fn default_value(mut self, value: Value) -> Self {
        self.default = Some(value);
        self.required = false;
        self
    }

    pub fn range(mut self, min: Option<f64>, max: Option<f64>) -> Self {
        self.domain = Some(Domain::Range {
            min,
            max,
            min_open: false,
            max_open: false,
        });
        self
    }

    pub fn open_range(mut self, min: Option<f64>, max: Option<f64>) -> Self {
        self.domain = Some(Domain::Range {
            min,
            max,
            min_open: min.is_some(),
            max_open: max.is_some(),
        });
        self
    }

    pub fn one_of(mut self, options: &[&str]) -> Self {
        self.domain = Some(Domain::Enum(options.iter().map(|s| s.to_string()).collect()));
        self
    }
}

/// Declared parameters of one engine: the closed set of keys it accepts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSchema {
    pub entries: BTreeMap<String, ParamSpec>,
}

impl ParamSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, spec: ParamSpec) -> Self {
        self.entries.insert(key.to_string(), spec);
        self
    }

    /// Schema well-formedness: required entries have no default; defaults
    /// satisfy their own kind and domain.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (key, spec) in &self.entries {
            if spec.required && spec.default.is_some() {
                out.push(Violation::new(
                    key.clone(),
                    "required parameter must not declare a default",
                ));
            }
            if let Some(default) = &spec.default {
                if !spec.kind.accepts(default) {
                    out.push(Violation::new(
                        key.clone(),
                        format!("default is not {}", spec.kind.describe()),
                    ));
                }
                if let Some(domain) = &spec.domain {
                    if !domain.satisfied_by(default) {
                        out.push(Violation::new(
                            key.clone(),
                            format!("default violates domain {domain}"),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Resolve parameters with precedence user > controller defaults > schema
/// defaults, enforcing the closed design: unknown user keys are rejected,
/// every required key must end up present, every value must satisfy its
/// declared kind and domain. Unknown *controller* keys are skipped — the
/// controller layer supplies generic defaults that not every engine
/// declares. Returns all violations, not just the first.
pub fn try_resolve_params(
    schema: &ParamSchema,
    controller_defaults: &ParamMap,
    user_params: &ParamMap,
) -> std::result::Result<ParamMap, Vec<Violation>> {
    let mut violations = Vec::new();
    for key in user_params.keys() {
        if !schema.entries.contains_key(key) {
            violations.push(Violation::new(key.clone(), format!("unknown parameter {key}")));
        }
    }
    let mut resolved = ParamMap::new();
    for (key, spec) in &schema.entries {
        let value = user_params
            .get(key)
            .or_else(|| controller_defaults.get(key))
            .or(spec.default.as_ref());
        let Some(value) = value else {
            if spec.required {
                violations.push(Violation::new(
                    key.clone(),
                    format!("missing required parameter {key}"),
                ));
            }
            continue;
        };
        if !spec.kind.accepts(value) {
            violations.push(Violation::new(
                key.clone(),
                format!("parameter {key} must be {}", spec.kind.describe()),
            ));
            continue;
        }
        if let Some(domain) = &spec.domain {
            if !domain.satisfied_by(value) {
                violations.push(Violation::new(
                    key.clone(),
                    format!("parameter {key} violates constraint {domain}"),
                ));
                continue;
            }
        }
        resolved.insert(key.clone(), value.clone());
    }
    if violations.is_empty() {
        Ok(resolved)
    } else {
        Err(violations)
    }
}

/// [`try_resolve_params`] with violations folded into one error.
pub fn resolve_params(
    schema: &ParamSchema,
    controller_defaults: &ParamMap,
    user_params: &ParamMap,
) -> Result<ParamMap> {
    try_resolve_params(schema, controller_defaults, user_params).map_err(|violations| {
        FlowError::Params(
            violations
                .iter()
                .map(|v| v.message.clone())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })
}
