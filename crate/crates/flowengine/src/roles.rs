//! Variable role assignments binding a workflow to dataset columns.

use crate::data::{ColumnKind, Dataset};
use crate::error::Violation;
use serde::{Deserialize, Serialize};

/// Which columns play which role: predictors, protected attributes, the
/// target, and the binary protected columns used for group breakdowns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRoles {
    pub feature_vars: Vec<String>,
    pub protected_vars: Vec<String>,
    pub target_var: String,
    pub protected_vars_binary: Vec<String>,
}

impl VariableRoles {
    /// Structural checks that do not need a dataset: target not reused,
    /// no duplicates within a list.
    pub fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (list_name, list) in [
            ("feature_vars", &self.feature_vars),
            ("protected_vars", &self.protected_vars),
            ("protected_vars_binary", &self.protected_vars_binary),
        ] {
            if list.contains(&self.target_var) {
                out.push(Violation::new(
                    "vars",
                    format!("target_var {:?} also appears in {list_name}", self.target_var),
                ));
            }
            let mut seen = std::collections::BTreeSet::new();
            for name in list {
                if !seen.insert(name.as_str()) {
                    out.push(Violation::new(
                        "vars",
                        format!("duplicate column {name:?} in {list_name}"),
                    ));
                }
            }
        }
        out
    }

    /// Checks against a bound dataset: all named columns exist; binary
    /// protected columns are binary-kind.
    pub fn dataset_violations(&self, dataset: &Dataset, which: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let all_named = self
            .feature_vars
            .iter()
            .chain(&self.protected_vars)
            .chain(&self.protected_vars_binary)
            .chain(std::iter::once(&self.target_var));
        for name in all_named {
            if !dataset.has_column(name) {
                out.push(Violation::new(
                    "vars",
                    format!("column {name:?} not present in {which} dataset"),
                ));
            }
        }
        for name in &self.protected_vars_binary {
            if let Some(col) = dataset.column(name) {
                if col.kind() != ColumnKind::Binary {
                    out.push(Violation::new(
                        "vars",
                        format!("protected_vars_binary column {name:?} is not binary in {which} dataset"),
                    ));
                }
            }
        }
        out
    }

    pub fn violations(&self, dataset: &Dataset, which: &str) -> Vec<Violation> {
        let mut out = self.structural_violations();
        out.extend(self.dataset_violations(dataset, which));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    fn ds() -> Dataset {
        Dataset::from_pairs(vec![
            ("x", vec![1.0, 2.0]),
            ("g", vec![0.0, 1.0]),
            ("y", vec![0.0, 3.0]),
        ])
        .unwrap()
    }

    #[test]
    fn valid_roles_pass() {
        let roles = VariableRoles {
            feature_vars: vec!["x".into()],
            protected_vars: vec!["g".into()],
            target_var: "y".into(),
            protected_vars_binary: vec!["g".into()],
        };
        assert!(roles.violations(&ds(), "full").is_empty());
    }

    #[test]
    fn target_overlap_and_duplicates_flagged() {
        let roles = VariableRoles {
            feature_vars: vec!["x".into(), "x".into(), "y".into()],
            protected_vars: vec![],
            target_var: "y".into(),
            protected_vars_binary: vec![],
        };
        let v = roles.structural_violations();
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn missing_column_and_non_binary_flagged() {
        let roles = VariableRoles {
            feature_vars: vec!["missing".into()],
            protected_vars: vec![],
            target_var: "y".into(),
            protected_vars_binary: vec!["x".into()],
        };
        let v = roles.dataset_violations(&ds(), "full");
        assert_eq!(v.len(), 2);
        assert!(v[0].message.contains("missing"));
        assert!(v[1].message.contains("not binary"));
    }
}
