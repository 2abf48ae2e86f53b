//! Column-major numeric datasets.
//!
//! A [`Dataset`] is immutable after construction and validated on
//! construction: rectangular, unique column names, binary columns hold only
//! 0.0/1.0, and every value is finite — an invalid table cannot exist as a
//! `Dataset` value. Cloning is cheap (column storage is shared).
//!
//! Fold partitions are row-selected *views* over a shared base: the gather
//! happens lazily on first column access and is cached, so handing the same
//! partition to several pipeline stages copies each column at most once.

use crate::canonical::{format_f64, WordHash};
use crate::error::{FlowError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Binary,
}

#[derive(Debug, Clone)]
enum ColumnValues {
    Dense(Arc<Vec<f64>>),
    View {
        base: Arc<Vec<f64>>,
        rows: Arc<Vec<u32>>,
        cache: Arc<OnceLock<Arc<Vec<f64>>>>,
    },
}

#[derive(Debug, Clone)]
pub struct Column {
    name: String,
    kind: ColumnKind,
    values: ColumnValues,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }

    /// Materialized values. For a view this gathers once and caches.
    pub fn values(&self) -> &[f64] {
        match &self.values {
            ColumnValues::Dense(v) => v,
            ColumnValues::View { base, rows, cache } => cache.get_or_init(|| {
                Arc::new(rows.iter().map(|&r| base[r as usize]).collect())
            }),
        }
    }

    /// Dense backing vector, gathering if needed, shareable as a new base.
    fn dense_arc(&self) -> Arc<Vec<f64>> {
        match &self.values {
            ColumnValues::Dense(v) => Arc::clone(v),
            ColumnValues::View { base, rows, cache } => Arc::clone(cache.get_or_init(|| {
                Arc::new(rows.iter().map(|&r| base[r as usize]).collect())
            })),
        }
    }
}

/// Rectangular table of 64-bit reals with named, kinded columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    /// Build a dataset from (name, kind, values) columns, checking every
    /// construction invariant.
    pub fn from_columns(columns: Vec<(String, ColumnKind, Vec<f64>)>) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(FlowError::Dataset("dataset must have at least one column".into()));
        }
        let n_rows = columns[0].2.len();
        let mut seen = std::collections::BTreeSet::new();
        for (name, kind, values) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(FlowError::Dataset(format!("duplicate column name {name:?}")));
            }
            if values.len() != n_rows {
                return Err(FlowError::Dataset(format!(
                    "column {name:?} has {} values, expected {n_rows} (table must be rectangular)",
                    values.len()
                )));
            }
            for (i, v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FlowError::Dataset(format!(
                        "column {name:?} row {i}: non-finite value {v}"
                    )));
                }
                if *kind == ColumnKind::Binary && *v != 0.0 && *v != 1.0 {
                    return Err(FlowError::Dataset(format!(
                        "binary column {name:?} row {i}: value {v} is not 0 or 1"
                    )));
                }
            }
        }
        Ok(Dataset {
            columns: columns
                .into_iter()
                .map(|(name, kind, values)| Column {
                    name,
                    kind,
                    values: ColumnValues::Dense(Arc::new(values)),
                })
                .collect(),
            n_rows,
        })
    }

    /// Build from (name, values) pairs, detecting binary columns the same way
    /// CSV ingestion does (all values in {0, 1}).
    pub fn from_pairs<S: Into<String>>(pairs: Vec<(S, Vec<f64>)>) -> Result<Dataset> {
        Dataset::from_columns(
            pairs
                .into_iter()
                .map(|(name, values)| {
                    let kind = if values.iter().all(|v| *v == 0.0 || *v == 1.0) {
                        ColumnKind::Binary
                    } else {
                        ColumnKind::Numeric
                    };
                    (name.into(), kind, values)
                })
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    /// Values of a named column, or an error naming the column.
    pub fn col(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .map(|c| c.values())
            .ok_or_else(|| FlowError::Dataset(format!("unknown column {name:?}")))
    }

    /// Row-selected view sharing column storage with `self`. Indices may
    /// repeat (resampling) and need not be ordered. Gathering is deferred to
    /// first access of each column.
    pub fn select_rows(&self, rows: &[u32]) -> Result<Dataset> {
        if let Some(bad) = rows.iter().find(|&&r| r as usize >= self.n_rows) {
            return Err(FlowError::Dataset(format!(
                "row index {bad} out of range for dataset with {} rows",
                self.n_rows
            )));
        }
        let rows = Arc::new(rows.to_vec());
        Ok(Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    kind: c.kind,
                    values: ColumnValues::View {
                        base: c.dense_arc(),
                        rows: Arc::clone(&rows),
                        cache: Arc::new(OnceLock::new()),
                    },
                })
                .collect(),
            n_rows: rows.len(),
        })
    }

    /// Stable content hash over names, kinds, and the raw IEEE-754 bits of
    /// every value, in column order.
    pub fn content_hash(&self) -> u64 {
        let mut h = WordHash::new();
        h.update_u64(self.n_rows as u64);
        for c in &self.columns {
            h.update_bytes(c.name.as_bytes());
            h.update_u64(match c.kind {
                ColumnKind::Numeric => 0,
                ColumnKind::Binary => 1,
            });
            for v in c.values() {
                h.update_f64(*v);
            }
        }
        h.finish()
    }

    /// Bit-level equality of logical content.
    pub fn bits_eq(&self, other: &Dataset) -> bool {
        self.n_rows == other.n_rows
            && self.columns.len() == other.columns.len()
            && self.columns.iter().zip(&other.columns).all(|(a, b)| {
                a.name == b.name
                    && a.kind == b.kind
                    && a.values()
                        .iter()
                        .zip(b.values())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// Write as CSV: header row, comma separators, '.' decimal, shortest
    /// round-trip rendering (so a read-back is bit-identical).
    pub fn to_csv_string(&self) -> Result<String> {
        for c in &self.columns {
            if c.name.contains(',') || c.name.contains('\n') || c.name.contains('"') {
                return Err(FlowError::Dataset(format!(
                    "column name {:?} cannot be written to CSV",
                    c.name
                )));
            }
        }
        let mut out = String::new();
        out.push_str(&self.column_names().join(","));
        out.push('\n');
        let cols: Vec<&[f64]> = self.columns.iter().map(|c| c.values()).collect();
        for r in 0..self.n_rows {
            for (i, col) in cols.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format_f64(col[r]));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text).map_err(|e| FlowError::io(path.display().to_string(), e))
    }

    /// Parse CSV text (header row, comma-separated, '.' decimal). Binary
    /// columns are detected as values contained in {0, 1}.
    pub fn from_csv_str(text: &str) -> Result<Dataset> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| FlowError::Dataset("empty CSV: missing header row".into()))?;
        let names: Vec<String> = header
            .trim_end_matches('\r')
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        if names.iter().any(|n| n.is_empty()) {
            return Err(FlowError::Dataset("empty column name in CSV header".into()));
        }
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (lineno, line) in lines.enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() {
                return Err(FlowError::Dataset(format!(
                    "CSV row {}: {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    names.len()
                )));
            }
            for (c, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    FlowError::Dataset(format!(
                        "CSV row {} column {:?}: cannot parse {field:?} as a real",
                        lineno + 2,
                        names[c]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(FlowError::Dataset(format!(
                        "CSV row {} column {:?}: non-finite value",
                        lineno + 2,
                        names[c]
                    )));
                }
                values[c].push(v);
            }
        }
        Dataset::from_pairs(names.into_iter().zip(values).collect())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FlowError::io(path.display().to_string(), e))?;
        Dataset::from_csv_str(&text)
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.bits_eq(other)
    }
}

/// Serialized shape: column metadata plus column-major values.
#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    columns: Vec<ColumnMeta>,
    n_rows: usize,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ColumnMeta {
    name: String,
    kind: ColumnKind,
}

impl Serialize for Dataset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DatasetRepr {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnMeta {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
            n_rows: self.n_rows,
            values: self.columns.iter().map(|c| c.values().to_vec()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = DatasetRepr::deserialize(deserializer)?;
        if repr.columns.len() != repr.values.len() {
            return Err(serde::de::Error::custom("column metadata/values length mismatch"));
        }
        let ds = Dataset::from_columns(
            repr.columns
                .into_iter()
                .zip(repr.values)
                .map(|(m, v)| (m.name, m.kind, v))
                .collect(),
        )
        .map_err(serde::de::Error::custom)?;
        if ds.n_rows != repr.n_rows {
            return Err(serde::de::Error::custom("n_rows does not match column length"));
        }
        Ok(ds)
    }
}
