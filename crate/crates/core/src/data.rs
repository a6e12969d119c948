//! Typed tabular data model for mixed numeric / binary / categorical columns,
//! with the preprocessing steps used ahead of clustering and model fitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("response column '{0}' not found in schema")]
    MissingResponse(String),
    #[error("response column '{0}' must be binary")]
    NonBinaryResponse(String),
    #[error("categorical column '{0}' needs at least 2 levels")]
    TooFewLevels(String),
    #[error("column '{column}' row {row}: negative value {value} cannot be max-normalized")]
    NegativeValue {
        column: String,
        row: usize,
        value: f64,
    },
    #[error("both response classes must be present to undersample")]
    SingleClass,
    #[error("reference level '{level}' not found in column '{column}'")]
    UnknownReferenceLevel { column: String, level: String },
    #[error("every row contained a missing value")]
    AllRowsDropped,
    #[error("column '{column}' length {got} does not match row count {expected}")]
    LengthMismatch {
        column: String,
        got: usize,
        expected: usize,
    },
    #[error("column '{column}' row {row}: {detail}")]
    BadCell {
        column: String,
        row: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Binary,
    Categorical { levels: Vec<String> },
}

impl ColumnKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Ordered column declarations plus the name of the binary response column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub response: String,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, response: impl Into<String>) -> Result<Self, DataError> {
        let response = response.into();
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            if let ColumnKind::Categorical { levels } = &c.kind {
                if levels.len() < 2 {
                    return Err(DataError::TooFewLevels(c.name.clone()));
                }
            }
        }
        let resp = columns
            .iter()
            .find(|c| c.name == response)
            .ok_or_else(|| DataError::MissingResponse(response.clone()))?;
        if resp.kind != ColumnKind::Binary {
            return Err(DataError::NonBinaryResponse(response));
        }
        Ok(Schema { columns, response })
    }

    pub fn response_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.name == self.response)
            .expect("validated at construction")
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Column indices excluding the response, in declaration order.
    pub fn feature_indices(&self) -> Vec<usize> {
        let resp = self.response_index();
        (0..self.columns.len()).filter(|&i| i != resp).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Binary(Vec<u8>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Binary(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Column-major table with no missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub columns: Vec<Column>,
    pub n_rows: usize,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self, DataError> {
        let n_rows = columns.first().map_or(0, Column::len);
        for (spec, col) in schema.columns.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    column: spec.name.clone(),
                    got: col.len(),
                    expected: n_rows,
                });
            }
            match (&spec.kind, col) {
                (ColumnKind::Numeric, Column::Numeric(_)) => {}
                (ColumnKind::Binary, Column::Binary(v)) => {
                    if let Some(row) = v.iter().position(|&b| b > 1) {
                        return Err(DataError::BadCell {
                            column: spec.name.clone(),
                            row,
                            detail: format!("binary value {} not in {{0,1}}", v[row]),
                        });
                    }
                }
                (ColumnKind::Categorical { levels }, Column::Categorical(v)) => {
                    if let Some(row) = v.iter().position(|&c| c as usize >= levels.len()) {
                        return Err(DataError::BadCell {
                            column: spec.name.clone(),
                            row,
                            detail: format!("level index {} out of range", v[row]),
                        });
                    }
                }
                _ => {
                    return Err(DataError::BadCell {
                        column: spec.name.clone(),
                        row: 0,
                        detail: "column storage does not match declared kind".into(),
                    });
                }
            }
        }
        Ok(Dataset {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn response(&self) -> &[u8] {
        match &self.columns[self.schema.response_index()] {
            Column::Binary(v) => v,
            _ => unreachable!("response validated as binary"),
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.response().iter().filter(|&&y| y == 1).count();
        (self.n_rows - ones, ones)
    }

    /// Row subset in the given index order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|col| match col {
                Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                Column::Binary(v) => Column::Binary(rows.iter().map(|&r| v[r]).collect()),
                Column::Categorical(v) => {
                    Column::Categorical(rows.iter().map(|&r| v[r]).collect())
                }
            })
            .collect();
        Dataset {
            schema: self.schema.clone(),
            columns,
            n_rows: rows.len(),
        }
    }
}

/// What preprocessing did to the raw table, for the run report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub rows_dropped_missing: usize,
    pub normalization_divisors: Vec<(String, f64)>,
    pub zero_columns: Vec<String>,
    pub rows_removed_undersampling: usize,
    pub final_class_counts: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub dataset: Dataset,
    pub divisors: Vec<(String, f64)>,
    /// Constant-zero numeric columns left untouched (divisor 1).
    pub zero_columns: Vec<String>,
}

/// Divides every numeric column by its maximum, mapping numerics into [0,1].
/// Requires nonnegative numerics; an all-zero column keeps divisor 1 and is
/// reported rather than divided.
pub fn normalize_numeric(ds: &Dataset) -> Result<Normalized, DataError> {
    let mut columns = ds.columns.clone();
    let mut divisors = Vec::new();
    let mut zero_columns = Vec::new();
    for (i, spec) in ds.schema.columns.iter().enumerate() {
        if let (ColumnKind::Numeric, Column::Numeric(v)) = (&spec.kind, &mut columns[i]) {
            if let Some(row) = v.iter().position(|&x| x < 0.0) {
                return Err(DataError::NegativeValue {
                    column: spec.name.clone(),
                    row,
                    value: v[row],
                });
            }
            let max = v.iter().copied().fold(0.0f64, f64::max);
            if max == 0.0 {
                zero_columns.push(spec.name.clone());
                divisors.push((spec.name.clone(), 1.0));
            } else {
                for x in v.iter_mut() {
                    *x /= max;
                }
                divisors.push((spec.name.clone(), max));
            }
        }
    }
    Ok(Normalized {
        dataset: Dataset {
            schema: ds.schema.clone(),
            columns,
            n_rows: ds.n_rows,
        },
        divisors,
        zero_columns,
    })
}

/// Removes majority-class rows uniformly at random (seeded) until the
/// majority share is at most 55%. Minority rows are never touched.
pub fn undersample(ds: &Dataset, seed: u64) -> Result<(Dataset, usize), DataError> {
    let (n0, n1) = ds.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(DataError::SingleClass);
    }
    let (maj_class, n_maj, n_min) = if n0 >= n1 { (0u8, n0, n1) } else { (1u8, n1, n0) };
    // m/(m+n_min) <= 0.55  <=>  m <= (11/9) n_min, exactly in integers
    let keep = std::cmp::min(n_maj, 11 * n_min / 9);
    if keep == n_maj {
        return Ok((ds.clone(), 0));
    }
    let mut maj_rows: Vec<usize> = ds
        .response()
        .iter()
        .enumerate()
        .filter(|(_, &y)| y == maj_class)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    maj_rows.shuffle(&mut rng);
    maj_rows.truncate(keep);
    let mut rows: Vec<usize> = ds
        .response()
        .iter()
        .enumerate()
        .filter(|(_, &y)| y != maj_class)
        .map(|(i, _)| i)
        .collect();
    rows.extend(maj_rows);
    rows.sort_unstable();
    Ok((ds.subset(&rows), n_maj - keep))
}

/// Row-major design matrix with one-hot categoricals; the intercept is
/// handled inside the model fitters.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<f64>,
    pub response: Vec<u8>,
}

impl DesignMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn subset(&self, rows: &[usize]) -> DesignMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        let mut response = Vec::with_capacity(rows.len());
        for &r in rows {
            values.extend_from_slice(self.row(r));
            response.push(self.response[r]);
        }
        DesignMatrix {
            column_names: self.column_names.clone(),
            n_rows: rows.len(),
            n_cols: self.n_cols,
            values,
            response,
        }
    }

    /// Indices of columns with no variation (problematic alongside the intercept).
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.n_cols)
            .filter(|&j| {
                let first = self.values[j];
                (1..self.n_rows).all(|i| self.values[i * self.n_cols + j] == first)
            })
            .collect()
    }
}

/// Expands each categorical column into L-1 indicators, omitting the
/// reference level (default: first declared level). Numeric and binary
/// columns pass through.
pub fn one_hot(
    ds: &Dataset,
    reference_levels: &BTreeMap<String, String>,
) -> Result<DesignMatrix, DataError> {
    let mut column_names = Vec::new();
    // (source column, None = passthrough, Some(level) = indicator)
    let mut plan: Vec<(usize, Option<u32>)> = Vec::new();
    for &i in &ds.schema.feature_indices() {
        let spec = &ds.schema.columns[i];
        match &spec.kind {
            ColumnKind::Numeric | ColumnKind::Binary => {
                column_names.push(spec.name.clone());
                plan.push((i, None));
            }
            ColumnKind::Categorical { levels } => {
                let reference = reference_levels
                    .get(&spec.name)
                    .cloned()
                    .unwrap_or_else(|| levels[0].clone());
                let ref_idx = levels.iter().position(|l| *l == reference).ok_or_else(|| {
                    DataError::UnknownReferenceLevel {
                        column: spec.name.clone(),
                        level: reference.clone(),
                    }
                })?;
                for (li, level) in levels.iter().enumerate() {
                    if li != ref_idx {
                        column_names.push(format!("{}:{}", spec.name, level));
                        plan.push((i, Some(li as u32)));
                    }
                }
            }
        }
    }
    let n_cols = column_names.len();
    let mut values = Vec::with_capacity(ds.n_rows * n_cols);
    for r in 0..ds.n_rows {
        for &(i, indicator) in &plan {
            let v = match (&ds.columns[i], indicator) {
                (Column::Numeric(v), None) => v[r],
                (Column::Binary(v), None) => v[r] as f64,
                (Column::Categorical(v), Some(level)) => {
                    if v[r] == level {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => unreachable!("plan built from schema"),
            };
            values.push(v);
        }
    }
    Ok(DesignMatrix {
        column_names,
        n_rows: ds.n_rows,
        n_cols,
        values,
        response: ds.response().to_vec(),
    })
}
