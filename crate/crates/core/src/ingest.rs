//! CSV loading against declared schemas, plus built-in schema profiles for
//! the four state recidivism datasets.
//!
//! CSV contract: RFC 4180, UTF-8, header row required; missing markers are
//! the empty string and "NA". Rows with any missing cell are dropped at load.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Column, ColumnKind, ColumnSpec, DataError, Dataset, PreprocessReport, Schema};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("csv read failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: missing {missing:?}, extra {extra:?}")]
    HeaderMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("row {row}, column '{column}': cannot parse '{token}'")]
    ParseError {
        row: usize,
        column: String,
        token: String,
    },
    #[error("row {row}, column '{column}': unknown category level '{token}'")]
    UnknownCategoryLevel {
        row: usize,
        column: String,
        token: String,
    },
    #[error("unknown profile '{0}'")]
    UnknownProfile(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A named schema with per-column encoding notes and default reference
/// levels for one-hot expansion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaProfile {
    pub name: String,
    pub schema: Schema,
    #[serde(default)]
    pub encoding_notes: BTreeMap<String, String>,
    #[serde(default)]
    pub reference_levels: BTreeMap<String, String>,
}

fn num(name: &str) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind: ColumnKind::Numeric,
    }
}

fn bin(name: &str) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind: ColumnKind::Binary,
    }
}

fn cat(name: &str, levels: &[&str]) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind: ColumnKind::Categorical {
            levels: levels.iter().map(|s| s.to_string()).collect(),
        },
    }
}

/// Built-in profiles for the Florida, North Carolina, California, and
/// Michigan datasets.
pub fn builtin_profile(name: &str) -> Result<SchemaProfile, IngestError> {
    let mut notes = BTreeMap::new();
    let mut reference_levels = BTreeMap::new();
    let (columns, response) = match name {
        "florida" => {
            notes.insert("gender".into(), "female=0, male=1".into());
            notes.insert("crime_degree".into(), "misdemeanor=0, felony=1".into());
            (
                vec![
                    num("age"),
                    num("juv_major_priors"),
                    num("juv_minor_priors"),
                    num("priors"),
                    bin("gender"),
                    bin("crime_degree"),
                    bin("recidivism"),
                ],
                "recidivism",
            )
        }
        "north_carolina" => {
            notes.insert(
                "parole_status".into(),
                "unsupervised release=0, supervised parole=1".into(),
            );
            notes.insert("crime_degree".into(), "misdemeanor=0, felony=1".into());
            notes.insert("gender".into(), "female=0, male=1".into());
            notes.insert(
                "crime_type".into(),
                "personal and property crimes, other crimes as reference".into(),
            );
            reference_levels.insert("crime_type".into(), "other".into());
            (
                vec![
                    num("priors"),
                    num("schooling_years"),
                    num("prison_violations"),
                    num("age"),
                    num("prison_time_years"),
                    bin("alcohol_use"),
                    bin("hard_drug_use"),
                    bin("parole_status"),
                    bin("marital_status"),
                    bin("crime_degree"),
                    bin("gender"),
                    cat("crime_type", &["other", "property", "personal"]),
                    bin("recidivism"),
                ],
                "recidivism",
            )
        }
        "california" => {
            notes.insert(
                "crime_category".into(),
                "violator is equal to 0 and original commitment is equal to 1".into(),
            );
            notes.insert(
                "economic_gain".into(),
                "0 if the convicted crimes did not involve economic gain, 1 if they did".into(),
            );
            notes.insert(
                "five_year_arrest_free".into(),
                "1 if the individual reached a five-year arrest-free period".into(),
            );
            notes.insert(
                "theft".into(),
                "0 if the convicted crimes did not involve theft, 1 if they did".into(),
            );
            notes.insert(
                "crime_type".into(),
                "nuisance, personal, and property crimes, other crimes as reference".into(),
            );
            reference_levels.insert("crime_type".into(), "other".into());
            (
                vec![
                    num("age"),
                    num("priors"),
                    num("aliases"),
                    num("prison_time_years"),
                    bin("crime_category"),
                    bin("economic_gain"),
                    bin("five_year_arrest_free"),
                    bin("opiate_use"),
                    bin("theft"),
                    cat("crime_type", &["other", "nuisance", "personal", "property"]),
                    bin("recidivism"),
                ],
                "recidivism",
            )
        }
        "michigan" => {
            notes.insert("gender".into(), "female=0, male=1".into());
            notes.insert(
                "escape_attempt".into(),
                "1 if recorded as attempting escape while incarcerated".into(),
            );
            notes.insert(
                "prison_misconduct".into(),
                "1 if recorded for prison misconduct while incarcerated".into(),
            );
            (
                vec![
                    num("arrests"),
                    num("probations"),
                    num("jailings"),
                    num("juvenile_priors"),
                    num("adult_priors"),
                    bin("gender"),
                    bin("marital_status"),
                    bin("drug_use"),
                    bin("escape_attempt"),
                    bin("prison_misconduct"),
                    bin("recidivism"),
                ],
                "recidivism",
            )
        }
        other => return Err(IngestError::UnknownProfile(other.to_string())),
    };
    Ok(SchemaProfile {
        name: name.to_string(),
        schema: Schema::new(columns, response)?,
        encoding_notes: notes,
        reference_levels,
    })
}

/// Profile file format: JSON with {name, columns: [{name, kind, levels?}],
/// response, reference_levels?}.
pub fn profile_from_json(text: &str) -> Result<SchemaProfile, serde_json::Error> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ProfileFile {
        name: String,
        columns: Vec<ProfileColumn>,
        response: String,
        #[serde(default)]
        reference_levels: BTreeMap<String, String>,
        #[serde(default)]
        encoding_notes: BTreeMap<String, String>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ProfileColumn {
        name: String,
        kind: String,
        #[serde(default)]
        levels: Option<Vec<String>>,
    }
    let file: ProfileFile = serde_json::from_str(text)?;
    let mut columns = Vec::new();
    for c in file.columns {
        let kind = match c.kind.as_str() {
            "numeric" => ColumnKind::Numeric,
            "binary" => ColumnKind::Binary,
            "categorical" => ColumnKind::Categorical {
                levels: c.levels.unwrap_or_default(),
            },
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown column kind '{other}'"
                )))
            }
        };
        columns.push(ColumnSpec { name: c.name, kind });
    }
    let schema = Schema::new(columns, file.response).map_err(serde::de::Error::custom)?;
    Ok(SchemaProfile {
        name: file.name,
        schema,
        encoding_notes: file.encoding_notes,
        reference_levels: file.reference_levels,
    })
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

/// Loads a CSV against a profile. Header order may differ from the schema;
/// rows with missing cells are dropped and counted.
pub fn load_csv(
    path: impl AsRef<Path>,
    profile: &SchemaProfile,
) -> Result<(Dataset, PreprocessReport), IngestError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(IngestError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let schema = &profile.schema;
    let missing: Vec<String> = schema
        .columns
        .iter()
        .map(|c| c.name.clone())
        .filter(|n| !headers.contains(n))
        .collect();
    let extra: Vec<String> = headers
        .iter()
        .filter(|h| schema.column_index(h).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(IngestError::HeaderMismatch { missing, extra });
    }
    // csv field position for each schema column
    let field_of: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| headers.iter().position(|h| *h == c.name).unwrap())
        .collect();

    let mut columns: Vec<Column> = schema
        .columns
        .iter()
        .map(|c| match &c.kind {
            ColumnKind::Numeric => Column::Numeric(Vec::new()),
            ColumnKind::Binary => Column::Binary(Vec::new()),
            ColumnKind::Categorical { .. } => Column::Categorical(Vec::new()),
        })
        .collect();
    let mut dropped = 0usize;
    let mut n_rows = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if (0..schema.columns.len()).any(|i| is_missing(&record[field_of[i]])) {
            dropped += 1;
            continue;
        }
        for (i, spec) in schema.columns.iter().enumerate() {
            let token = record[field_of[i]].trim();
            match (&spec.kind, &mut columns[i]) {
                (ColumnKind::Numeric, Column::Numeric(v)) => {
                    let x: f64 = token.parse().map_err(|_| IngestError::ParseError {
                        row: row_idx,
                        column: spec.name.clone(),
                        token: token.to_string(),
                    })?;
                    v.push(x);
                }
                (ColumnKind::Binary, Column::Binary(v)) => {
                    let b = match token {
                        "0" => 0u8,
                        "1" => 1u8,
                        _ => {
                            return Err(IngestError::ParseError {
                                row: row_idx,
                                column: spec.name.clone(),
                                token: token.to_string(),
                            })
                        }
                    };
                    v.push(b);
                }
                (ColumnKind::Categorical { levels }, Column::Categorical(v)) => {
                    let code = levels.iter().position(|l| l == token).ok_or_else(|| {
                        IngestError::UnknownCategoryLevel {
                            row: row_idx,
                            column: spec.name.clone(),
                            token: token.to_string(),
                        }
                    })?;
                    v.push(code as u32);
                }
                _ => unreachable!(),
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 && dropped > 0 {
        return Err(IngestError::Data(DataError::AllRowsDropped));
    }
    let dataset = Dataset::new(schema.clone(), columns)?;
    let report = PreprocessReport {
        rows_dropped_missing: dropped,
        final_class_counts: dataset.class_counts(),
        ..Default::default()
    };
    Ok((dataset, report))
}

/// Writes a dataset back to CSV in schema column order; categoricals are
/// written as level names. Numerics use the shortest round-trip formatting.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(ds.schema.columns.iter().map(|c| c.name.as_str()))?;
    for r in 0..ds.n_rows {
        let mut record = Vec::with_capacity(ds.schema.columns.len());
        for (spec, col) in ds.schema.columns.iter().zip(&ds.columns) {
            let cell = match (col, &spec.kind) {
                (Column::Numeric(v), _) => format!("{}", v[r]),
                (Column::Binary(v), _) => format!("{}", v[r]),
                (Column::Categorical(v), ColumnKind::Categorical { levels }) => {
                    levels[v[r] as usize].clone()
                }
                _ => unreachable!(),
            };
            record.push(cell);
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
