//! Two-sample Hotelling T-squared tests of multivariate mean equality, with
//! the pairwise cluster distinctness matrix built on top of them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::data::{Column, ColumnKind, Dataset};

#[derive(Debug, Error, Clone)]
pub enum TestError {
    #[error("each group needs at least 2 rows (got {0} and {1})")]
    TooFewRows(usize, usize),
    #[error("too many features: {p} features leave {df2} error degrees of freedom")]
    TooManyFeatures { p: usize, df2: i64 },
    #[error("pooled covariance is singular")]
    SingularCovariance,
    #[error("no features left after dropping zero-variance columns")]
    NoTestableFeatures,
    #[error("groups have different feature counts")]
    DimensionMismatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HotellingResult {
    pub t2: f64,
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
    pub reject_at_90: bool,
    /// Features excluded because their pooled variance was zero.
    pub dropped_features: Vec<String>,
}

fn column_stats(rows: &[&[f64]], j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let ss = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Upper tail of the F distribution via the regularized incomplete beta
/// function.
fn f_upper_tail(f: f64, df1: f64, df2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))
}

/// Tests equality of the mean vectors of two groups of numeric rows.
/// Zero-pooled-variance features are dropped (and reported) before the
/// pooled covariance is formed; the statistic is converted to an F value
/// for the p-value.
pub fn hotelling(
    feature_names: &[String],
    group_i: &[&[f64]],
    group_j: &[&[f64]],
) -> Result<HotellingResult, TestError> {
    let (ni, nj) = (group_i.len(), group_j.len());
    if ni < 2 || nj < 2 {
        return Err(TestError::TooFewRows(ni, nj));
    }
    let d = feature_names.len();
    if group_i.iter().chain(group_j).any(|r| r.len() != d) {
        return Err(TestError::DimensionMismatch);
    }

    let (nif, njf) = (ni as f64, nj as f64);
    let mut kept = Vec::new();
    let mut dropped_features = Vec::new();
    let mut means_i = Vec::new();
    let mut means_j = Vec::new();
    for (j, name) in feature_names.iter().enumerate() {
        let (mi, vi) = column_stats(group_i, j);
        let (mj, vj) = column_stats(group_j, j);
        let pooled_var = ((nif - 1.0) * vi + (njf - 1.0) * vj) / (nif + njf - 2.0);
        if pooled_var == 0.0 {
            dropped_features.push(name.clone());
        } else {
            kept.push(j);
            means_i.push(mi);
            means_j.push(mj);
        }
    }
    let p = kept.len();
    if p == 0 {
        return Err(TestError::NoTestableFeatures);
    }
    let df2 = ni as i64 + nj as i64 - p as i64 - 1;
    if df2 < 1 {
        return Err(TestError::TooManyFeatures { p, df2 });
    }

    // pooled covariance over the kept features
    let mut pooled = DMatrix::<f64>::zeros(p, p);
    for (rows, means) in [(group_i, &means_i), (group_j, &means_j)] {
        for row in rows {
            let centered: Vec<f64> = kept.iter().zip(means).map(|(&j, m)| row[j] - m).collect();
            for a in 0..p {
                for b in 0..p {
                    pooled[(a, b)] += centered[a] * centered[b];
                }
            }
        }
    }
    pooled /= nif + njf - 2.0;

    let inv = pooled
        .clone()
        .try_inverse()
        .ok_or(TestError::SingularCovariance)?;
    let diff = DVector::from_iterator(p, means_i.iter().zip(&means_j).map(|(a, b)| a - b));
    let t2 = (nif * njf / (nif + njf)) * (diff.transpose() * &inv * &diff)[(0, 0)];
    let t2 = t2.max(0.0);
    let df2f = df2 as f64;
    let f_stat = t2 * df2f / (p as f64 * (nif + njf - 2.0));
    let p_value = f_upper_tail(f_stat, p as f64, df2f);
    Ok(HotellingResult {
        t2,
        f_stat,
        df1: p,
        df2: df2 as usize,
        p_value,
        reject_at_90: p_value < 0.10,
        dropped_features,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairOutcome {
    Tested(HotellingResult),
    Untestable { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCell {
    pub cluster_i: usize,
    pub cluster_j: usize,
    pub n_i: usize,
    pub n_j: usize,
    pub outcome: PairOutcome,
}

/// Upper-triangle matrix of pairwise tests over the numeric and binary
/// columns (binary treated as 0/1 numeric). Untestable pairs carry the
/// blocking error instead of being omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub k: usize,
    pub feature_names: Vec<String>,
    pub cells: Vec<PairCell>,
}

impl PairwiseMatrix {
    pub fn all_reject_at_90(&self) -> bool {
        self.cells.iter().all(|c| match &c.outcome {
            PairOutcome::Tested(r) => r.reject_at_90,
            PairOutcome::Untestable { .. } => false,
        })
    }
}

pub fn pairwise_matrix(ds: &Dataset, assignment: &[usize]) -> PairwiseMatrix {
    assert_eq!(assignment.len(), ds.n_rows);
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut feature_names = Vec::new();
    let mut feature_cols: Vec<Vec<f64>> = Vec::new();
    for &i in &ds.schema.feature_indices() {
        match (&ds.schema.columns[i].kind, &ds.columns[i]) {
            (ColumnKind::Numeric, Column::Numeric(v)) => {
                feature_names.push(ds.schema.columns[i].name.clone());
                feature_cols.push(v.clone());
            }
            (ColumnKind::Binary, Column::Binary(v)) => {
                feature_names.push(ds.schema.columns[i].name.clone());
                feature_cols.push(v.iter().map(|&b| b as f64).collect());
            }
            _ => {} // multi-class categoricals have no mean; excluded
        }
    }
    let d = feature_names.len();
    let row_data: Vec<Vec<f64>> = (0..ds.n_rows)
        .map(|r| feature_cols.iter().map(|c| c[r]).collect())
        .collect();

    let mut cells = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let gi: Vec<&[f64]> = (0..ds.n_rows)
                .filter(|&r| assignment[r] == i)
                .map(|r| &row_data[r][..d])
                .collect();
            let gj: Vec<&[f64]> = (0..ds.n_rows)
                .filter(|&r| assignment[r] == j)
                .map(|r| &row_data[r][..d])
                .collect();
            let (n_i, n_j) = (gi.len(), gj.len());
            let outcome = match hotelling(&feature_names, &gi, &gj) {
                Ok(result) => PairOutcome::Tested(result),
                Err(e) => PairOutcome::Untestable {
                    reason: e.to_string(),
                },
            };
            cells.push(PairCell {
                cluster_i: i,
                cluster_j: j,
                n_i,
                n_j,
                outcome,
            });
        }
    }
    PairwiseMatrix {
        k,
        feature_names,
        cells,
    }
}
