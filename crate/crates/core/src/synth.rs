//! Seeded mixed-type cluster generator used as the ground-truth oracle for
//! clustering, selection, and regression tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Column, ColumnKind, ColumnSpec, Dataset, Schema};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub k_true: usize,
    pub rows_per_cluster: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub levels_per_categorical: usize,
    /// Distance between numeric cluster centers, in units of the
    /// within-cluster standard deviation (which is 1).
    pub separation: f64,
    /// Probability a categorical cell flips to a uniform random other level.
    pub flip_prob: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.k_true < 1 {
            return Err(SynthError::InvalidSpec("k_true must be >= 1".into()));
        }
        if self.rows_per_cluster < 1 {
            return Err(SynthError::InvalidSpec("rows_per_cluster must be >= 1".into()));
        }
        if self.separation < 0.0 || self.separation.is_nan() {
            return Err(SynthError::InvalidSpec("separation must be >= 0".into()));
        }
        if !(0.0..=0.5).contains(&self.flip_prob) {
            return Err(SynthError::InvalidSpec("flip_prob must be in [0, 0.5]".into()));
        }
        if self.n_categorical > 0 && self.levels_per_categorical < 2 {
            return Err(SynthError::InvalidSpec(
                "levels_per_categorical must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub true_labels: Vec<usize>,
    /// Per-cluster logistic coefficients over numeric features, intercept
    /// first, applied to numeric deviations from the cluster center.
    pub coefficients: Vec<Vec<f64>>,
}

// Keeps unit-variance noise far from zero so max-normalization stays valid.
const NUMERIC_OFFSET: f64 = 8.0;

fn center(spec: &SyntheticSpec, cluster: usize, dim: usize) -> f64 {
    // One hot dimension per cluster (mod k_true); a pair of clusters then
    // differs in two dimensions, so scaling by 1/sqrt(2) makes the euclidean
    // center-to-center distance equal to `separation`.
    let hot = spec.k_true > 1 && dim % spec.k_true == cluster;
    NUMERIC_OFFSET + if hot { spec.separation / std::f64::consts::SQRT_2 } else { 0.0 }
}

fn planted_coefficients(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    (0..spec.k_true)
        .map(|c| {
            let mut coefs = vec![0.0]; // intercept
            coefs.extend((0..spec.n_numeric).map(|j| if (j + c) % 2 == 0 { 2.0 } else { 0.0 }));
            coefs
        })
        .collect()
}

/// Generates `k_true * rows_per_cluster` rows grouped by cluster, with the
/// binary response drawn from a per-cluster logistic model on the numeric
/// deviations. Fully deterministic given the spec seed.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.k_true * spec.rows_per_cluster;
    let coefficients = planted_coefficients(spec);

    let mut numeric: Vec<Vec<f64>> = vec![Vec::with_capacity(n); spec.n_numeric];
    let mut categorical: Vec<Vec<u32>> = vec![Vec::with_capacity(n); spec.n_categorical];
    let mut response: Vec<u8> = Vec::with_capacity(n);
    let mut true_labels = Vec::with_capacity(n);

    for (c, coefs) in coefficients.iter().enumerate() {
        for _ in 0..spec.rows_per_cluster {
            true_labels.push(c);
            let mut deviations = Vec::with_capacity(spec.n_numeric);
            for (j, col) in numeric.iter_mut().enumerate() {
                let noise: f64 = rng.sample(StandardNormal);
                col.push(center(spec, c, j) + noise);
                deviations.push(noise);
            }
            for (m, col) in categorical.iter_mut().enumerate() {
                let levels = spec.levels_per_categorical as u32;
                let modal = ((c + m) % spec.levels_per_categorical) as u32;
                let level = if rng.gen::<f64>() < spec.flip_prob {
                    // uniform over the other levels
                    let shift = rng.gen_range(1..levels);
                    (modal + shift) % levels
                } else {
                    modal
                };
                col.push(level);
            }
            let eta: f64 = coefs[0]
                + deviations
                    .iter()
                    .zip(&coefs[1..])
                    .map(|(d, b)| d * b)
                    .sum::<f64>();
            let p = 1.0 / (1.0 + (-eta).exp());
            response.push(u8::from(rng.gen::<f64>() < p));
        }
    }

    let mut columns_spec = Vec::new();
    let mut columns = Vec::new();
    for (j, v) in numeric.into_iter().enumerate() {
        columns_spec.push(ColumnSpec {
            name: format!("num{j}"),
            kind: ColumnKind::Numeric,
        });
        columns.push(Column::Numeric(v));
    }
    for (m, v) in categorical.into_iter().enumerate() {
        columns_spec.push(ColumnSpec {
            name: format!("cat{m}"),
            kind: ColumnKind::Categorical {
                levels: (0..spec.levels_per_categorical)
                    .map(|l| format!("l{l}"))
                    .collect(),
            },
        });
        columns.push(Column::Categorical(v));
    }
    columns_spec.push(ColumnSpec {
        name: "outcome".into(),
        kind: ColumnKind::Binary,
    });
    columns.push(Column::Binary(response));

    let schema = Schema::new(columns_spec, "outcome")
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let dataset = Dataset::new(schema, columns).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(SyntheticData {
        dataset,
        true_labels,
        coefficients,
    })
}
