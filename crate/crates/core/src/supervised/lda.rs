//! Linear discriminant analysis for two classes: pooled covariance, linear
//! scores, and a prior-adjusted decision threshold.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::supervised::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    /// Classify 1 when the score exceeds this.
    pub threshold: f64,
    pub mean_0: Vec<f64>,
    pub mean_1: Vec<f64>,
}

impl LdaModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum()
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.score(row) > self.threshold)
    }
}

pub fn fit_lda(x: &DesignMatrix) -> Result<LdaModel, ModelError> {
    let d = x.n_cols;
    let idx_0: Vec<usize> = (0..x.n_rows).filter(|&r| x.response[r] == 0).collect();
    let idx_1: Vec<usize> = (0..x.n_rows).filter(|&r| x.response[r] == 1).collect();
    if idx_0.len() < 2 || idx_1.len() < 2 {
        return Err(ModelError::TooFewRows {
            need: 2,
            got: idx_0.len().min(idx_1.len()),
        });
    }
    let mean_of = |idx: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; d];
        for &r in idx {
            for (j, &v) in x.row(r).iter().enumerate() {
                m[j] += v;
            }
        }
        m.iter().map(|v| v / idx.len() as f64).collect()
    };
    let mean_0 = mean_of(&idx_0);
    let mean_1 = mean_of(&idx_1);

    let mut pooled = DMatrix::<f64>::zeros(d, d);
    for (idx, mean) in [(&idx_0, &mean_0), (&idx_1, &mean_1)] {
        for &r in idx.iter() {
            let centered: Vec<f64> = x.row(r).iter().zip(mean).map(|(v, m)| v - m).collect();
            for a in 0..d {
                for b in 0..d {
                    pooled[(a, b)] += centered[a] * centered[b];
                }
            }
        }
    }
    pooled /= (x.n_rows - 2) as f64;
    let inv = pooled
        .try_inverse()
        .ok_or(ModelError::SingularCovariance)?;

    let diff = DVector::from_iterator(d, mean_1.iter().zip(&mean_0).map(|(a, b)| a - b));
    let weights = &inv * diff;
    let midpoint: f64 = (0..d)
        .map(|j| weights[j] * 0.5 * (mean_0[j] + mean_1[j]))
        .sum();
    let prior_shift = (idx_1.len() as f64 / idx_0.len() as f64).ln();
    Ok(LdaModel {
        weights: weights.iter().copied().collect(),
        threshold: midpoint - prior_shift,
        mean_0,
        mean_1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_design(n_per_class: usize, shift: f64, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::new();
        let mut response = Vec::new();
        for class in [0u8, 1u8] {
            for _ in 0..n_per_class {
                let x: f64 = rng.sample::<f64, _>(StandardNormal) + shift * class as f64;
                values.push(x);
                response.push(class);
            }
        }
        DesignMatrix {
            column_names: vec!["x".into()],
            n_rows: 2 * n_per_class,
            n_cols: 1,
            values,
            response,
        }
    }

    #[test]
    fn one_dimensional_closed_form() {
        let dm = gaussian_design(500, 2.0, 1);
        let model = fit_lda(&dm).unwrap();
        // closed form: weight = (m1 - m0) / s^2
        let m0 = dm.mean_for(0);
        let m1 = dm.mean_for(1);
        let s2 = dm.pooled_var();
        assert!((model.weights[0] - (m1 - m0) / s2).abs() < 1e-9);
        // equal priors: boundary at the midpoint of the means
        let boundary = model.threshold / model.weights[0];
        assert!((boundary - 0.5 * (m0 + m1)).abs() < 1e-6);
    }

    impl DesignMatrix {
        fn mean_for(&self, class: u8) -> f64 {
            let idx: Vec<usize> = (0..self.n_rows)
                .filter(|&r| self.response[r] == class)
                .collect();
            idx.iter().map(|&r| self.row(r)[0]).sum::<f64>() / idx.len() as f64
        }

        fn pooled_var(&self) -> f64 {
            let mut ss = 0.0;
            for class in [0u8, 1u8] {
                let m = self.mean_for(class);
                for r in 0..self.n_rows {
                    if self.response[r] == class {
                        ss += (self.row(r)[0] - m).powi(2);
                    }
                }
            }
            ss / (self.n_rows - 2) as f64
        }
    }

    #[test]
    fn no_signal_auc_near_half() {
        use crate::supervised::metrics::auc_roc;
        let dm = gaussian_design(1000, 0.0, 7);
        let model = fit_lda(&dm).unwrap();
        let scores: Vec<f64> = (0..dm.n_rows).map(|r| model.score(dm.row(r))).collect();
        let auc = auc_roc(&scores, &dm.response).unwrap();
        assert!((auc - 0.5).abs() < 0.05, "auc = {auc}");
    }

    #[test]
    fn singular_covariance_rejected() {
        let dm = DesignMatrix {
            column_names: vec!["a".into(), "b".into()],
            n_rows: 8,
            n_cols: 2,
            values: (0..8).flat_map(|i| vec![i as f64, 2.0 * i as f64]).collect(),
            response: vec![0, 0, 0, 0, 1, 1, 1, 1],
        };
        assert!(matches!(
            fit_lda(&dm),
            Err(ModelError::SingularCovariance)
        ));
    }
}
