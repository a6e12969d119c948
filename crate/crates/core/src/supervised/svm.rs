//! Linear soft-margin SVM trained by full-batch subgradient descent on the
//! L2-regularized hinge loss, with a backtracking step size so the objective
//! never increases across epochs. Margins double as ranking scores.

use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::supervised::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmParams {
    /// Hinge penalty weight.
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.margin(row) >= 0.0)
    }
}

fn signed(y: u8) -> f64 {
    if y == 1 {
        1.0
    } else {
        -1.0
    }
}

/// 0.5||w||^2 + C * sum hinge; the bias is unregularized.
pub fn objective(x: &DesignMatrix, w: &[f64], b: f64, c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = (0..x.n_rows)
        .map(|r| {
            let m = signed(x.response[r])
                * (b + x.row(r).iter().zip(w).map(|(x, w)| x * w).sum::<f64>());
            (1.0 - m).max(0.0)
        })
        .sum();
    reg + c * hinge
}

fn subgradient(x: &DesignMatrix, w: &[f64], b: f64, c: f64) -> (Vec<f64>, f64) {
    let mut gw = w.to_vec();
    let mut gb = 0.0;
    for r in 0..x.n_rows {
        let row = x.row(r);
        let y = signed(x.response[r]);
        let margin = y * (b + row.iter().zip(w).map(|(x, w)| x * w).sum::<f64>());
        if margin < 1.0 {
            for (g, &xv) in gw.iter_mut().zip(row) {
                *g -= c * y * xv;
            }
            gb -= c * y;
        }
    }
    (gw, gb)
}

pub fn fit_linear_svm(x: &DesignMatrix, params: &SvmParams) -> Result<LinearSvm, ModelError> {
    if x.n_rows == 0 {
        return Err(ModelError::EmptyData);
    }
    let has_both = x.response.contains(&0) && x.response.contains(&1);
    if !has_both {
        return Err(ModelError::SingleClass);
    }
    let mut w = vec![0.0; x.n_cols];
    let mut b = 0.0;
    let mut step = 1.0 / (params.c * x.n_rows as f64).max(1.0);
    let mut obj = objective(x, &w, b, params.c);
    for _ in 0..params.epochs {
        let (gw, gb) = subgradient(x, &w, b, params.c);
        // backtrack until the epoch does not increase the objective
        let mut eta = step;
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(w, g)| w - eta * g).collect();
            let cand_b = b - eta * gb;
            let cand_obj = objective(x, &cand_w, cand_b, params.c);
            if cand_obj <= obj {
                w = cand_w;
                b = cand_b;
                obj = cand_obj;
                step = eta * 1.5;
                break;
            }
            eta *= 0.5;
            if eta < 1e-16 {
                break; // subgradient step cannot improve; keep current point
            }
        }
    }
    Ok(LinearSvm { weights: w, bias: b })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: Vec<Vec<f64>>, y: Vec<u8>) -> DesignMatrix {
        let n_rows = rows.len();
        let n_cols = rows[0].len();
        DesignMatrix {
            column_names: (0..n_cols).map(|i| format!("f{i}")).collect(),
            n_rows,
            n_cols,
            values: rows.into_iter().flatten().collect(),
            response: y,
        }
    }

    fn separable() -> DesignMatrix {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let t = (i % 10) as f64 / 10.0;
            if i < 20 {
                rows.push(vec![t, t + 2.0]);
                y.push(1);
            } else {
                rows.push(vec![t + 2.0, t]);
                y.push(0);
            }
        }
        design(rows, y)
    }

    #[test]
    fn separable_data_fits_perfectly() {
        let dm = separable();
        let svm = fit_linear_svm(&dm, &SvmParams::default()).unwrap();
        let correct = (0..dm.n_rows)
            .filter(|&r| svm.predict(dm.row(r)) == dm.response[r])
            .count();
        assert_eq!(correct, dm.n_rows);
    }

    #[test]
    fn label_flip_reverses_direction() {
        let dm = separable();
        let flipped = DesignMatrix {
            response: dm.response.iter().map(|&y| 1 - y).collect(),
            ..dm.clone()
        };
        let a = fit_linear_svm(&dm, &SvmParams::default()).unwrap();
        let b = fit_linear_svm(&flipped, &SvmParams::default()).unwrap();
        let dot: f64 = a.weights.iter().zip(&b.weights).map(|(x, y)| x * y).sum();
        let na: f64 = a.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cosine = dot / (na * nb);
        assert!((cosine + 1.0).abs() < 0.01, "cosine = {cosine}");
    }

    #[test]
    fn objective_non_increasing() {
        // re-run the optimizer epoch by epoch and recompute the objective
        let dm = separable();
        let params = SvmParams { c: 1.0, epochs: 0 };
        let mut objectives = Vec::new();
        for epochs in 0..30 {
            let svm = fit_linear_svm(&dm, &SvmParams { epochs, ..params }).unwrap();
            objectives.push(objective(&dm, &svm.weights, svm.bias, params.c));
        }
        for w in objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective rose: {objectives:?}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let dm = design(vec![vec![1.0], vec![2.0]], vec![1, 1]);
        assert!(matches!(
            fit_linear_svm(&dm, &SvmParams::default()),
            Err(ModelError::SingleClass)
        ));
    }
}
