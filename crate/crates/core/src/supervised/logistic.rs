//! Maximum-likelihood logistic regression by iteratively reweighted least
//! squares, with Wald standard errors and significance stars.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::data::{one_hot, DesignMatrix, Dataset};
use crate::supervised::ModelError;

const MAX_ITER: usize = 50;
const TOL: f64 = 1e-8;
const SEPARATION_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticFit {
    /// "(intercept)" first, then the design columns.
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub stars: Vec<String>,
    pub converged: bool,
    /// Fitted probabilities hit 0/1 for every row (weights diverge).
    pub separation: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Two-sided standard normal tail probability.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Significance stars: *** p<0.001, ** p<0.05, * p<0.1 (strict inequalities).
pub fn stars(p: f64) -> Result<&'static str, ModelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ModelError::OutOfRange(p));
    }
    Ok(if p < 0.001 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    })
}

/// Log-likelihood gradient at `beta` (intercept-augmented design).
pub fn log_likelihood_gradient(x: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    let d = x.n_cols + 1;
    assert_eq!(beta.len(), d);
    let mut grad = vec![0.0; d];
    for r in 0..x.n_rows {
        let row = x.row(r);
        let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
        let resid = x.response[r] as f64 - sigmoid(eta);
        grad[0] += resid;
        for (j, &v) in row.iter().enumerate() {
            grad[j + 1] += v * resid;
        }
    }
    grad
}

pub fn log_likelihood(x: &DesignMatrix, beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for r in 0..x.n_rows {
        let row = x.row(r);
        let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
        let y = x.response[r] as f64;
        // y*eta - log(1+e^eta), stable for large |eta|
        ll += y * eta - if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
    }
    ll
}

pub fn fit_logistic(x: &DesignMatrix) -> Result<LogisticFit, ModelError> {
    let n = x.n_rows;
    let d = x.n_cols + 1; // intercept
    if n == 0 {
        return Err(ModelError::EmptyData);
    }
    if n <= x.n_cols + 1 {
        return Err(ModelError::TooFewRows {
            need: x.n_cols + 1,
            got: n,
        });
    }
    let n_pos = x.response.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(ModelError::SingleClass);
    }

    let design = {
        let mut m = DMatrix::<f64>::zeros(n, d);
        for r in 0..n {
            m[(r, 0)] = 1.0;
            for (j, &v) in x.row(r).iter().enumerate() {
                m[(r, j + 1)] = v;
            }
        }
        m
    };
    let y = DVector::from_iterator(n, x.response.iter().map(|&v| v as f64));

    let mut beta = DVector::<f64>::zeros(d);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut info = DMatrix::<f64>::zeros(d, d);
    for _ in 0..MAX_ITER {
        iterations += 1;
        let eta = &design * &beta;
        let probs: DVector<f64> = eta.map(sigmoid);
        // X' W X and X' (y - p)
        let weights: DVector<f64> = probs.map(|p| p * (1.0 - p));
        let mut weighted = design.clone();
        for r in 0..n {
            weighted.row_mut(r).scale_mut(weights[r]);
        }
        info = design.transpose() * &weighted;
        let grad = design.transpose() * (&y - &probs);
        let step = match info.clone().cholesky() {
            Some(chol) => chol.solve(&grad),
            None => return Err(ModelError::RankDeficient),
        };
        beta += &step;

        let new_probs: DVector<f64> = (&design * &beta).map(sigmoid);
        separation = (0..n).all(|r| {
            let p = new_probs[r];
            if x.response[r] == 1 {
                p > 1.0 - SEPARATION_EPS
            } else {
                p < SEPARATION_EPS
            }
        });
        if separation {
            break;
        }
        if step.amax() < TOL {
            converged = true;
            break;
        }
    }

    // Wald standard errors from the inverse observed information
    let beta_slice: Vec<f64> = beta.iter().copied().collect();
    let (std_errors, z_values, p_values, star_strings) = match info.clone().try_inverse() {
        Some(inv) if !separation => {
            let se: Vec<f64> = (0..d).map(|j| inv[(j, j)].max(0.0).sqrt()).collect();
            let z: Vec<f64> = beta_slice
                .iter()
                .zip(&se)
                .map(|(b, s)| if *s > 0.0 { b / s } else { f64::NAN })
                .collect();
            let p: Vec<f64> = z
                .iter()
                .map(|&z| if z.is_nan() { f64::NAN } else { normal_two_sided_p(z) })
                .collect();
            let s: Vec<String> = p
                .iter()
                .map(|&p| {
                    if p.is_nan() {
                        String::new()
                    } else {
                        stars(p).map(str::to_string).unwrap_or_default()
                    }
                })
                .collect();
            (se, z, p, s)
        }
        _ => {
            // separation or singular information: inference undefined
            let nan = vec![f64::NAN; d];
            (nan.clone(), nan.clone(), nan, vec![String::new(); d])
        }
    };

    let mut column_names = vec!["(intercept)".to_string()];
    column_names.extend(x.column_names.iter().cloned());
    Ok(LogisticFit {
        column_names,
        log_likelihood: log_likelihood(x, &beta_slice),
        coefficients: beta_slice,
        std_errors,
        z_values,
        p_values,
        stars: star_strings,
        converged,
        separation,
        iterations,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClusterFitOutcome {
    Fit(LogisticFit),
    Failed { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSignificance {
    pub cluster: usize,
    pub n_rows: usize,
    pub outcome: ClusterFitOutcome,
}

/// Clusters x (intercept + features) star table, one logistic fit per
/// cluster on that cluster's rows only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceTable {
    /// "(intercept)" first, then design columns.
    pub feature_names: Vec<String>,
    pub clusters: Vec<ClusterSignificance>,
}

impl SignificanceTable {
    /// Star strings per cluster; failed clusters render "n/a".
    pub fn star_rows(&self) -> Vec<Vec<String>> {
        self.clusters
            .iter()
            .map(|c| match &c.outcome {
                ClusterFitOutcome::Fit(fit) => fit.stars.clone(),
                ClusterFitOutcome::Failed { .. } => {
                    vec!["n/a".to_string(); self.feature_names.len()]
                }
            })
            .collect()
    }
}

pub fn per_cluster_significance(
    ds: &Dataset,
    assignment: &[usize],
    reference_levels: &std::collections::BTreeMap<String, String>,
) -> Result<SignificanceTable, crate::data::DataError> {
    assert_eq!(assignment.len(), ds.n_rows);
    let design = one_hot(ds, reference_levels)?;
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut feature_names = vec!["(intercept)".to_string()];
    feature_names.extend(design.column_names.iter().cloned());
    let mut clusters = Vec::with_capacity(k);
    for c in 0..k {
        let rows: Vec<usize> = (0..ds.n_rows).filter(|&r| assignment[r] == c).collect();
        let sub = design.subset(&rows);
        let outcome = match fit_logistic(&sub) {
            Ok(fit) => ClusterFitOutcome::Fit(fit),
            Err(e) => ClusterFitOutcome::Failed {
                reason: e.to_string(),
            },
        };
        clusters.push(ClusterSignificance {
            cluster: c,
            n_rows: rows.len(),
            outcome,
        });
    }
    Ok(SignificanceTable {
        feature_names,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn design(rows: Vec<Vec<f64>>, y: Vec<u8>, names: Vec<&str>) -> DesignMatrix {
        let n_rows = rows.len();
        let n_cols = names.len();
        DesignMatrix {
            column_names: names.into_iter().map(str::to_string).collect(),
            n_rows,
            n_cols,
            values: rows.into_iter().flatten().collect(),
            response: y,
        }
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0005).unwrap(), "***");
        assert_eq!(stars(0.03).unwrap(), "**");
        assert_eq!(stars(0.07).unwrap(), "*");
        assert_eq!(stars(0.5).unwrap(), "");
        // boundaries are strict
        assert_eq!(stars(0.001).unwrap(), "**");
        assert_eq!(stars(0.05).unwrap(), "*");
        assert_eq!(stars(0.1).unwrap(), "");
        assert!(stars(1.5).is_err());
    }

    #[test]
    fn contingency_table_log_odds_ratio() {
        // 2x2 counts (a,b;c,d) = (30,10;20,40): slope = log(30*40/(10*20))
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (x, label, count) in [(1.0, 1u8, 30), (1.0, 0u8, 10), (0.0, 1, 20), (0.0, 0, 40)] {
            for _ in 0..count {
                rows.push(vec![x]);
                y.push(label);
            }
        }
        let fit = fit_logistic(&design(rows, y, vec!["x"])).unwrap();
        assert!(fit.converged);
        let expected = (30.0_f64 * 40.0 / (10.0 * 20.0)).ln();
        assert!((fit.coefficients[1] - expected).abs() < 1e-6);
        // intercept is the log odds of the x=0 margin
        assert!((fit.coefficients[0] - (20.0_f64 / 40.0).ln()).abs() < 1e-6);
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let x = (i as f64) / 200.0 - 0.5;
            rows.push(vec![x, (i % 3) as f64]);
            y.push(u8::from(i % 5 < 2));
        }
        let dm = design(rows, y, vec!["a", "b"]);
        let fit = fit_logistic(&dm).unwrap();
        assert!(fit.converged);
        let grad = log_likelihood_gradient(&dm, &fit.coefficients);
        for g in grad {
            assert!(g.abs() < 1e-6, "gradient component {g}");
        }
    }

    #[test]
    fn separation_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let fit = fit_logistic(&design(rows, y, vec!["x"])).unwrap();
        assert!(fit.separation);
        assert!(!fit.converged);
    }

    #[test]
    fn single_class_errors() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let fit = fit_logistic(&design(rows, vec![1; 10], vec!["x"]));
        assert!(matches!(fit, Err(ModelError::SingleClass)));
    }

    #[test]
    fn rank_deficient_duplicate_column() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let fit = fit_logistic(&design(rows, y, vec!["x", "x2"]));
        assert!(matches!(fit, Err(ModelError::RankDeficient)));
    }

    #[test]
    fn balanced_symmetric_predictor_gets_zero_coefficients() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }])
            .collect();
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let fit = fit_logistic(&design(rows, y, vec!["x"])).unwrap();
        assert!(fit.coefficients[1].abs() < 0.05);
        assert!(fit.coefficients[0].abs() < 0.05);
    }

    #[test]
    fn per_cluster_table_matches_pooled_for_single_cluster() {
        use crate::data::{Column, ColumnKind, ColumnSpec, Dataset, Schema};
        let schema = Schema::new(
            vec![
                ColumnSpec {
                    name: "x".into(),
                    kind: ColumnKind::Numeric,
                },
                ColumnSpec {
                    name: "y".into(),
                    kind: ColumnKind::Binary,
                },
            ],
            "y",
        )
        .unwrap();
        let n = 120;
        let ds = Dataset::new(
            schema,
            vec![
                Column::Numeric((0..n).map(|i| (i as f64) / n as f64).collect()),
                Column::Binary((0..n).map(|i| u8::from((i * 7) % 10 < 4)).collect()),
            ],
        )
        .unwrap();
        let table =
            per_cluster_significance(&ds, &vec![0; n], &BTreeMap::new()).unwrap();
        assert_eq!(table.clusters.len(), 1);
        let pooled = fit_logistic(&one_hot(&ds, &BTreeMap::new()).unwrap()).unwrap();
        match &table.clusters[0].outcome {
            ClusterFitOutcome::Fit(f) => assert_eq!(f.stars, pooled.stars),
            _ => panic!("expected a fit"),
        }
    }

    #[test]
    fn constant_feature_cluster_marked_na() {
        use crate::data::{Column, ColumnKind, ColumnSpec, Dataset, Schema};
        let schema = Schema::new(
            vec![
                ColumnSpec {
                    name: "x".into(),
                    kind: ColumnKind::Numeric,
                },
                ColumnSpec {
                    name: "y".into(),
                    kind: ColumnKind::Binary,
                },
            ],
            "y",
        )
        .unwrap();
        let ds = Dataset::new(
            schema,
            vec![
                Column::Numeric(vec![1.0; 30]),
                Column::Binary((0..30).map(|i| (i % 2) as u8).collect()),
            ],
        )
        .unwrap();
        let table =
            per_cluster_significance(&ds, &vec![0; 30], &BTreeMap::new()).unwrap();
        let rows = table.star_rows();
        assert_eq!(rows[0], vec!["n/a".to_string(); 2]);
    }
}
