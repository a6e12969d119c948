//! Ranking and agreement metrics: AUC-ROC via the rank (Mann-Whitney)
//! formulation and the adjusted Rand index for partition comparison.

use crate::supervised::ModelError;

/// Probability a random positive outranks a random negative, ties counted
/// half. Computed from average ranks.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64, ModelError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ModelError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based average rank over the tie group [i, j]
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

pub fn accuracy(predictions: &[u8], labels: &[u8]) -> f64 {
    assert_eq!(predictions.len(), labels.len());
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    correct as f64 / labels.len() as f64
}

/// Chance-corrected agreement between two partitions of the same rows.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut contingency = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        contingency[a[i]][b[i]] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = contingency
        .iter()
        .flatten()
        .map(|&c| choose2(c))
        .sum();
    let sum_rows: f64 = contingency
        .iter()
        .map(|row| choose2(row.iter().sum()))
        .sum();
    let sum_cols: f64 = (0..kb)
        .map(|j| choose2(contingency.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n as u64);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-15 {
        return 1.0; // both partitions trivial
    }
    (sum_cells - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force pair enumeration used as the independent oracle.
    pub(crate) fn auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            if yi != 1 {
                continue;
            }
            for (j, &yj) in labels.iter().enumerate() {
                if yj != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    concordant += 1.0;
                } else if scores[i] == scores[j] {
                    concordant += 0.5;
                }
            }
        }
        concordant / pairs
    }

    #[test]
    fn perfect_ranking_is_one() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [0, 0, 1, 1];
        assert_eq!(auc_roc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn all_ties_is_half() {
        let scores = [0.5; 6];
        let labels = [0, 1, 0, 1, 0, 1];
        assert_eq!(auc_roc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn hand_enumerated_example() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0, 0, 1, 1];
        assert_eq!(auc_roc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn matches_pair_enumeration() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let n = rng.gen_range(4..120);
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..20) as f64) / 10.0).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let fast = auc_roc(&scores, &labels).unwrap();
            let slow = auc_pairs(&scores, &labels);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn monotone_transform_invariant() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.2];
        let labels = [0, 1, 1, 1, 0];
        let transformed: Vec<f64> = scores.iter().map(|s: &f64| (s * 3.0).exp()).collect();
        assert_eq!(
            auc_roc(&scores, &labels).unwrap(),
            auc_roc(&transformed, &labels).unwrap()
        );
    }

    #[test]
    fn single_class_errors() {
        assert!(auc_roc(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn ari_perfect_and_relabelled() {
        let a = [0, 0, 1, 1, 2, 2];
        let b = [2, 2, 0, 0, 1, 1];
        assert!((adjusted_rand_index(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ari_disagreement_is_low() {
        let a = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let b = [0, 1, 2, 0, 1, 2, 0, 1, 2];
        assert!(adjusted_rand_index(&a, &b) < 0.1);
    }
}
