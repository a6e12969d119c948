//! Cluster-count selection: the McClain-Rao ratio of mean within-cluster to
//! mean between-cluster pairwise dissimilarity, plus the subsample-median
//! scan with an epsilon stopping rule that picks the number of clusters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::kproto::{self, ClusterError, Encoded, KProtoParams};
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("index needs at least 2 clusters")]
    SingleCluster,
    #[error("no within-cluster pairs (all clusters are singletons)")]
    NoWithinPairs,
    #[error("need at least {need} rows, dataset has {got}")]
    InsufficientRows { need: usize, got: usize },
    #[error("invalid selection parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionParams {
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Subsamples per k; the scan medians over these. Must be in [5, 10].
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Rows per subsample; defaults to min(n_rows, 1000).
    #[serde(default)]
    pub sample_size: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub seed: u64,
}

fn default_k_min() -> usize {
    2
}

fn default_k_max() -> usize {
    10
}

fn default_n_samples() -> usize {
    7
}

fn default_epsilon() -> f64 {
    1e-3
}

impl SelectionParams {
    pub fn new(seed: u64) -> Self {
        SelectionParams {
            k_min: default_k_min(),
            k_max: default_k_max(),
            n_samples: default_n_samples(),
            sample_size: None,
            epsilon: default_epsilon(),
            seed,
        }
    }

    fn validate(&self) -> Result<(), SelectionError> {
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(SelectionError::BadParams(
                "need 2 <= k_min <= k_max".into(),
            ));
        }
        if !(5..=10).contains(&self.n_samples) {
            return Err(SelectionError::BadParams(
                "n_samples must be in [5, 10]".into(),
            ));
        }
        if self.epsilon <= 0.0 || self.epsilon.is_nan() {
            return Err(SelectionError::BadParams("epsilon must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub k: usize,
    pub samples: Vec<f64>,
    pub median: f64,
    /// median(k) - median(k-1); absent at k_min.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexTrace {
    pub entries: Vec<TraceEntry>,
    pub chosen_k: usize,
    /// First k where |delta| fell below epsilon, if the scan stopped early.
    pub stop_k: Option<usize>,
}

/// Mean same-cluster pairwise dissimilarity over mean different-cluster
/// pairwise dissimilarity; lower is better. Degenerate all-coincident data
/// (both means zero) returns 1.
pub fn mcclain_rao(
    ds: &Dataset,
    assignment: &[usize],
    gamma: f64,
) -> Result<f64, SelectionError> {
    let enc = Encoded::from_dataset(ds);
    mcclain_rao_encoded(&enc, assignment, gamma)
}

pub(crate) fn mcclain_rao_encoded(
    enc: &Encoded,
    assignment: &[usize],
    gamma: f64,
) -> Result<f64, SelectionError> {
    let n = enc.n_rows;
    assert_eq!(assignment.len(), n, "assignment must cover all rows");
    let distinct = {
        let mut labels: Vec<usize> = assignment.to_vec();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    };
    if distinct < 2 {
        return Err(SelectionError::SingleCluster);
    }
    let mut within_sum = 0.0;
    let mut within_pairs = 0usize;
    let mut between_sum = 0.0;
    let mut between_pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = enc.pair_dissimilarity(i, j, gamma);
            if assignment[i] == assignment[j] {
                within_sum += d;
                within_pairs += 1;
            } else {
                between_sum += d;
                between_pairs += 1;
            }
        }
    }
    if within_pairs == 0 {
        return Err(SelectionError::NoWithinPairs);
    }
    let mean_within = within_sum / within_pairs as f64;
    let mean_between = between_sum / between_pairs as f64;
    if mean_within == 0.0 && mean_between == 0.0 {
        return Ok(1.0);
    }
    Ok(mean_within / mean_between)
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Scans k over [k_min, k_max]: for each k it clusters several seeded
/// subsamples, medians the index, and tracks the change in the median. The
/// scan stops at the first |delta| below epsilon; the chosen k is the one
/// with the most negative delta among those evaluated (ties to smaller k).
pub fn select_k(
    ds: &Dataset,
    sel: &SelectionParams,
    kp: &KProtoParams,
) -> Result<(usize, IndexTrace), SelectionError> {
    sel.validate()?;
    let sample_size = sel.sample_size.unwrap_or_else(|| ds.n_rows.min(1000));
    if sample_size < sel.k_max + 1 {
        return Err(SelectionError::BadParams(format!(
            "sample_size {sample_size} must be at least k_max + 1"
        )));
    }
    if sample_size > ds.n_rows {
        return Err(SelectionError::InsufficientRows {
            need: sample_size,
            got: ds.n_rows,
        });
    }

    let mut entries: Vec<TraceEntry> = Vec::new();
    let mut stop_k = None;
    for k in sel.k_min..=sel.k_max {
        let mut samples = Vec::with_capacity(sel.n_samples);
        for s in 0..sel.n_samples {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(sel.seed, k as u64, s as u64));
            let mut rows = rand::seq::index::sample(&mut rng, ds.n_rows, sample_size).into_vec();
            rows.sort_unstable();
            let sub = ds.subset(&rows);
            let params = KProtoParams {
                seed: derive_seed(kp.seed, k as u64, s as u64),
                ..kp.clone()
            };
            let model = kproto::fit(&sub, k, &params)?;
            let enc = Encoded::from_dataset(&sub);
            samples.push(mcclain_rao_encoded(&enc, &model.assignment, model.gamma_used)?);
        }
        let med = median(&samples);
        let delta = entries.last().map(|prev| med - prev.median);
        entries.push(TraceEntry {
            k,
            samples,
            median: med,
            delta,
        });
        if let Some(d) = delta {
            if d.abs() < sel.epsilon {
                stop_k = Some(k);
                break;
            }
        }
    }

    let chosen_k = entries
        .iter()
        .filter_map(|e| e.delta.map(|d| (e.k, d)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(k, _)| k)
        .unwrap_or(sel.k_min);

    let trace = IndexTrace {
        entries,
        chosen_k,
        stop_k,
    };
    Ok((chosen_k, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnKind, ColumnSpec, Schema};
    use crate::kproto::Gamma;
    use crate::synth::{gen_synthetic, SyntheticSpec};

    fn one_numeric(values: Vec<f64>) -> Dataset {
        let n = values.len();
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
        Dataset::new(
            schema,
            vec![
                Column::Numeric(values),
                Column::Binary(vec![0; n].iter().enumerate().map(|(i, _)| (i % 2) as u8).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hand_enumerated_two_cluster_index() {
        let ds = one_numeric(vec![0.0, 0.1, 1.0, 1.1]);
        let index = mcclain_rao(&ds, &[0, 0, 1, 1], 1.0).unwrap();
        // S_W = (0.01 + 0.01)/2 = 0.01; S_B = (1 + 1.21 + 0.81 + 1)/4 = 1.005
        assert!((index - 0.01 / 1.005).abs() < 1e-12);
    }

    #[test]
    fn coincident_clusters_index_one() {
        let ds = one_numeric(vec![3.0, 3.0, 3.0, 3.0]);
        assert_eq!(mcclain_rao(&ds, &[0, 0, 1, 1], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn singleton_clusters_error() {
        let ds = one_numeric(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            mcclain_rao(&ds, &[0, 1, 2], 1.0),
            Err(SelectionError::NoWithinPairs)
        ));
    }

    #[test]
    fn single_cluster_errors() {
        let ds = one_numeric(vec![1.0, 2.0]);
        assert!(matches!(
            mcclain_rao(&ds, &[0, 0], 1.0),
            Err(SelectionError::SingleCluster)
        ));
    }

    #[test]
    fn invariant_under_relabeling_and_permutation() {
        let ds = one_numeric(vec![0.0, 0.2, 5.0, 5.3, 9.0, 9.4]);
        let a = mcclain_rao(&ds, &[0, 0, 1, 1, 2, 2], 1.0).unwrap();
        let b = mcclain_rao(&ds, &[2, 2, 0, 0, 1, 1], 1.0).unwrap();
        assert_eq!(a, b);
        let perm = [4, 5, 0, 1, 2, 3];
        let permuted = ds.subset(&perm);
        let c = mcclain_rao(&permuted, &[2, 2, 0, 0, 1, 1], 1.0).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    fn fast_params(seed: u64) -> (SelectionParams, KProtoParams) {
        let sel = SelectionParams {
            k_min: 2,
            k_max: 6,
            n_samples: 5,
            sample_size: Some(120),
            epsilon: 1e-3,
            seed,
        };
        let kp = KProtoParams {
            gamma: Gamma::AUTO,
            max_iter: 100,
            n_restarts: 4,
            seed,
        };
        (sel, kp)
    }

    #[test]
    fn recovers_three_planted_clusters() {
        let spec = SyntheticSpec {
            k_true: 3,
            rows_per_cluster: 100,
            n_numeric: 3,
            n_categorical: 2,
            levels_per_categorical: 3,
            separation: 6.0,
            flip_prob: 0.05,
            seed: 21,
        };
        let data = gen_synthetic(&spec).unwrap();
        let normalized = crate::data::normalize_numeric(&data.dataset).unwrap().dataset;
        let (sel, kp) = fast_params(77);
        let (chosen, trace) = select_k(&normalized, &sel, &kp).unwrap();
        assert_eq!(chosen, 3, "trace: {:?}", trace.entries);
    }

    #[test]
    fn terminates_without_structure() {
        let spec = SyntheticSpec {
            k_true: 1,
            rows_per_cluster: 150,
            n_numeric: 2,
            n_categorical: 1,
            levels_per_categorical: 3,
            separation: 0.0,
            flip_prob: 0.5,
            seed: 4,
        };
        let ds = gen_synthetic(&spec).unwrap().dataset;
        let (sel, kp) = fast_params(5);
        let (chosen, trace) = select_k(&ds, &sel, &kp).unwrap();
        assert!((sel.k_min..=sel.k_max).contains(&chosen));
        assert!(!trace.entries.is_empty());
    }

    #[test]
    fn deterministic_trace() {
        let spec = SyntheticSpec {
            k_true: 2,
            rows_per_cluster: 80,
            n_numeric: 2,
            n_categorical: 1,
            levels_per_categorical: 2,
            separation: 4.0,
            flip_prob: 0.1,
            seed: 6,
        };
        let ds = gen_synthetic(&spec).unwrap().dataset;
        let (sel, kp) = fast_params(10);
        let (k1, t1) = select_k(&ds, &sel, &kp).unwrap();
        let (k2, t2) = select_k(&ds, &sel, &kp).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(
            serde_json::to_string(&t1).unwrap(),
            serde_json::to_string(&t2).unwrap()
        );
    }

    #[test]
    fn insufficient_rows_rejected() {
        let ds = one_numeric((0..8).map(|i| i as f64).collect());
        let sel = SelectionParams {
            sample_size: Some(20),
            k_max: 3,
            ..SelectionParams::new(1)
        };
        assert!(matches!(
            select_k(&ds, &sel, &KProtoParams::new(1)),
            Err(SelectionError::InsufficientRows { .. })
        ));
    }
}
