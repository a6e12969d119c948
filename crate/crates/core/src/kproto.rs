//! K-Prototypes clustering for mixed-type data: squared euclidean distance
//! on numeric columns plus a gamma-weighted mismatch count on binary and
//! categorical columns, alternated Lloyd-style with seeded restarts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Column, ColumnKind, Dataset};
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k={k} exceeds row count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum Gamma {
    Fixed(f64),
    Auto(GammaAuto),
}

/// Serde marker so `"auto"` deserializes alongside plain numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaAuto {
    Auto,
}

impl Gamma {
    pub const AUTO: Gamma = Gamma::Auto(GammaAuto::Auto);
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::AUTO
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KProtoParams {
    #[serde(default)]
    pub gamma: Gamma,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restarts")]
    pub n_restarts: usize,
    pub seed: u64,
}

fn default_max_iter() -> usize {
    100
}

fn default_restarts() -> usize {
    10
}

impl KProtoParams {
    pub fn new(seed: u64) -> Self {
        KProtoParams {
            gamma: Gamma::AUTO,
            max_iter: default_max_iter(),
            n_restarts: default_restarts(),
            seed,
        }
    }
}

/// Cluster representative: means over numeric columns, modes over
/// binary/categorical columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub numeric_means: Vec<f64>,
    pub categorical_modes: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub prototypes: Vec<Prototype>,
    pub assignment: Vec<usize>,
    pub total_cost: f64,
    pub gamma_used: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when numeric columns were not inside [0,1] at fit time.
    #[serde(default)]
    pub unnormalized_warning: bool,
}

/// Feature columns of a dataset flattened row-major, response excluded;
/// binary columns are treated as two-level categoricals.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub n_rows: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub numeric: Vec<f64>,
    pub categorical: Vec<u32>,
    /// Levels per categorical slot (2 for binary columns).
    pub level_counts: Vec<usize>,
}

impl Encoded {
    pub fn from_dataset(ds: &Dataset) -> Encoded {
        let mut numeric_cols: Vec<&[f64]> = Vec::new();
        let mut cat_cols: Vec<(Vec<u32>, usize)> = Vec::new();
        for &i in &ds.schema.feature_indices() {
            match (&ds.schema.columns[i].kind, &ds.columns[i]) {
                (ColumnKind::Numeric, Column::Numeric(v)) => numeric_cols.push(v),
                (ColumnKind::Binary, Column::Binary(v)) => {
                    cat_cols.push((v.iter().map(|&b| b as u32).collect(), 2))
                }
                (ColumnKind::Categorical { levels }, Column::Categorical(v)) => {
                    cat_cols.push((v.clone(), levels.len()))
                }
                _ => unreachable!("dataset validated at construction"),
            }
        }
        let n_rows = ds.n_rows;
        let n_numeric = numeric_cols.len();
        let n_categorical = cat_cols.len();
        let mut numeric = Vec::with_capacity(n_rows * n_numeric);
        let mut categorical = Vec::with_capacity(n_rows * n_categorical);
        for r in 0..n_rows {
            for col in &numeric_cols {
                numeric.push(col[r]);
            }
            for (col, _) in &cat_cols {
                categorical.push(col[r]);
            }
        }
        Encoded {
            n_rows,
            n_numeric,
            n_categorical,
            numeric,
            categorical,
            level_counts: cat_cols.iter().map(|(_, l)| *l).collect(),
        }
    }

    pub fn numeric_row(&self, r: usize) -> &[f64] {
        &self.numeric[r * self.n_numeric..(r + 1) * self.n_numeric]
    }

    pub fn categorical_row(&self, r: usize) -> &[u32] {
        &self.categorical[r * self.n_categorical..(r + 1) * self.n_categorical]
    }

    /// Mean within-column (population) variance of the numeric part, halved:
    /// Huang's heuristic for the categorical mixing weight.
    pub fn auto_gamma(&self) -> f64 {
        if self.n_numeric == 0 || self.n_rows == 0 {
            return 1.0;
        }
        let n = self.n_rows as f64;
        let mut total = 0.0;
        for j in 0..self.n_numeric {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for r in 0..self.n_rows {
                let x = self.numeric[r * self.n_numeric + j];
                sum += x;
                sumsq += x * x;
            }
            let mean = sum / n;
            total += sumsq / n - mean * mean;
        }
        0.5 * total / self.n_numeric as f64
    }

    /// Pairwise observation dissimilarity under the same mixed-type measure.
    pub fn pair_dissimilarity(&self, a: usize, b: usize, gamma: f64) -> f64 {
        let mut d = 0.0;
        let (xa, xb) = (self.numeric_row(a), self.numeric_row(b));
        for j in 0..self.n_numeric {
            let diff = xa[j] - xb[j];
            d += diff * diff;
        }
        let (ca, cb) = (self.categorical_row(a), self.categorical_row(b));
        for j in 0..self.n_categorical {
            if ca[j] != cb[j] {
                d += gamma;
            }
        }
        d
    }

    pub fn numerics_in_unit_interval(&self) -> bool {
        self.numeric.iter().all(|&x| (0.0..=1.0).contains(&x))
    }
}

/// Squared numeric distance to the prototype means plus gamma per
/// categorical mismatch.
pub fn dissimilarity(
    numeric: &[f64],
    categorical: &[u32],
    p: &Prototype,
    gamma: f64,
) -> Result<f64, ClusterError> {
    if numeric.len() != p.numeric_means.len() || categorical.len() != p.categorical_modes.len() {
        return Err(ClusterError::SchemaMismatch(format!(
            "row has {}/{} numeric/categorical values, prototype {}/{}",
            numeric.len(),
            categorical.len(),
            p.numeric_means.len(),
            p.categorical_modes.len()
        )));
    }
    let mut d = 0.0;
    for (x, m) in numeric.iter().zip(&p.numeric_means) {
        let diff = x - m;
        d += diff * diff;
    }
    for (c, m) in categorical.iter().zip(&p.categorical_modes) {
        if c != m {
            d += gamma;
        }
    }
    Ok(d)
}

fn row_prototype(enc: &Encoded, r: usize) -> Prototype {
    Prototype {
        numeric_means: enc.numeric_row(r).to_vec(),
        categorical_modes: enc.categorical_row(r).to_vec(),
    }
}

fn nearest(enc: &Encoded, r: usize, prototypes: &[Prototype], gamma: f64) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, p) in prototypes.iter().enumerate() {
        let d = dissimilarity(enc.numeric_row(r), enc.categorical_row(r), p, gamma)
            .expect("prototype dims fixed by fit");
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn update_prototypes(
    enc: &Encoded,
    assignment: &[usize],
    k: usize,
    prototypes: &mut [Prototype],
) {
    let mut counts = vec![0usize; k];
    let mut means = vec![vec![0.0f64; enc.n_numeric]; k];
    let mut level_hist: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|_| enc.level_counts.iter().map(|&l| vec![0usize; l]).collect())
        .collect();
    for (r, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (j, &x) in enc.numeric_row(r).iter().enumerate() {
            means[c][j] += x;
        }
        for (j, &lv) in enc.categorical_row(r).iter().enumerate() {
            level_hist[c][j][lv as usize] += 1;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue; // repaired before update; keep stale prototype otherwise
        }
        for (mean, &sum) in prototypes[c].numeric_means.iter_mut().zip(&means[c]) {
            *mean = sum / counts[c] as f64;
        }
        for (mode, hist) in prototypes[c].categorical_modes.iter_mut().zip(&level_hist[c]) {
            // mode, ties to the lowest level index
            let mut best = 0usize;
            for (lv, &cnt) in hist.iter().enumerate() {
                if cnt > hist[best] {
                    best = lv;
                }
            }
            *mode = best as u32;
        }
    }
}

pub(crate) struct RestartFit {
    pub prototypes: Vec<Prototype>,
    pub assignment: Vec<usize>,
    pub total_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Only inspected by the monotonicity tests.
    #[allow(dead_code)]
    pub cost_trace: Vec<f64>,
}

/// One seeded Lloyd run: initial prototypes are k distinct rows.
pub(crate) fn lloyd_restart(
    enc: &Encoded,
    k: usize,
    gamma: f64,
    max_iter: usize,
    seed: u64,
) -> RestartFit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = rand::seq::index::sample(&mut rng, enc.n_rows, k);
    let mut prototypes: Vec<Prototype> = init.iter().map(|r| row_prototype(enc, r)).collect();

    let mut assignment = vec![usize::MAX; enc.n_rows];
    let mut cost_trace = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut next: Vec<usize> = (0..enc.n_rows)
            .map(|r| nearest(enc, r, &prototypes, gamma))
            .collect();
        // empty-cluster repair: reseed with the row farthest from its own prototype
        let mut counts = vec![0usize; k];
        for &c in &next {
            counts[c] += 1;
        }
        for empty in 0..k {
            while counts[empty] == 0 {
                let mut far_row = usize::MAX;
                let mut far_d = -1.0;
                for r in 0..enc.n_rows {
                    if counts[next[r]] <= 1 {
                        continue;
                    }
                    let d = dissimilarity(
                        enc.numeric_row(r),
                        enc.categorical_row(r),
                        &prototypes[next[r]],
                        gamma,
                    )
                    .unwrap();
                    if d > far_d {
                        far_d = d;
                        far_row = r;
                    }
                }
                if far_row == usize::MAX {
                    break; // nothing movable (k close to n with duplicates)
                }
                counts[next[far_row]] -= 1;
                next[far_row] = empty;
                counts[empty] += 1;
                prototypes[empty] = row_prototype(enc, far_row);
            }
        }
        iterations += 1;
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
        update_prototypes(enc, &assignment, k, &mut prototypes);
        let cost: f64 = (0..enc.n_rows)
            .map(|r| {
                dissimilarity(
                    enc.numeric_row(r),
                    enc.categorical_row(r),
                    &prototypes[assignment[r]],
                    gamma,
                )
                .unwrap()
            })
            .sum();
        cost_trace.push(cost);
    }
    let total_cost = *cost_trace.last().unwrap_or(&0.0);
    RestartFit {
        prototypes,
        assignment,
        total_cost,
        iterations,
        converged,
        cost_trace,
    }
}

/// Fits K-Prototypes with `n_restarts` independent seeded starts and keeps
/// the lowest-cost model (ties to the earliest restart).
pub fn fit(ds: &Dataset, k: usize, params: &KProtoParams) -> Result<ClusterModel, ClusterError> {
    if ds.n_rows == 0 {
        return Err(ClusterError::EmptyDataset);
    }
    if k == 0 || params.max_iter == 0 || params.n_restarts == 0 {
        return Err(ClusterError::BadParams(
            "k, max_iter, and n_restarts must all be >= 1".into(),
        ));
    }
    if k > ds.n_rows {
        return Err(ClusterError::KTooLarge { k, n: ds.n_rows });
    }
    let enc = Encoded::from_dataset(ds);
    let gamma = match params.gamma {
        Gamma::Fixed(g) if g >= 0.0 => g,
        Gamma::Fixed(g) => {
            return Err(ClusterError::BadParams(format!("gamma {g} must be >= 0")))
        }
        Gamma::Auto(_) => enc.auto_gamma(),
    };
    let mut best: Option<RestartFit> = None;
    for r in 0..params.n_restarts {
        let seed = derive_seed(params.seed, r as u64, 0);
        let fit = lloyd_restart(&enc, k, gamma, params.max_iter, seed);
        let better = match &best {
            None => true,
            Some(b) => fit.total_cost < b.total_cost,
        };
        if better {
            best = Some(fit);
        }
    }
    let best = best.expect("n_restarts >= 1");
    Ok(ClusterModel {
        k,
        prototypes: best.prototypes,
        assignment: best.assignment,
        total_cost: best.total_cost,
        gamma_used: gamma,
        iterations: best.iterations,
        converged: best.converged,
        unnormalized_warning: !enc.numerics_in_unit_interval(),
    })
}

/// Maps every row to its nearest prototype (ties to the lowest cluster index).
pub fn assign(ds: &Dataset, model: &ClusterModel) -> Result<Vec<usize>, ClusterError> {
    let enc = Encoded::from_dataset(ds);
    if enc.n_numeric != model.prototypes[0].numeric_means.len()
        || enc.n_categorical != model.prototypes[0].categorical_modes.len()
    {
        return Err(ClusterError::SchemaMismatch(
            "dataset feature layout does not match model prototypes".into(),
        ));
    }
    Ok((0..enc.n_rows)
        .map(|r| nearest(&enc, r, &model.prototypes, model.gamma_used))
        .collect())
}

/// Per-cluster summary table in the units of the given dataset: mean
/// response first, then numeric means, binary proportions, and per-level
/// proportions for multi-class columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn centroid_table(ds: &Dataset, model: &ClusterModel) -> Result<CentroidTable, ClusterError> {
    if model.assignment.len() != ds.n_rows {
        return Err(ClusterError::SchemaMismatch(format!(
            "assignment covers {} rows, dataset has {}",
            model.assignment.len(),
            ds.n_rows
        )));
    }
    let mut headers = vec![ds.schema.response.clone()];
    for &i in &ds.schema.feature_indices() {
        let spec = &ds.schema.columns[i];
        match &spec.kind {
            ColumnKind::Numeric | ColumnKind::Binary => headers.push(spec.name.clone()),
            ColumnKind::Categorical { levels } => {
                for level in levels {
                    headers.push(format!("{}:{}", spec.name, level));
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(model.k);
    for c in 0..model.k {
        let members: Vec<usize> = (0..ds.n_rows)
            .filter(|&r| model.assignment[r] == c)
            .collect();
        let n = members.len() as f64;
        let mut row = Vec::with_capacity(headers.len());
        let mean_response = members
            .iter()
            .map(|&r| ds.response()[r] as f64)
            .sum::<f64>()
            / n;
        row.push(mean_response);
        for &i in &ds.schema.feature_indices() {
            match (&ds.schema.columns[i].kind, &ds.columns[i]) {
                (ColumnKind::Numeric, Column::Numeric(v)) => {
                    row.push(members.iter().map(|&r| v[r]).sum::<f64>() / n)
                }
                (ColumnKind::Binary, Column::Binary(v)) => {
                    row.push(members.iter().map(|&r| v[r] as f64).sum::<f64>() / n)
                }
                (ColumnKind::Categorical { levels }, Column::Categorical(v)) => {
                    for lv in 0..levels.len() as u32 {
                        row.push(
                            members.iter().filter(|&&r| v[r] == lv).count() as f64 / n,
                        )
                    }
                }
                _ => unreachable!(),
            }
        }
        rows.push(row);
    }
    Ok(CentroidTable { headers, rows })
}
