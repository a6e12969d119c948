//! Repeated-split classifier evaluation: each repetition excises a random
//! 10% of rows, splits the remainder 80:20, fits, and scores accuracy and
//! AUC-ROC on the held-out 20%. The caller undersamples once beforehand.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{one_hot, DataError, Dataset, DesignMatrix};
use crate::seeding::derive_seed;
use crate::supervised::forest::{fit_rf, RandomForest, RfParams};
use crate::supervised::lda::{fit_lda, LdaModel};
use crate::supervised::logistic::fit_logistic;
use crate::supervised::metrics::{accuracy, auc_roc};
use crate::supervised::svm::{fit_linear_svm, LinearSvm, SvmParams};
use crate::supervised::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lr,
    Lda,
    Rf,
    Svm,
}

impl ClassifierKind {
    pub fn label(&self) -> &'static str {
        match self {
            ClassifierKind::Lr => "LR",
            ClassifierKind::Lda => "LDA",
            ClassifierKind::Rf => "RF",
            ClassifierKind::Svm => "SVM",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    /// Features per split for RF; defaults to round(sqrt(d)).
    #[serde(default)]
    pub mtry: Option<usize>,
    #[serde(default = "default_min_split")]
    pub min_split: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    /// SVM hinge penalty.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_trees() -> usize {
    100
}

fn default_min_split() -> usize {
    2
}

fn default_c() -> f64 {
    1.0
}

fn default_epochs() -> usize {
    50
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            kind,
            n_trees: default_n_trees(),
            mtry: None,
            min_split: default_min_split(),
            max_depth: None,
            c: default_c(),
            epochs: default_epochs(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepMetrics {
    pub accuracy: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_rep: Vec<RepMetrics>,
    pub mean_accuracy: f64,
    pub mean_auc: f64,
    pub n_reps: usize,
    /// Repetitions dropped because a fold lacked both classes or a fit failed.
    pub skipped_reps: usize,
}

enum Fitted {
    Lr(Vec<f64>),
    Lda(LdaModel),
    Rf(RandomForest),
    Svm(LinearSvm),
}

impl Fitted {
    fn score(&self, row: &[f64]) -> f64 {
        match self {
            Fitted::Lr(beta) => {
                let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
                1.0 / (1.0 + (-eta).exp())
            }
            Fitted::Lda(m) => m.score(row),
            Fitted::Rf(m) => m.predict_proba(row),
            Fitted::Svm(m) => m.margin(row),
        }
    }

    fn predict(&self, row: &[f64]) -> u8 {
        match self {
            Fitted::Lr(_) => u8::from(self.score(row) >= 0.5),
            Fitted::Lda(m) => m.predict(row),
            Fitted::Rf(m) => m.predict(row),
            Fitted::Svm(m) => m.predict(row),
        }
    }
}

fn fit_spec(spec: &ClassifierSpec, train: &DesignMatrix, rep: usize) -> Result<Fitted, ModelError> {
    match spec.kind {
        ClassifierKind::Lr => fit_logistic(train).map(|f| Fitted::Lr(f.coefficients)),
        ClassifierKind::Lda => fit_lda(train).map(Fitted::Lda),
        ClassifierKind::Rf => {
            let params = RfParams {
                n_trees: spec.n_trees,
                mtry: spec.mtry,
                min_split: spec.min_split,
                max_depth: spec.max_depth,
                seed: derive_seed(spec.seed, rep as u64, 2),
            };
            fit_rf(train, &params).map(Fitted::Rf)
        }
        ClassifierKind::Svm => {
            let params = SvmParams {
                c: spec.c,
                epochs: spec.epochs,
            };
            fit_linear_svm(train, &params).map(Fitted::Svm)
        }
    }
}

/// Runs `n_reps` seeded repetitions of excise-then-split evaluation on an
/// already-undersampled dataset.
pub fn crossval(
    ds: &Dataset,
    spec: &ClassifierSpec,
    n_reps: usize,
    seed: u64,
    reference_levels: &BTreeMap<String, String>,
) -> Result<EvalResult, DataError> {
    let design = one_hot(ds, reference_levels)?;
    Ok(crossval_design(&design, spec, n_reps, seed))
}

pub fn crossval_design(
    design: &DesignMatrix,
    spec: &ClassifierSpec,
    n_reps: usize,
    seed: u64,
) -> EvalResult {
    let n = design.n_rows;
    let mut per_rep = Vec::new();
    let mut skipped = 0usize;
    for rep in 0..n_reps {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, rep as u64, 0));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let n_excised = n / 10;
        let remainder = &order[n_excised..];
        let n_train = (remainder.len() as f64 * 0.8).floor() as usize;
        let train_rows = &remainder[..n_train];
        let test_rows = &remainder[n_train..];
        let train = design.subset(train_rows);
        let test = design.subset(test_rows);
        let test_has_both =
            test.response.contains(&0) && test.response.contains(&1);
        if !test_has_both || test.n_rows == 0 {
            skipped += 1;
            continue;
        }
        let model = match fit_spec(spec, &train, rep) {
            Ok(m) => m,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let scores: Vec<f64> = (0..test.n_rows).map(|r| model.score(test.row(r))).collect();
        let preds: Vec<u8> = (0..test.n_rows).map(|r| model.predict(test.row(r))).collect();
        let auc = match auc_roc(&scores, &test.response) {
            Ok(a) => a,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        per_rep.push(RepMetrics {
            accuracy: accuracy(&preds, &test.response),
            auc,
        });
    }
    let n_done = per_rep.len();
    let (mean_accuracy, mean_auc) = if n_done > 0 {
        (
            per_rep.iter().map(|r| r.accuracy).sum::<f64>() / n_done as f64,
            per_rep.iter().map(|r| r.auc).sum::<f64>() / n_done as f64,
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    EvalResult {
        per_rep,
        mean_accuracy,
        mean_auc,
        n_reps: n_done,
        skipped_reps: skipped,
    }
}
