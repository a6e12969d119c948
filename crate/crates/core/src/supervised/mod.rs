//! Supervised stage: per-cluster explanatory logistic regression with Wald
//! significance stars, the four-classifier comparison (LR, LDA, RF, linear
//! SVM), and the repeated-split evaluation protocol.

pub mod crossval;
pub mod forest;
pub mod lda;
pub mod logistic;
pub mod metrics;
pub mod svm;

use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum ModelError {
    #[error("information matrix is rank deficient")]
    RankDeficient,
    #[error("pooled covariance is singular")]
    SingularCovariance,
    #[error("both response classes must be present")]
    SingleClass,
    #[error("need more than {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("p-value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("empty design matrix")]
    EmptyData,
}
