//! Binomial logistic regression.
//!
//! Treatment-coded design matrices with pairwise interactions, maximum
//! likelihood fitting by IRLS, and Wald inference on the fitted
//! coefficients.

mod design;
mod fit;
mod table;

pub use design::{
    encode_design, Covariates, DesignMatrix, Encoding, Observation, RegressionSpec, Term, INTERACTION_SEP, INTERCEPT,
};
pub use fit::{
    fit_logistic, log_likelihood, logistic, predict_linear, predict_probability, score, wald_p_value, wald_stats,
    Coefficient, FitResult, FitWarning, WaldStat, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE, SEPARATION_BOUND,
};
pub use table::{significance_code, CoefficientRow, CoefficientTable, PValue};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlmError {
    #[error("invalid regression spec: {0}")]
    InvalidSpec(String),
    #[error("row {row}: no value for `{term}`")]
    MissingValueInRow { row: usize, term: String },
    #[error("no value supplied for `{0}`")]
    MissingValue(String),
    #[error("reference level `{level}` of `{factor}` does not occur in the data")]
    UnknownReference { factor: String, level: String },
    #[error("level `{level}` of `{factor}` was not seen when fitting")]
    UnseenLevel { factor: String, level: String },
    #[error("response must be 0 or 1")]
    NonBinaryResponse,
    #[error("design has no rows")]
    Empty,
    #[error("rank-deficient design; dependent columns: {}", .dependent.join(", "))]
    RankDeficiency { dependent: Vec<String> },
    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("coefficient table: {0}")]
    Table(String),
}
