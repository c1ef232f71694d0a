//! Rank-two probability matrices: exact nonnegative factorization,
//! non-redundant chart parameterizations, and likelihood maximization over
//! mixtures of two independence models.
//!
//! The model is the set of `I x J` probability matrices of rank at most
//! two. Every such matrix is a two-component mixture `alpha * c1 r1^T +
//! (1 - alpha) * c2 r2^T` ([`factor`]). Each pair of columns `(j1, j2)`
//! gives a chart with exactly `2I + 2J - 5` parameters ([`charts`]), and
//! the charts together cover the model. [`optimize`] uses them to maximize
//! the log-likelihood of a contingency table.

pub mod charts;
pub mod check;
pub mod cli;
pub mod error;
pub mod factor;
pub mod io;
pub mod matrix;
pub mod optimize;
pub mod random;
pub mod sampling;

pub use charts::{
    chart_dim, chart_forward, chart_inverse, chart_inverse_with_branch, classify, in_domain,
    jacobian, select_charts, ChartId, ChartPoint, ChartSelection, Flags, InverseBranch, PointFlag,
};
pub use error::{Error, Result};
pub use factor::{
    column_combination, extremal_pair, factorize_rank2, mixture_to_matrix, ColumnCombination,
    MixtureRepresentation,
};
pub use matrix::{
    normalize, numerical_rank, validate_probability, ContingencyTable, ProbabilityMatrix, Shape,
};
pub use optimize::{
    grid_oracle, loglikelihood, maximize_over_model, mle_rank1, optimize_chart, project_domain,
    FitResult, FitSource, LogLikelihood, Objective, OptimizerSettings,
};
pub use sampling::{sample_component_path, sample_table, Draw, SampleSpec};
