//! Dependence between forecast and actual outdoor temperature.
//!
//! Marginals are empirical; the joint structure is one of five bivariate
//! copula families fitted by Kendall's-tau inversion and chosen by BIC. The
//! conditional distribution of the actual temperature given a forecast is
//! sampled by inverting `dC(u, v)/du` in `v`.

mod document;
mod family;
mod fit;
mod kendall;
mod marginal;

pub use family::{frank_tau, frank_theta_from_tau, Copula, CopulaFamily};
pub use fit::{
    bic, fit_copula, fit_paired, log_likelihood, select_family, student_t_nu_grid, FamilyOutcome, FamilyScore,
    FittedCopula,
};
pub use kendall::kendall_tau;
pub use marginal::{pseudo_observations, EmpiricalMarginal, MIN_SAMPLES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CopulaError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("input contains non-finite or unsorted values")]
    NonFiniteInput,
    #[error("rank correlation undefined: all pairs tie in one coordinate")]
    DegenerateInput,
    #[error("point ({u}, {v}) is not strictly inside the unit square")]
    BoundaryInput { u: f64, v: f64 },
    #[error("Kendall's tau {tau} is outside the domain of the {family} copula")]
    TauOutOfDomain { family: CopulaFamily, tau: f64 },
    #[error("invalid copula parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    NumericFailure(String),
    #[error("no copula family could be fitted")]
    NoFeasibleFamily,
    #[error("model has no marginals attached")]
    MissingMarginals,
    #[error("copula document: {0}")]
    Document(String),
}
