//! Error taxonomy shared across the crate.
//!
//! Numerical failures are reported, never silently patched: a caller that
//! hits `NearCritical` or `ConfluentRoots` is outside the supported regime
//! and must change its inputs rather than trust a garbage answer.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-invertible jet: order-0 part is zero")]
    NonInvertibleJet,

    #[error("jet order too low: need {need}, have {have}")]
    InsufficientJetOrder { need: usize, have: usize },

    #[error("square root of a jet whose order-0 part is zero or on the branch cut")]
    SqrtBranch,

    #[error("logarithm of a jet whose order-0 part is zero or on the branch cut")]
    LogBranch,

    #[error("confluent roots unsupported")]
    ConfluentRoots,

    #[error("root finding did not converge")]
    RootsDiverged,

    #[error("evaluation point within {0:.2e} of the branch cut or a denominator root")]
    UnstableEvaluation(f64),

    #[error("division by an algebraic function whose order-0 part vanishes identically")]
    ZeroDivision,

    #[error("operands carry different branch points")]
    BranchMismatch,

    #[error("outside the one-cut regime: {0}")]
    OutsideOneCut(String),

    #[error("root of h at distance {dist:.4} from the support (limit {limit}); near-critical field refused")]
    NearCritical { dist: f64, limit: f64 },

    #[error("orthogonal-polynomial recursion lost positivity at degree {0}")]
    StieltjesBreakdown(usize),

    #[error("ill-conditioned solve: {0}")]
    IllConditioned(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code class used by the command-line front end: configuration
    /// errors exit 2, numerical failures exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidField(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }

    /// Stable machine-readable tag for reports.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::NonInvertibleJet => "non_invertible_jet",
            Error::InsufficientJetOrder { .. } => "insufficient_jet_order",
            Error::SqrtBranch => "sqrt_branch",
            Error::LogBranch => "log_branch",
            Error::ConfluentRoots => "confluent_roots",
            Error::RootsDiverged => "roots_diverged",
            Error::UnstableEvaluation(_) => "unstable_evaluation",
            Error::ZeroDivision => "zero_division",
            Error::BranchMismatch => "branch_mismatch",
            Error::OutsideOneCut(_) => "outside_one_cut",
            Error::NearCritical { .. } => "near_critical",
            Error::StieltjesBreakdown(_) => "stieltjes_breakdown",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::QuadratureFailure(_) => "quadrature_failure",
            Error::InvalidField(_) => "invalid_field",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Io(_) => "io",
        }
    }
}
