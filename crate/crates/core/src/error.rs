use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular cavity transfer: empty cavity with zero linewidth driven on resonance")]
    SingularTransfer,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("conditional fidelity undefined: acceptance probability is zero")]
    UndefinedConditional,

    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("atom index {0} out of range")]
    BadIndex(usize),
}
