use thiserror::Error;

/// Errors raised by the model, integrator and planners.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("agent strength {value} outside model domain [0, {a0}]")]
    OutOfDomain { value: f64, a0: f64 },

    #[error("allocation has {found} entries, scenario needs {expected}")]
    AllocationArity { expected: usize, found: usize },

    #[error("allocation is not on the simplex: {reason}")]
    NotOnSimplex { reason: String },

    #[error("agent A{0} does not exist")]
    UnknownAgent(usize),

    #[error("agent A{0} is already eliminated")]
    AlreadyEliminated(usize),

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("Blue is annihilated at exposure {root} before reaching {target}")]
    BlueAnnihilated { root: f64, target: f64 },

    #[error("quadrature failed to converge (estimated error {estimate})")]
    QuadratureDiverged { estimate: f64 },

    #[error("policy is empty")]
    EmptyPolicy,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
