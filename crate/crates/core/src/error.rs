use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate direction: origin and target coincide")]
    DegenerateDirection,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    #[error("tracker error: {0}")]
    Tracker(String),

    #[error("integration step error: {0}")]
    Step(String),

    #[error("framework invariant violated: {0}")]
    Invariant(String),

    #[error("log parse error at line {line}: {msg}")]
    LogParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}
