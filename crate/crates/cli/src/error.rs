use chansel::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATED: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                // Bad input values are usage errors; everything else is a
                // well-formed request the solvers cannot honour.
                Error::InvalidProbability { .. }
                | Error::DegenerateChain
                | Error::IndexOutOfRange { .. }
                | Error::InvalidIndex { .. }
                | Error::EmptyVector
                | Error::NonpositiveQuantum(_)
                | Error::NonpositiveTolerance(_)
                | Error::HorizonZero
                | Error::InvalidBeta(_)
                | Error::ZeroReps => EXIT_USAGE,
                _ => EXIT_PRECONDITION,
            },
        }
    }
}
