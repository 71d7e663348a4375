use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands disagree on alphabet size, depth or matrix dimensions.
    Shape {
        expected: String,
        found: String,
    },
    /// An input violates a documented precondition.
    Precondition(String),
    /// A forward simulation produced a non-finite state.
    Simulation { step: usize, sample: usize },
    /// The backward scheme produced non-finite Y or Z values.
    NonFinite {
        step: usize,
        samples: usize,
        component: &'static str,
    },
    /// Network training diverged.
    Training { epoch: usize },
}

impl Error {
    pub(crate) fn shape(expected: impl fmt::Display, found: impl fmt::Display) -> Self {
        use alloc::string::ToString;
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Simulation { step, sample } => {
                write!(f, "non-finite state at step {step} (sample {sample})")
            }
            Error::NonFinite {
                step,
                samples,
                component,
            } => write!(
                f,
                "backward scheme produced non-finite {component} at step {step} for {samples} samples"
            ),
            Error::Training { epoch } => write!(f, "training loss diverged at epoch {epoch}"),
        }
    }
}

impl core::error::Error for Error {}
