use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-side precondition did not hold (bad dimensions, out-of-range parameter).
    #[error("{0}")]
    Contract(String),

    /// A decomposition failed or a matrix that must be invertible was not.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Exhaustive enumeration would visit more supports than allowed.
    #[error("combinatorial budget exceeded: {count} supports > {budget}; {hint}")]
    Budget {
        count: u128,
        budget: u128,
        hint: &'static str,
    },

    #[error("sensing matrix generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit status the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) | Error::Budget { .. } | Error::Io(_) => 1,
            Error::Numerical(_) | Error::Generation(_) => 2,
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Contract(msg()))
    }
}
