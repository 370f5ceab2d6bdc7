use thiserror::Error;

/// Errors raised by the codecs, the stream format and the experiment driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter combination that cannot produce a valid code.
    #[error("configuration error: {0}")]
    Config(String),
    /// A call made with arguments that do not fit the code (wrong length, bad index).
    #[error("usage error: {0}")]
    Usage(String),
    /// A numeric argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A byte stream that does not follow the `.crom` layout.
    #[error("format error: {0}")]
    Format(String),
    /// A well-formed stream carrying values that cannot be valid.
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    /// An experiment trial failed; carries the trial index and the underlying cause.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors that come from reading a damaged or foreign stream.
    pub fn is_format(&self) -> bool {
        match self {
            Error::Format(_) | Error::Corrupt(_) => true,
            Error::Trial { source, .. } => source.is_format(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
