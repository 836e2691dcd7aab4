use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad lengths, unparsable text, out-of-range variables.
    #[error("input error: {0}")]
    Input(String),
    /// Arity or stratification rule broken for the requested model.
    #[error("structure error: {0}")]
    Structure(String),
    /// A configured enumeration or search cap would be exceeded.
    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    Resource { what: String, needed: String, cap: String },
    /// Root finding or extrapolation did not converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Operation not defined for this model or argument.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series equation whose coefficients are not determined by lower ones.
    #[error("ill-founded equation: {0}")]
    IllFounded(String),
}

impl Error {
    pub fn resource(what: impl Into<String>, needed: impl ToString, cap: impl ToString) -> Self {
        Error::Resource {
            what: what.into(),
            needed: needed.to_string(),
            cap: cap.to_string(),
        }
    }
}
