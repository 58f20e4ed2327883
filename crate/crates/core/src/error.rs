use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("numerical integration did not converge: {0}")]
    Integration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("initializer failure: {0}")]
    Initializer(String),
    #[error("estimator failure: {0}")]
    Estimator(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that come from the numbers rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGeometry(_)
                | Error::Integration(_)
                | Error::Initializer(_)
                | Error::Estimator(_)
                | Error::Numerical(_)
        )
    }
}
