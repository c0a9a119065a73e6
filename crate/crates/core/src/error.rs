use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("point {point} lies outside the chart of {geometry}")]
    Domain { point: Complex64, geometry: String },

    #[error("numerical contract violated: {0}")]
    Numerical(String),

    #[error("symbol `{symbol}` does not provide derivatives of order {order}")]
    Capability { symbol: String, order: u8 },

    #[error("degenerate coherent state at {point}: P_p(x,x) = {diagonal:e}")]
    Degenerate { point: Complex64, diagonal: f64 },

    #[error("truncation did not converge: {0}")]
    Convergence(String),

    #[error("positivity contract violated: eigenvalue {0:e} below -1e-8")]
    Positivity(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of a numerical contract (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_)
                | Error::Convergence(_)
                | Error::Positivity(_)
                | Error::Degenerate { .. }
        )
    }
}
