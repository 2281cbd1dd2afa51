use thiserror::Error;

/// Errors raised by the library. Size and cap failures are kept distinct
/// from input errors so front ends can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is singular")]
    Singular,

    #[error("basis columns are linearly dependent")]
    DependentBasis,

    #[error("dimension {n} exceeds the configured cap of {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("enumeration visited more than {cap} nodes")]
    EnumerationCap { cap: u64 },

    #[error("walk exceeded its budget of {max_edges} edges")]
    EdgeBudget { max_edges: usize },

    #[error("integer overflow during exact enumeration")]
    Overflow,

    #[error("precondition violated: {0}")]
    Contract(String),

    #[error("degenerate crossing: {} relevant vectors tie for the exit facet", .tied.len())]
    TieDetected { tied: Vec<usize> },

    #[error("rejection sampler gave up after {attempts} attempts; use hit-and-run")]
    SamplerAttempts { attempts: u64 },

    #[error("query aborted after {restarts} restarts without a certified answer")]
    RestartCap { restarts: u32 },

    #[error("cache mismatch: {0}")]
    Cache(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by a configured size limit.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::DimensionCap { .. }
                | Error::EnumerationCap { .. }
                | Error::EdgeBudget { .. }
                | Error::Overflow
                | Error::SamplerAttempts { .. }
                | Error::RestartCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
