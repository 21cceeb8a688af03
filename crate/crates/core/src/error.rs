use thiserror::Error;

/// Errors raised by the numeric core, the controllers and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not a probability simplex: {0}")]
    NotSimplex(String),

    /// The Gibbs kernel underflowed or the iteration produced non-finite scalings.
    #[error("sinkhorn failed at epsilon = {epsilon:e}: {detail}")]
    SolverFailure { epsilon: f64, detail: String },

    #[error("coupling row {row} has (near) zero mass {mass:e}")]
    DegenerateCoupling { row: usize, mass: f64 },

    #[error("circular mean undefined for row {row}: resultant length {resultant:e}")]
    UndefinedMean { row: usize, resultant: f64 },

    #[error("rotation angle {angle} is too close to pi for a unique logarithm")]
    BranchAmbiguity { angle: f64 },

    #[error("matrix is near singular: eigenvalue {eigenvalue:e}")]
    NearSingular { eigenvalue: f64 },

    #[error("environment produced a non-finite state at timestep {timestep}")]
    EnvironmentFault { timestep: usize },

    #[error("obstacle field generation failed for seed {seed}: {detail}")]
    Generation { seed: u64, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
