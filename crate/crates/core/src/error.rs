use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("near-singular denominator |{modulus:e}| in {context}")]
    Singularity { context: &'static str, modulus: f64 },

    #[error("singular linear system ({context}): pivot {pivot:e} at column {column}")]
    SingularSystem {
        context: &'static str,
        column: usize,
        pivot: f64,
    },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("photon cutoff insufficient: mode {mode} holds population {population:e} at n = {cutoff}")]
    CutoffInsufficient {
        mode: usize,
        cutoff: usize,
        population: f64,
    },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Singularity { .. } => "singularity",
            Error::SingularSystem { .. } => "singular-system",
            Error::UnsupportedRegime(_) => "unsupported-regime",
            Error::CutoffInsufficient { .. } => "cutoff-insufficient",
            Error::Eigen(_) => "eigen",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }

    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
