use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(
        "wavelength {wavelength_nm:.3} nm is outside the {axis} Sellmeier validity range \
         [{min_nm}, {max_nm}] nm"
    )]
    OutOfRange {
        axis: &'static str,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("detuning grid does not cover the amplitude: {0}")]
    GridCoverage(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("Schmidt decomposition failed: {0}")]
    Decomposition(String),

    #[error("delay scan: {0}")]
    ScanSpan(String),

    #[error("unknown figure tag `{tag}`; valid tags: {valid}")]
    UnknownFigure { tag: String, valid: String },

    #[error("failed to read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("failed to parse `{path}`: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "out_of_range",
            Error::Validation { .. } => "validation",
            Error::Degenerate(_) => "degenerate",
            Error::GridCoverage(_) => "grid_coverage",
            Error::Contract(_) => "contract",
            Error::Decomposition(_) => "decomposition",
            Error::ScanSpan(_) => "scan_span",
            Error::UnknownFigure { .. } => "unknown_figure",
            Error::Read { .. } => "read",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
