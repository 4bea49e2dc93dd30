use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two spins are closer than the point-dipole cutoff.
    #[error("degenerate geometry: {pair} separated by {separation_nm:.4} nm (minimum {min_nm} nm)")]
    DegenerateGeometry {
        pair: String,
        separation_nm: f64,
        min_nm: f64,
    },

    /// A value violates a type invariant. `path` names the offending field.
    #[error("invalid {path}: {reason}")]
    Invalid { path: String, reason: String },

    /// The protocol signal does not change when the target is added, so no
    /// finite measurement time can detect it.
    #[error("undetectable: {0}")]
    Undetectable(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by the physics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. } | Error::Config(_) | Error::DegenerateGeometry { .. }
        )
    }
}
