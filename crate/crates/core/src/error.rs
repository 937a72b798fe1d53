use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// The variants split into two families: input problems (bad files, values
/// outside their domain, broken invariants) and computation problems (a
/// solver that could not finish, a geometry that cannot be realized). The CLI
/// maps the first family to exit code 1 and the second to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("{path}: {message}")]
    Json { path: String, message: String },

    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("least-squares system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("cable routing error: {0}")]
    Routing(String),

    #[error("infeasible actuation: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no thrust/drag bracket below {u_max} m/s")]
    NoBracket { u_max: f64 },

    #[error("calibration target unreachable: {0}")]
    Unreachable(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::Domain(_)
                | Error::Json { .. }
                | Error::UnknownFormat(_)
                | Error::Io(_)
        )
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
