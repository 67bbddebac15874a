use thiserror::Error;

/// Errors raised across the model, geometry, numerics and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented constraint.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// A complex-valued quantity that must be real carried an imaginary part.
    #[error("internal consistency: {what} has imaginary residue {residue:e}")]
    ImaginaryResidue { what: String, residue: f64 },

    /// The dissipation leaves no room for purity growth (b = 0).
    #[error("no escape chimney: drift vector b vanishes")]
    NoChimney,

    /// The model places the apogee outside the Bloch ball.
    #[error("model places apogee at radius {radius} outside the Bloch ball")]
    ApogeeOutsideBall { radius: f64 },

    /// A denominator vanished while evaluating an integrand or control law.
    #[error("singular integrand at x = {x}")]
    Singular { x: f64 },

    /// A linear system that had to be solved is singular.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// An ODE state went non-finite.
    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    /// The objective was non-finite where it must not be.
    #[error("objective is not finite at the start point")]
    NonFiniteStart,

    /// No multistart run produced an accepted candidate.
    #[error(
        "no feasible converged candidate after {starts} starts \
         (best residual {best_residual:e}, objective {best_objective})"
    )]
    NoConvergence {
        starts: usize,
        best_residual: f64,
        best_objective: f64,
        best_coefficients: Vec<f64>,
    },

    /// Forward simulation disagreed with the variational solution.
    #[error("forward simulation failed validation: {0}")]
    SimulationMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
