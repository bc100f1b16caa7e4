use thiserror::Error;

/// Error type shared by all modules of the crate.
///
/// The variants mirror the failure classes of the numerical pipeline:
/// bad parameters, geometric preconditions, inadmissible coefficients,
/// iterative-solver breakdown, and numerical degeneracy (quantities that
/// must stay away from zero but did not).
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A geometric precondition failed (e.g. a ball escapes the domain).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A coefficient field violates its admissibility bounds.
    #[error("coefficient error: {0}")]
    Coefficient(String),

    /// An iterative solver did not converge.
    #[error(
        "solver error: {message} (relative residual {residual:.3e} after {iterations} iterations)"
    )]
    Solver {
        message: String,
        residual: f64,
        iterations: usize,
    },

    /// A quantity that must stay strictly positive fell below its floor.
    #[error("degeneracy error: {0}")]
    Degeneracy(String),

    /// The input is degenerate for the requested quantity (e.g. a constant
    /// trace has no frequency ratio).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The operation is not defined for this input (e.g. a 2D-only norm
    /// called on a 3D grid).
    #[error("operation error: {0}")]
    Operation(String),

    /// A constructed object failed its own validity checks.
    #[error("construction error: {0}")]
    Construction(String),

    /// A pipeline failure tagged with the stage that raised it.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
