use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the potential's domain [0, {upper}]")]
    Domain { value: f64, upper: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("size mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("profile value {value} at cell {cell} is on the boundary of [0, 1]; gradient undefined")]
    BoundaryGradient { cell: usize, value: f64 },

    #[error("power iteration did not converge after {iterations} iterations (Rayleigh estimate {estimate})")]
    SpectralNonConvergence { iterations: usize, estimate: f64 },

    #[error("spectral cross-check failed: power iteration {power} vs Fourier {fourier}")]
    SpectralMismatch { power: f64, fourier: f64 },

    #[error("enumeration of 2^{n} configurations refused (limit 2^{limit}, ~{cost:.3e} pair evaluations)")]
    EnumerationTooLarge { n: usize, limit: usize, cost: f64 },

    #[error("could not place a configuration inside the window after {attempts} annealing moves (closest energy {closest})")]
    Initialization { attempts: usize, closest: f64 },

    /// `line` is 0 when the problem is not tied to a config-file line.
    #[error("config error{}: {message}", at_line(*line))]
    Config { line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
