use thiserror::Error;

/// Errors raised by the library. Each variant names the invariant that was
/// violated so the CLI can print it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "unsupported regime: mu = {mu} < nu = {nu} (the population persists unconditionally; no threshold is defined)"
    )]
    UnsupportedRegime { mu: f64, nu: f64 },

    #[error(
        "mu = nu + 2 (mu = {mu}, nu = {nu}): the habitat size drops out of Q; survival requires n0 >= {n0_critical}"
    )]
    DegenerateHabitat { mu: f64, nu: f64, n0_critical: f64 },

    #[error("mu = nu = {mu}: survival does not constrain the total population, only the habitat length")]
    PopulationUnconstrained { mu: f64 },

    #[error("root search did not converge: {0}")]
    Convergence(String),

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("scheme instability at T = {time}: node {node} reached {value}")]
    Instability { time: f64, node: usize, value: f64 },

    #[error("scan start {start} is not supercritical (fate: {fate})")]
    BadStart { start: f64, fate: String },

    #[error("scan exhausted after {iterations} evaluations without reaching extinction (last value {last})")]
    ScanExhausted { iterations: usize, last: f64 },

    #[error("fate undecided at {value}: horizon reached before extinction or growth")]
    Undecided { value: f64 },

    #[error("survival is not monotone along the scan: {0}")]
    NonMonotone(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
