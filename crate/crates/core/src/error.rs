use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by all modules.
#[derive(Debug)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    Domain { what: &'static str, value: f64 },
    /// An integer argument is outside its admissible range.
    OutOfRange { what: &'static str, value: i64, max: i64 },
    /// Adaptive quadrature exhausted its refinement budget.
    QuadratureNoConvergence { best: f64, error_estimate: f64 },
    /// The total jump rate vanished (absorbing configuration).
    FrozenState,
    /// A site-local marginal is not stochastically dominated by the
    /// requested invariant marginal.
    DominationViolated { site: usize, detail: String },
    /// Observation plan or experiment parameters are inconsistent.
    InvalidPlan(String),
    /// A profile preset string or table could not be parsed.
    InvalidProfile(String),
    /// Bin count does not divide the number of sites.
    BinCount { sites: usize, bins: usize },
    /// Snapshot or table I/O failed.
    Io(std::io::Error),
    /// A binary snapshot had an unexpected header or payload.
    BadSnapshot(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => {
                write!(f, "domain error: {what} (got {value})")
            }
            Error::OutOfRange { what, value, max } => {
                write!(f, "out of range: {what} = {value}, admissible max {max}")
            }
            Error::QuadratureNoConvergence {
                best,
                error_estimate,
            } => write!(
                f,
                "quadrature did not converge within budget (best {best}, error estimate {error_estimate})"
            ),
            Error::FrozenState => write!(f, "total jump rate is zero: frozen configuration"),
            Error::DominationViolated { site, detail } => {
                write!(f, "stochastic domination violated at site {site}: {detail}")
            }
            Error::InvalidPlan(msg) => write!(f, "invalid plan: {msg}"),
            Error::InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            Error::BinCount { sites, bins } => {
                write!(f, "bin count {bins} does not divide site count {sites}")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::BadSnapshot(msg) => write!(f, "bad snapshot: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
