use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants are grouped loosely into input validation problems and numerical
/// failures; [`Error::is_numerical`] tells the two apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("extrapolation refused: s = {s} outside tabulated range [{lo}, {hi}]")]
    Extrapolation { s: f64, lo: f64, hi: f64 },

    #[error("collision between bodies {i} and {j} (squared distance {dist2:e})")]
    Collision { i: usize, j: usize, dist2: f64 },

    #[error("singular configuration between bodies {i} and {j} (denominator {denominator:e})")]
    Singular {
        i: usize,
        j: usize,
        denominator: f64,
    },

    #[error("kernel singular at gap x = {x}")]
    KernelSingular { x: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("not a ring: maximal deviation {deviation:e}")]
    NotARing { deviation: f64 },

    #[error("angle tracking lost at t = {t}: {reason}")]
    Tracking { t: f64, reason: String },

    #[error("infeasible profile at t = {t}: {reason}")]
    InfeasibleProfile { t: f64, reason: String },

    #[error("quadrature failed on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Invalid(_))
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Extrapolation { .. } => "extrapolation",
            Error::Collision { .. } => "collision",
            Error::Singular { .. } => "singular",
            Error::KernelSingular { .. } => "kernel_singular",
            Error::Stiffness { .. } => "stiffness",
            Error::Geometry(_) => "geometry",
            Error::NotARing { .. } => "not_a_ring",
            Error::Tracking { .. } => "tracking",
            Error::InfeasibleProfile { .. } => "infeasible_profile",
            Error::Quadrature { .. } => "quadrature",
            Error::Solver(_) => "solver",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
