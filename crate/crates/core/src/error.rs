use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symmetric eigensolver did not converge after {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("matrix is not positive definite: eigenvalue #{index} = {eigenvalue:e}")]
    NotPositiveDefinite { index: usize, eigenvalue: f64 },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("infeasible quantum bridge: beta = {beta} exceeds beta_max = {beta_max}")]
    Infeasible { beta: f64, beta_max: f64 },

    #[error("component {component}: {source}")]
    Component {
        component: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{operation} is not available for the {kind} bridge")]
    UnsupportedKind {
        operation: &'static str,
        kind: &'static str,
    },

    #[error("time {t} is closer than the step {h} to the boundary of [0, 1]")]
    BoundaryTime { t: f64, h: f64 },

    #[error("wavefunction phase S/(2 beta) is undefined for beta = 0")]
    ZeroBeta,

    #[error("the population update needs 2*beta <= 1 for the sqrt(1 - 2 beta) factor, got beta = {beta}")]
    NoiseTooLarge { beta: f64 },

    #[error("non-finite log-density at stencil point {point:?}")]
    NonFiniteLogDensity { point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("RRT* found no path after growing {tree_size} nodes")]
    NoPath { tree_size: usize },

    #[error("trajectory optimization diverged at iteration {iteration} (loss = {loss})")]
    Diverged { iteration: usize, loss: f64 },

    #[error("exact matching is limited to {max} points per set, got {n}; subsample first")]
    Oversize { n: usize, max: usize },

    #[error("point sets must have equal size, got {left} and {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn in_component(self, component: usize) -> Self {
        Error::Component {
            component,
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EigenNoConvergence { .. } => "eigen_no_convergence",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Infeasible { .. } => "infeasible",
            Error::Component { source, .. } => source.kind(),
            Error::UnsupportedKind { .. } => "unsupported_kind",
            Error::BoundaryTime { .. } => "boundary_time",
            Error::ZeroBeta => "zero_beta",
            Error::NoiseTooLarge { .. } => "noise_too_large",
            Error::NonFiniteLogDensity { .. } => "non_finite_log_density",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) => "config",
            Error::NoPath { .. } => "no_path",
            Error::Diverged { .. } => "diverged",
            Error::Oversize { .. } => "oversize",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
