use thiserror::Error;

/// Errors raised by the numeric and exact routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid step set: {0}")]
    InvalidStepSet(String),

    #[error("slope {t} is outside the open slope domain ({min}, {max})")]
    SlopeOutOfDomain { t: f64, min: f64, max: f64 },

    #[error("value {value} is outside the attainable range ({min}, {max})")]
    ValueOutOfRange { value: f64, min: f64, max: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("index order violated: {0}")]
    IndexOrder(String),

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("no arc: the straight trajectory does not cross the arctic curve ({0})")]
    NoArc(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("permutation search limited to m <= {cap}, got {m}")]
    SizeCap { m: usize, cap: usize },

    #[error("degenerate envelope at r = {r}: |dt*/dr| = {derivative:e}")]
    DegenerateEnvelope { r: f64, derivative: f64 },

    #[error("r = {r} is too close to the edge of the rate table")]
    EdgeOfTable { r: f64 },

    #[error("invalid refinement: {0}")]
    InvalidRefinement(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid rate table: {0}")]
    InvalidRateTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
