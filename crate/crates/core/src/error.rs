use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("quadrature did not converge: best estimate {estimate:e}, error estimate {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    /// The queue cannot keep up with arrivals: `rho` is the offered load and
    /// `deficit` the shortfall of the service rate below the arrival rate, in
    /// packets per second (zero when the load sits exactly on the boundary).
    #[error("unstable queue: offered load {rho:.6} (service deficit {deficit:.6e} packets/s); beta exceeds its upper bound")]
    Stability { rho: f64, deficit: f64 },

    #[error("infeasible load: arrival rate x slot duration = {0} >= 1, no threshold gives a stable queue")]
    InfeasibleLoad(f64),

    #[error("degenerate policy: transmit probability is zero, the node never transmits")]
    DegeneratePolicy,

    #[error("degenerate interference: mean {mean:e}, variance {variance:e}")]
    DegenerateInterference { mean: f64, variance: f64 },

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("no lower bound for beta: second derivative of the loss is negative on all {points} grid points in (0, {upper}] (largest value {max_second:e})")]
    NoLowerBound { upper: f64, points: usize, max_second: f64 },

    #[error("node `{node}`: {source}")]
    Node {
        node: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scenario: `{field}` {reason}")]
    Validation { field: String, reason: String },

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("scenario document: {0}")]
    Parse(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_node(self, node: impl Into<String>) -> Self {
        Error::Node {
            node: node.into(),
            source: Box::new(self),
        }
    }

    /// True for every flavour of "this beta is past the stability boundary",
    /// including when wrapped with a node name.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Stability { .. } | Error::InfeasibleLoad(_) | Error::DegeneratePolicy => true,
            Error::Node { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
