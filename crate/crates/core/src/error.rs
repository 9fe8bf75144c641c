use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain of a density or sampler.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Rejection sampler exhausted its attempt budget.
    #[error("sampler stalled after {attempts} attempts (c = {c})")]
    SamplerStall { c: f64, attempts: u64 },

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    /// A free particle handed to the crossing solver lies inside the pair.
    #[error("free particle at {position} is on the wrong side of the pair particle at {pair_edge}")]
    WrongSide { position: f64, pair_edge: f64 },

    /// The truncated configuration ran out of particles before the horizon.
    #[error("configuration window exhausted at t = {time}")]
    InsufficientWindow { time: f64 },

    #[error("event cap of {cap} reached at t = {time}")]
    InstabilityCap { cap: u64, time: f64 },

    /// Too many separations clamped to stay positive after a swap.
    #[error("pair separation collapsed {count} times")]
    SeparationCollapse { count: u32 },

    #[error("records have mismatched grids")]
    GridMismatch,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("collision cycle did not complete: {0}")]
    Geometry(String),

    /// An engine failure tagged with the sweep parameter that produced it.
    #[error("{name} = {value}: {source}")]
    AtParameter {
        name: &'static str,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, name: &'static str, value: f64) -> Self {
        Error::AtParameter {
            name,
            value,
            source: Box::new(self),
        }
    }

    /// The innermost error, with parameter annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtParameter { source, .. } => source.root(),
            other => other,
        }
    }
}
