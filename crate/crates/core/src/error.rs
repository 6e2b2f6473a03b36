use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The primary queue is not stable (`lambda >= mu`).
    #[error("unstable: lambda >= mu (lambda = {lambda}, mu = {mu})")]
    Unstable { lambda: f64, mu: f64 },

    /// A transmitter count outside the range allowed by the topology.
    #[error("{what} = {k} outside [{min}, {max}]")]
    CountOutOfRange {
        what: &'static str,
        k: usize,
        min: usize,
        max: usize,
    },

    #[error("empty trace")]
    EmptyTrace,
}

impl Error {
    /// True for the typed infeasibility conditions (as opposed to bad input).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Unstable { .. })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
