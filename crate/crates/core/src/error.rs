use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{function} has a pole at {at}")]
    Pole { function: &'static str, at: C64 },

    #[error("argument {at} lies within {distance:e} of a pole at {pole}")]
    PoleProximity { at: C64, pole: C64, distance: f64 },

    #[error("integrand does not decay on the contour (last term {last:e} at height {height})")]
    NonDecaying { height: f64, last: f64 },

    #[error("contour residue did not converge with {nodes} nodes (last change {change:e})")]
    ResidueNotConverged { nodes: usize, change: f64 },

    #[error("series diverges: term ratio {ratio} is not below 1")]
    DivergentSeries { ratio: f64 },

    #[error("dual sum not truncated by m = {cap} (tail estimate {tail:e})")]
    TruncationFailure { cap: usize, tail: f64 },

    #[error("{h} is not invertible modulo {k}")]
    NotCoprime { h: i64, k: u64 },

    #[error("{0} lies outside the validated region")]
    OutOfDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors raised because an argument sits on or next to a pole.
    pub fn is_pole(&self) -> bool {
        matches!(self, Error::Pole { .. } | Error::PoleProximity { .. })
    }

    /// True for quadrature or series failures caused by insufficient decay.
    pub fn is_decay_failure(&self) -> bool {
        matches!(
            self,
            Error::NonDecaying { .. }
                | Error::ResidueNotConverged { .. }
                | Error::DivergentSeries { .. }
                | Error::TruncationFailure { .. }
        )
    }
}
