use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the supported domain of an operation.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: estimated error {achieved:e} exceeds requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// A closed form was requested for a configuration it does not cover.
    #[error("closed form requires theta_lambda = pi/2 (got {theta_lambda})")]
    ClosedFormUnsupported { theta_lambda: f64 },

    /// The photon-number statistics of the two intervals do not satisfy a
    /// sign condition required by the decoy estimation.
    #[error("decoy estimation condition `{condition}` failed (value {value:e})")]
    DegenerateEstimation { condition: &'static str, value: f64 },

    /// The single-photon yield lower bound vanished, so no single-photon
    /// error rate can be bounded.
    #[error("single-photon yield lower bound is zero; e1 cannot be bounded")]
    EstimationFailure,

    /// Closed-form and quadrature evaluations of the same quantity disagree.
    #[error("consistency failure for {quantity}: numeric {numeric} vs closed form {closed} (|diff| {diff:e})")]
    Consistency {
        quantity: &'static str,
        numeric: f64,
        closed: f64,
        diff: f64,
    },

    /// The optimized key rate is not positive at the start of a cutoff search.
    #[error("key rate is not positive at {distance} km; no cutoff to locate")]
    NoPositiveRate { distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}
