use thiserror::Error;

pub type Result<T, E = GsptError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum GsptError {
    /// A field produced a non-finite value.
    #[error("non-finite value in {field} at ({x}, {y}): {detail}")]
    Domain {
        field: &'static str,
        x: f64,
        y: f64,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model `{model}`: {reason}")]
    InvalidParameter { model: String, reason: String },

    #[error("step size underflow at t = {t} (h = {h}); try a larger tolerance or a shorter time span")]
    StepUnderflow { t: f64, h: f64 },

    #[error("maximum of {steps} steps exceeded at t = {t}")]
    Timeout { steps: usize, t: f64 },

    #[error("Newton iteration failed: {0}")]
    NewtonFailure(String),

    #[error("layer flow stalled at N-singularity near ({x}, {y})")]
    Stalled { x: f64, y: f64 },

    #[error("no reciprocal point found: {0}")]
    NoReciprocalPoint(String),

    #[error("contact point is not regular: {0}")]
    ContactAssumption(String),

    #[error("orientation error: {0}")]
    Orientation(String),

    #[error("contact order > 3, unsupported")]
    UnsupportedOrder,

    #[error("degenerate contact point: {0}")]
    Degenerate(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("trajectory did not return to the section: {0}")]
    Escape(String),

    #[error("limit-cycle iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("no timescale separation (speed ratio {ratio:.3})")]
    NoTimescaleSeparation { ratio: f64 },

    #[error("{0}")]
    Internal(String),
}

impl GsptError {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        GsptError::Precondition(msg.into())
    }
}
