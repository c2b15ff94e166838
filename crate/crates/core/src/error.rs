use thiserror::Error;

pub type Result<T> = std::result::Result<T, WindError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindError {
    #[error("point {point:?} is outside the chart domain of `{label}`")]
    OutsideDomain { label: String, point: Vec<f64> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate plane: the two vectors are (numerically) dependent")]
    DegeneratePlane,

    #[error("inadmissible vector: {0}")]
    Inadmissible(String),

    #[error("inadmissible velocity at sample {index}: {reason}")]
    InadmissibleVelocity { index: usize, reason: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("CFL violation: dt = {dt} exceeds the bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("verdict is not constant flag curvature; global matching needs a CFC verdict")]
    NotCfc,

    #[error("wind is not unit (max | |W| - 1 | = {deviation:e}); Kropina classification does not apply")]
    NotKropina { deviation: f64 },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid parameter for model `{model}`: {reason}")]
    InvalidParams { model: String, reason: String },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("geodesic left the chart before the fit window of {window} was covered")]
    ChartExit { window: f64 },
}

impl WindError {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        WindError::Argument(msg.into())
    }

    pub(crate) fn params(model: &str, reason: impl Into<String>) -> Self {
        WindError::InvalidParams {
            model: model.to_string(),
            reason: reason.into(),
        }
    }
}
