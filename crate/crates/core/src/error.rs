use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid rate field: {0}")]
    InvalidRates(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The two-person formulas only hold for `phi_x + phi_y < 2` and `phi_x < 1 < phi_y`.
    #[error("two-person rates ({phi_x}, {phi_y}) outside the region phi_x + phi_y < 2, phi_x < 1 < phi_y")]
    OutsideRegion { phi_x: f64, phi_y: f64 },

    #[error("no alive vertex left to step")]
    NoAliveVertices,

    #[error("singular linear system")]
    Singular,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
