use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("bias {voltage} V outside operating range [{min}, {max}] V")]
    OutOfEnvelope { voltage: f64, min: f64, max: f64 },

    #[error("magnitude {target} is not encodable (reachable range [{min}, {max}])")]
    Unencodable { target: f64, min: f64, max: f64 },

    #[error("channel collision on branch {branch}: rings at {first_nm:.4} nm and {second_nm:.4} nm are within one linewidth")]
    ChannelCollision {
        branch: usize,
        first_nm: f64,
        second_nm: f64,
    },

    #[error("input ring FSR {fsr_nm:.4} nm does not match channel spacing {spacing_nm:.4} nm")]
    FsrMismatch { fsr_nm: f64, spacing_nm: f64 },

    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),

    #[error("pad grid {rows}x{cols} cannot hold {pads} pads")]
    PadCapacity { pads: usize, rows: usize, cols: usize },

    #[error("training did not converge after {restarts} restarts (seed {seed}); retry with another seed")]
    TrainingFailed { seed: u64, restarts: usize },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
