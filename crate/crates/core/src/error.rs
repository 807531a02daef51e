use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("probability {0} is outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("thresholds must satisfy l_min <= l_free_th < l_occ_th <= l_max (got {l_min}, {l_free_th}, {l_occ_th}, {l_max})")]
    ThresholdOrder {
        l_min: f64,
        l_free_th: f64,
        l_occ_th: f64,
        l_max: f64,
    },
    #[error("{0} cannot change while the map holds voxels")]
    Immutable(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("frame stamp {stamp} regresses past the previous cycle (last {last}, tolerance {tolerance})")]
    StampRegression { stamp: f64, last: f64, tolerance: f64 },
    #[error("shared frame resolution {frame} m does not match map resolution {map} m")]
    ResolutionMismatch { frame: f32, map: f64 },
    #[error("sensor origin is not finite")]
    NonFiniteOrigin,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeErrorKind {
    #[error("bad magic")]
    BadMagic,
    #[error("input truncated")]
    Truncated,
    #[error("resolution is not finite and positive")]
    BadResolution,
    #[error("varint overflows 64 bits")]
    VarintOverflow,
    #[error("key component out of 32-bit range")]
    KeyOverflow,
    #[error("keys are not strictly increasing")]
    Unsorted,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

/// Wire decode failure, with the byte offset at which it was detected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("decode error at byte {offset}: {kind}")]
pub struct DecodeError {
    pub offset: usize,
    pub kind: DecodeErrorKind,
}

impl DecodeError {
    pub(crate) fn at(offset: usize, kind: DecodeErrorKind) -> Self {
        Self { offset, kind }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad log magic at byte 0")]
    BadMagic,
    #[error("log truncated in frame {frame} at byte {offset}")]
    Truncated { frame: usize, offset: u64 },
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: DecodeError,
    },
    #[error("frame {frame} has {count} points, more than the format allows")]
    TooManyPoints { frame: usize, count: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("infeasible scene: {0}")]
    Infeasible(String),
    #[error("scene spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("infeasible trajectory: {0}")]
    Trajectory(String),
    #[error("point {point:?} lies outside the oracle bounds")]
    OutOfBounds { point: [f64; 3] },
}
