//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, parsing, and the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("duplicate detection id {id}")]
    DuplicateId { id: u64 },

    #[error("detection {id} at frame {frame} is out-of-shot")]
    OutOfShot { id: u64, frame: i64 },

    #[error("detection {id}: feature dimension {got}, sequence declares {expected}")]
    FeatureDim { id: u64, got: usize, expected: usize },

    #[error("detection {id}: context dimension {got}, sequence declares {expected}")]
    ContextDim { id: u64, got: usize, expected: usize },

    #[error("detection {id}: box width/height must be positive (w={w}, h={h})")]
    BadBox { id: u64, w: f64, h: f64 },

    #[error("detection {id}: score {score} outside [0,1]")]
    BadScore { id: u64, score: f64 },

    #[error("shots {a} and {b} overlap")]
    ShotOverlap { a: u64, b: u64 },

    #[error("shot {shot_id}: empty frame range [{start}, {end}]")]
    BadShotRange { shot_id: u64, start: i64, end: i64 },

    #[error("duplicate shot id {shot_id}")]
    DuplicateShot { shot_id: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("affinity precondition violated: {0}")]
    AffinityPrecondition(String),

    #[error("missing embedding for detection {id}")]
    MissingEmbedding { id: u64 },

    #[error("constraint contradiction: tracklet pairs both same- and different-identity: {pairs:?}")]
    ConstraintContradiction { pairs: Vec<(u64, u64)> },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training samples do not match loss kind {expected}")]
    SampleKindMismatch { expected: &'static str },

    #[error("sample rejected for gradient checking: {0}")]
    RejectedSample(String),

    #[error("clustering is empty")]
    EmptyClustering,

    #[error("detection {id} has no ground-truth identity")]
    MissingLabel { id: u64 },

    #[error("hypothesis frames [{hyp_min}, {hyp_max}] outside ground-truth range [{gt_min}, {gt_max}]")]
    FrameRangeMismatch {
        hyp_min: i64,
        hyp_max: i64,
        gt_min: i64,
        gt_max: i64,
    },

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("ground truth has two boxes for identity {identity} in frame {frame}")]
    DuplicateGroundTruthBox { identity: u64, frame: i64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: mixed delimiters (this format is whitespace-separated; found ',')")]
    MixedDelimiter { path: String, line: usize },

    #[error("unknown id {id} in {what}")]
    UnknownId { id: u64, what: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
