//! Sequence-adaptive embedding learning and tracklet linking.
//!
//! This crate turns per-frame detections (with precomputed appearance
//! features) into identity-consistent trajectories across the shots of a
//! video:
//!
//! 1. link detections into per-shot tracklets ([`tracklets`]);
//! 2. mine same/different-identity constraints from tracklet structure,
//!    context features, and transitive propagation ([`constraints`]);
//! 3. adapt an embedding to the sequence by minimizing a pairwise or
//!    triplet hinge loss over the mined constraints ([`embed`]);
//! 4. link tracklets within shots by assignment and across shots by
//!    agglomerative clustering in the adapted space ([`linker`]);
//! 5. score the result with clustering purity, CLEAR-MOT, and the
//!    identification metrics ([`metrics`]).
//!
//! The [`synth`] module generates seeded scenarios with known identities so
//! the whole pipeline can be exercised and scored without any video data.

pub mod constraints;
pub mod distance;
pub mod embed;
pub mod error;
pub mod io;
pub mod linker;
pub mod metrics;
pub mod sequence;
pub mod synth;
pub mod tracklets;
pub mod types;

pub use distance::embed_distance;
pub use error::{Error, Result};
pub use sequence::{validate_sequence, Sequence};
pub use types::{BBox, Detection, DetectionId, Shot, Tracklet, TrackletId, Trajectory};
