//! Domain types shared by every pipeline stage.
//!
//! A [`Detection`] is one boxed observation in one frame. Detections are
//! grouped into temporally contiguous [`Tracklet`]s within a [`Shot`], and
//! tracklets are finally clustered into identity-labelled [`Trajectory`]s.

use serde::{Deserialize, Serialize};

pub type DetectionId = u64;
pub type TrackletId = u64;

/// Axis-aligned box in pixel coordinates, `(x, y)` top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Intersection-over-union with another box; 0 when disjoint.
    pub fn iou(&self, other: &BBox) -> f64 {
        let x1 = self.x.max(other.x);
        let y1 = self.y.max(other.y);
        let x2 = (self.x + self.w).min(other.x + other.w);
        let y2 = (self.y + self.h).min(other.y + other.h);
        let iw = (x2 - x1).max(0.0);
        let ih = (y2 - y1).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// One boxed observation carrying a precomputed appearance feature and an
/// optional auxiliary context feature (e.g. a clothing descriptor).
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub id: DetectionId,
    pub frame: i64,
    pub bbox: BBox,
    pub score: f64,
    pub feature: Vec<f64>,
    pub context_feature: Option<Vec<f64>>,
}

/// A contiguous frame interval captured without a cut. Shots never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub shot_id: u64,
    pub start_frame: i64,
    pub end_frame: i64,
}

impl Shot {
    pub fn contains(&self, frame: i64) -> bool {
        frame >= self.start_frame && frame <= self.end_frame
    }

    /// Number of frames in the inclusive range.
    pub fn span(&self) -> i64 {
        self.end_frame - self.start_frame + 1
    }
}

/// An ordered, temporally contiguous run of detections within one shot.
/// The atomic unit of association.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tracklet {
    pub tracklet_id: TrackletId,
    pub shot_id: u64,
    /// Detection ids in strictly increasing frame order.
    pub detections: Vec<DetectionId>,
}

impl Tracklet {
    /// Count of member detections (the tracklet length `n`).
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// A cluster of tracklets assigned one identity label. The pipeline's final
/// output; no two member tracklets overlap in any frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub identity: u64,
    /// Member tracklet ids, sorted ascending.
    pub tracklet_ids: Vec<TrackletId>,
}
