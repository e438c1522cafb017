//! The adaptive embedding: a small feedforward network, the three losses
//! with analytic gradients, the SGD-with-momentum training loop, and a
//! finite-difference gradient checker.

mod gradcheck;
mod loss;
mod model;
mod train;

pub use gradcheck::{
    grad_check, run_grad_check, CheckSample, GradCheckReport, GradCheckSummary,
};
pub use loss::{
    contrastive_loss, symtriplet_loss, triplet_loss, LossConfig, LossKind, PairGrad, TripletGrad,
};
pub use model::{EmbeddingModel, ForwardTrace, ModelGrad};
pub use train::{
    train, PairSample, TrainConfig, TrainReport, TrainSamples, TripletSample,
};

use rayon::prelude::*;

use crate::error::Result;
use crate::linker::EmbeddingTable;
use crate::sequence::Sequence;

/// Embed every detection of the sequence (parallel over detections).
pub fn embed_sequence(model: &EmbeddingModel, seq: &Sequence) -> Result<EmbeddingTable> {
    let embedded: Vec<(u64, Result<Vec<f64>>)> = seq
        .detections()
        .par_iter()
        .map(|d| (d.id, model.forward(&d.feature)))
        .collect();
    let mut table = EmbeddingTable::new();
    for (id, e) in embedded {
        table.insert(id, e?);
    }
    Ok(table)
}
