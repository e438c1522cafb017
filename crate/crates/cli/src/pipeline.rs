//! The track pipeline: every stage wired end to end over one input
//! directory, with a manifest recording what ran.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shotlink::constraints::{
    generate_triplets, mine_contextual, mine_spatiotemporal, propagate_transitive, ConstraintSet,
};
use shotlink::embed::{
    embed_sequence, train, EmbeddingModel, LossKind, PairSample, TrainReport, TrainSamples,
    TripletSample,
};
use shotlink::linker::{link_across_shots, link_within_shot, EmbeddingTable};
use shotlink::sequence::validate_sequence;
use shotlink::types::{DetectionId, Tracklet, Trajectory};
use shotlink::{io, Sequence};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::manifest::Manifest;

pub const DETECTIONS_FILE: &str = "detections.txt";
pub const SHOTS_FILE: &str = "shots.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.txt";
pub const TRACKLETS_FILE: &str = "tracklets.txt";
pub const SHOT_TRACKLETS_FILE: &str = "shot_tracklets.txt";
pub const CONSTRAINTS_FILE: &str = "constraints.txt";
pub const LOSS_TRACE_FILE: &str = "loss_trace.csv";
pub const MODEL_FILE: &str = "model.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const TRAJECTORIES_FILE: &str = "trajectories.txt";
pub const ASSIGNMENTS_FILE: &str = "assignments.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Everything the track pipeline produced, kept in memory for callers that
/// want to inspect rather than re-read files.
pub struct TrackOutcome {
    pub sequence: Sequence,
    pub tracklets: Vec<Tracklet>,
    pub constraints: ConstraintSet,
    pub train_report: Option<TrainReport>,
    pub embeddings: EmbeddingTable,
    pub shot_tracklets: Vec<Tracklet>,
    pub trajectories: Vec<Trajectory>,
    pub manifest: String,
}

/// Per-detection identity assignment from surviving trajectories.
pub fn assignments(
    shot_tracklets: &[Tracklet],
    trajectories: &[Trajectory],
) -> Vec<(DetectionId, i64)> {
    let by_id: BTreeMap<u64, &Tracklet> = shot_tracklets
        .iter()
        .map(|t| (t.tracklet_id, t))
        .collect();
    let mut out = Vec::new();
    for tr in trajectories {
        for tid in &tr.tracklet_ids {
            for &d in &by_id[tid].detections {
                out.push((d, tr.identity as i64));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Draw at most `cap` elements of a sorted set, uniformly, seeded.
fn capped_sample<T: Copy + Ord>(items: &std::collections::BTreeSet<T>, cap: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut v: Vec<T> = items.iter().copied().collect();
    if v.len() <= cap {
        return v;
    }
    v.shuffle(rng);
    v.truncate(cap);
    v.sort_unstable();
    v
}

/// Run the whole tracking pipeline, writing every artifact into `out_dir`.
pub fn run_track(
    cfg: &PipelineConfig,
    in_dir: &Path,
    out_dir: &Path,
) -> Result<TrackOutcome, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut manifest = Manifest::new(
        &cfg.config_hash(),
        cfg.seed,
        cfg.loss.kind.as_str(),
        cfg.threads,
    );

    // Stage 0: load and validate inputs.
    let stage0 = || -> shotlink::Result<Sequence> {
        let detections = io::read_detections(in_dir.join(DETECTIONS_FILE))?;
        let shots = io::read_shots(in_dir.join(SHOTS_FILE))?;
        validate_sequence(detections, shots)
    };
    let sequence = stage0().map_err(|e| CliError::stage(0, "load-inputs", e))?;
    manifest.stage(
        0,
        "load-inputs",
        &[
            ("detections", sequence.len().to_string()),
            ("shots", sequence.shots().len().to_string()),
        ],
    );

    // Stage 1: tracklets.
    let tracklets = shotlink::tracklets::build_tracklets(&sequence, &cfg.affinity)
        .map_err(|e| CliError::stage(1, "build-tracklets", e))?;
    manifest.stage(1, "build-tracklets", &[("tracklets", tracklets.len().to_string())]);

    // Stage 2: spatio-temporal constraints.
    let mut constraints = mine_spatiotemporal(&tracklets, &sequence);
    manifest.stage(
        2,
        "mine-spatiotemporal",
        &[
            ("positives", constraints.positives.len().to_string()),
            ("negatives", constraints.negatives.len().to_string()),
            ("tracklet_neg", constraints.tracklet_neg.len().to_string()),
        ],
    );

    // Stage 3: contextual constraints.
    let ctx_details = if cfg.context.enabled {
        let report = mine_contextual(
            &mut constraints,
            &tracklets,
            &sequence,
            &cfg.context.to_config(),
        )
        .map_err(|e| CliError::stage(3, "mine-contextual", e))?;
        vec![
            ("enabled", "true".to_string()),
            ("skipped", report.skipped_missing_context.to_string()),
            ("groups", report.groups_accepted.to_string()),
            ("pairs_added", report.pairs_added.to_string()),
            ("conflicts", report.conflicts_resolved_negative.to_string()),
        ]
    } else {
        vec![("enabled", "false".to_string())]
    };
    manifest.stage(3, "mine-contextual", &ctx_details);

    // Stage 4: transitive propagation.
    constraints = propagate_transitive(&constraints, &tracklets)
        .map_err(|e| CliError::stage(4, "propagate", e))?;
    manifest.stage(
        4,
        "propagate",
        &[
            ("positives", constraints.positives.len().to_string()),
            ("negatives", constraints.negatives.len().to_string()),
            ("tracklet_pos", constraints.tracklet_pos.len().to_string()),
            ("tracklet_neg", constraints.tracklet_neg.len().to_string()),
        ],
    );

    // Stage 5: training samples.
    let index_of: BTreeMap<DetectionId, usize> = sequence
        .detections()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id, i))
        .collect();
    let samples = match cfg.loss.kind {
        LossKind::Contrastive => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampling_seed());
            let cap = cfg.train.max_pairs_per_class;
            let pos = capped_sample(&constraints.positives, cap, &mut rng);
            let neg = capped_sample(&constraints.negatives, cap, &mut rng);
            let mut pairs = Vec::with_capacity(pos.len() + neg.len());
            for (a, b) in pos {
                pairs.push(PairSample {
                    a: index_of[&a],
                    b: index_of[&b],
                    positive: true,
                });
            }
            for (a, b) in neg {
                pairs.push(PairSample {
                    a: index_of[&a],
                    b: index_of[&b],
                    positive: false,
                });
            }
            TrainSamples::Pairs(pairs)
        }
        LossKind::Triplet | LossKind::SymTriplet => {
            let triplets = generate_triplets(
                &constraints,
                &tracklets,
                cfg.train.max_triplets_per_negpair,
                cfg.sampling_seed(),
            );
            constraints.triplets = triplets.clone();
            TrainSamples::Triplets(
                triplets
                    .iter()
                    .map(|&(a, p, n)| TripletSample {
                        anchor: index_of[&a],
                        positive: index_of[&p],
                        negative: index_of[&n],
                    })
                    .collect(),
            )
        }
    };
    manifest.stage(
        5,
        "generate-samples",
        &[
            ("kind", match samples {
                TrainSamples::Pairs(_) => "pairs".to_string(),
                TrainSamples::Triplets(_) => "triplets".to_string(),
            }),
            ("count", samples.len().to_string()),
        ],
    );

    // Stage 6: train the embedding.
    let features: Vec<Vec<f64>> = sequence
        .detections()
        .iter()
        .map(|d| d.feature.clone())
        .collect();
    let dims = cfg.train.layer_dims(sequence.feature_dim().max(1));
    let mut model = EmbeddingModel::new_seeded(&dims, cfg.model_seed())
        .map_err(|e| CliError::stage(6, "train", e))?;
    let train_report = if samples.is_empty() {
        // Nothing mined (e.g. an empty sequence): keep the seeded model.
        None
    } else {
        Some(
            train(
                &mut model,
                &features,
                &samples,
                &cfg.loss,
                &cfg.train.to_config(cfg.train_seed()),
            )
            .map_err(|e| CliError::stage(6, "train", e))?,
        )
    };
    let (first, last) = match &train_report {
        Some(r) => (format!("{:.6}", r.first()), format!("{:.6}", r.last())),
        None => ("skipped".to_string(), "skipped".to_string()),
    };
    manifest.stage(
        6,
        "train",
        &[
            ("epochs", cfg.train.epochs.to_string()),
            ("first_loss", first),
            ("final_loss", last),
        ],
    );

    // Stage 7: embed every detection.
    let embeddings =
        embed_sequence(&model, &sequence).map_err(|e| CliError::stage(7, "embed", e))?;
    manifest.stage(7, "embed", &[("embeddings", embeddings.len().to_string())]);

    // Stage 8: within-shot linking, then renumber globally.
    let mut shot_tracklets = Vec::new();
    for shot_index in 0..sequence.shots().len() {
        let shot_id = sequence.shots()[shot_index].shot_id;
        let of_shot: Vec<Tracklet> = tracklets
            .iter()
            .filter(|t| t.shot_id == shot_id)
            .cloned()
            .collect();
        if of_shot.is_empty() {
            continue;
        }
        let merged = link_within_shot(&of_shot, &sequence, &embeddings, &cfg.linker)
            .map_err(|e| CliError::stage(8, "link-within-shot", e))?;
        shot_tracklets.extend(merged);
    }
    for (i, t) in shot_tracklets.iter_mut().enumerate() {
        t.tracklet_id = i as u64;
    }
    manifest.stage(
        8,
        "link-within-shot",
        &[("shot_tracklets", shot_tracklets.len().to_string())],
    );

    // Stage 9: across-shot clustering into trajectories.
    let trajectories = link_across_shots(&shot_tracklets, &sequence, &embeddings, &cfg.linker)
        .map_err(|e| CliError::stage(9, "link-across-shots", e))?;
    manifest.stage(
        9,
        "link-across-shots",
        &[("trajectories", trajectories.len().to_string())],
    );

    let manifest_text = manifest.render();

    // Persist everything.
    let write = |r: shotlink::Result<()>| r.map_err(|e| CliError::stage(9, "write-outputs", e));
    write(io::write_tracklets(out_dir.join(TRACKLETS_FILE), &tracklets))?;
    write(io::write_constraints(
        out_dir.join(CONSTRAINTS_FILE),
        &constraints,
    ))?;
    if let Some(report) = &train_report {
        write(io::write_loss_trace(
            out_dir.join(LOSS_TRACE_FILE),
            &report.epoch_mean_loss,
        ))?;
    }
    write(io::write_model(out_dir.join(MODEL_FILE), &model))?;
    write(io::write_embeddings(
        out_dir.join(EMBEDDINGS_FILE),
        &embeddings,
    ))?;
    write(io::write_tracklets(
        out_dir.join(SHOT_TRACKLETS_FILE),
        &shot_tracklets,
    ))?;
    write(io::write_trajectories(
        out_dir.join(TRAJECTORIES_FILE),
        &trajectories,
    ))?;
    write(io::write_labels(
        out_dir.join(ASSIGNMENTS_FILE),
        assignments(&shot_tracklets, &trajectories),
    ))?;
    std::fs::write(out_dir.join(MANIFEST_FILE), &manifest_text)
        .map_err(|e| CliError::stage(9, "write-outputs", e))?;

    Ok(TrackOutcome {
        sequence,
        tracklets,
        constraints,
        train_report,
        embeddings,
        shot_tracklets,
        trajectories,
        manifest: manifest_text,
    })
}

/// Run a closure inside a rayon pool capped at `threads` workers (0 = all
/// cores).
pub fn with_thread_cap<T: Send>(
    threads: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
