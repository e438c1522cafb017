//! Scoring a finished run against ground truth.

use std::collections::BTreeMap;
use std::path::Path;

use shotlink::linker::{cluster_to_k, EmbeddingTable};
use shotlink::metrics::{mot_report, weighted_purity, GroundTruth, Hypotheses, MotReport};
use shotlink::sequence::validate_sequence;
use shotlink::synth::BACKGROUND;
use shotlink::types::{DetectionId, Tracklet};
use shotlink::{io, Error, Sequence};

use crate::error::CliError;
use crate::pipeline::{
    ASSIGNMENTS_FILE, DETECTIONS_FILE, EMBEDDINGS_FILE, GROUND_TRUTH_FILE, SHOTS_FILE,
    SHOT_TRACKLETS_FILE,
};

pub struct Evaluation {
    pub report: MotReport,
    pub ideal_k: usize,
    pub purity_at_ideal_k: f64,
    pub purity_curve: Vec<(usize, f64)>,
}

pub struct RunData {
    pub sequence: Sequence,
    pub labels: BTreeMap<DetectionId, i64>,
    pub assignments: BTreeMap<DetectionId, i64>,
    pub shot_tracklets: Vec<Tracklet>,
    pub embeddings: EmbeddingTable,
}

pub fn load_run(in_dir: &Path, results_dir: &Path) -> Result<RunData, CliError> {
    let load = || -> shotlink::Result<RunData> {
        let detections = io::read_detections(in_dir.join(DETECTIONS_FILE))?;
        let shots = io::read_shots(in_dir.join(SHOTS_FILE))?;
        let sequence = validate_sequence(detections, shots)?;
        let labels: BTreeMap<_, _> = io::read_labels(in_dir.join(GROUND_TRUTH_FILE))?
            .into_iter()
            .collect();
        let assignments: BTreeMap<_, _> =
            io::read_labels(results_dir.join(ASSIGNMENTS_FILE))?
                .into_iter()
                .collect();
        let shot_tracklets = io::read_tracklets(results_dir.join(SHOT_TRACKLETS_FILE))?;
        let embeddings = io::read_embeddings(results_dir.join(EMBEDDINGS_FILE))?;
        Ok(RunData {
            sequence,
            labels,
            assignments,
            shot_tracklets,
            embeddings,
        })
    };
    let data = load().map_err(|e| CliError::Validation(e.to_string()))?;

    // Every labelled or assigned id must exist in the sequence.
    for id in data.labels.keys().chain(data.assignments.keys()) {
        if data.sequence.detection(*id).is_none() {
            return Err(CliError::Validation(
                Error::UnknownId {
                    id: *id,
                    what: "evaluation inputs",
                }
                .to_string(),
            ));
        }
    }
    for d in data.sequence.detections() {
        if !data.labels.contains_key(&d.id) {
            return Err(CliError::Validation(
                Error::MissingLabel { id: d.id }.to_string(),
            ));
        }
    }
    Ok(data)
}

/// Ground-truth frame boxes from the real (non-background) detections.
pub fn gt_boxes(data: &RunData) -> Result<GroundTruth, CliError> {
    let mut gt = GroundTruth::new();
    for d in data.sequence.detections() {
        let label = data.labels[&d.id];
        if label != BACKGROUND {
            gt.push(d.frame, label as u64, d.bbox)
                .map_err(|e| CliError::Validation(e.to_string()))?;
        }
    }
    Ok(gt)
}

/// Hypothesis frame boxes from the per-detection assignments.
pub fn hyp_boxes(data: &RunData) -> Result<Hypotheses, CliError> {
    let mut hyp = Hypotheses::new();
    for (&id, &identity) in &data.assignments {
        let d = data.sequence.detection(id).expect("checked in load_run");
        hyp.push(d.frame, identity as u64, d.bbox)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    Ok(hyp)
}

/// Weighted purity of a tracklet clustering, scored over real detections
/// only (background detections carry no identity).
pub fn clustering_purity(
    clusters: &[Vec<usize>],
    tracklets: &[Tracklet],
    labels: &BTreeMap<DetectionId, i64>,
) -> Result<f64, CliError> {
    let det_clusters: Vec<Vec<DetectionId>> = clusters
        .iter()
        .map(|members| {
            members
                .iter()
                .flat_map(|&i| tracklets[i].detections.iter().copied())
                .filter(|d| labels.get(d).is_none_or(|&l| l != BACKGROUND))
                .collect()
        })
        .filter(|c: &Vec<DetectionId>| !c.is_empty())
        .collect();
    weighted_purity(&det_clusters, labels).map_err(|e| CliError::Validation(e.to_string()))
}

/// Full evaluation: MOT metrics, purity at the ideal cluster count, and the
/// purity-versus-k curve swept over every reachable k.
pub fn evaluate(data: &RunData, iou_threshold: f64) -> Result<Evaluation, CliError> {
    let gt = gt_boxes(data)?;
    let hyp = hyp_boxes(data)?;
    let report =
        mot_report(&hyp, &gt, iou_threshold).map_err(|e| CliError::Validation(e.to_string()))?;

    let ideal_k = {
        let mut ids: Vec<i64> = data
            .labels
            .values()
            .copied()
            .filter(|&l| l != BACKGROUND)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };

    let n = data.shot_tracklets.len();
    if n == 0 {
        return Err(CliError::Validation("no tracklets to evaluate".into()));
    }
    let purity_at_ideal_k = purity_at_k(data, ideal_k.clamp(1, n))?;
    let mut purity_curve = Vec::with_capacity(n);
    for k in 1..=n {
        purity_curve.push((k, purity_at_k(data, k)?));
    }

    Ok(Evaluation {
        report,
        ideal_k,
        purity_at_ideal_k,
        purity_curve,
    })
}

pub fn purity_at_k(data: &RunData, k: usize) -> Result<f64, CliError> {
    let outcome = cluster_to_k(
        &data.shot_tracklets,
        &data.sequence,
        &data.embeddings,
        k,
        shotlink::linker::Linkage::GroupAverage,
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;
    clustering_purity(&outcome.clusters, &data.shot_tracklets, &data.labels)
}

pub fn render_report(eval: &Evaluation) -> String {
    let c = &eval.report.clear;
    let i = &eval.report.identity;
    let mut s = String::new();
    s.push_str("metric            value\n");
    s.push_str("-----------------------\n");
    for (name, v) in [
        ("Recall", c.recall),
        ("Precision", c.precision),
        ("F1", c.f1),
        ("FAF", c.faf),
        ("MOTA", c.mota),
        ("MOTP", c.motp),
        ("IDP", i.idp),
        ("IDR", i.idr),
        ("IDF1", i.idf1),
    ] {
        s.push_str(&format!("{name:<17} {v:.4}\n"));
    }
    for (name, v) in [
        ("IDS", eval.report.clear.ids),
        ("Frag", eval.report.clear.frag),
        ("FP", eval.report.clear.false_positives),
        ("FN", eval.report.clear.misses),
        ("GT boxes", eval.report.clear.gt_total),
        ("Hyp boxes", eval.report.clear.hyp_total),
    ] {
        s.push_str(&format!("{name:<17} {v}\n"));
    }
    s.push_str(&format!("{:<17} {}\n", "Ideal k", eval.ideal_k));
    s.push_str(&format!(
        "{:<17} {:.4}\n",
        "Purity@ideal-k", eval.purity_at_ideal_k
    ));
    s
}

pub fn render_report_csv(eval: &Evaluation) -> String {
    let c = &eval.report.clear;
    let i = &eval.report.identity;
    let mut s = String::from(
        "recall,precision,f1,faf,ids,frag,mota,motp,idp,idr,idf1,fp,fn,gt_total,hyp_total,ideal_k,purity_ideal_k\n",
    );
    s.push_str(&format!(
        "{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{:.6}\n",
        c.recall,
        c.precision,
        c.f1,
        c.faf,
        c.ids,
        c.frag,
        c.mota,
        c.motp,
        i.idp,
        i.idr,
        i.idf1,
        c.false_positives,
        c.misses,
        c.gt_total,
        c.hyp_total,
        eval.ideal_k,
        eval.purity_at_ideal_k,
    ));
    s
}
