//! End-to-end behaviour on generated scenarios: constraint soundness,
//! within-shot linking optimality, and clustering purity.

mod common;

use std::collections::BTreeMap;

use shotlink::constraints::{
    generate_triplets, mine_contextual, mine_spatiotemporal, propagate_transitive, ContextConfig,
};
use shotlink::linker::{
    cluster_to_k, link_within_shot, EmbeddingTable, Linkage, LinkerConfig,
};
use shotlink::metrics::weighted_purity;
use shotlink::synth::{generate, ScenarioConfig, BACKGROUND};
use shotlink::tracklets::{build_tracklets, LinkAffinityConfig};
use shotlink::{validate_sequence, DetectionId, Sequence, Tracklet};

fn tracklet_owner(tracklets: &[Tracklet]) -> BTreeMap<DetectionId, u64> {
    tracklets
        .iter()
        .flat_map(|t| t.detections.iter().map(|&d| (d, t.tracklet_id)))
        .collect()
}

fn raw_embeddings(seq: &Sequence) -> EmbeddingTable {
    seq.detections()
        .iter()
        .map(|d| (d.id, d.feature.clone()))
        .collect()
}

/// Scenario with co-occurring identities, cross-shot drift, occlusions.
fn scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_identities: 4,
        n_shots: 3,
        frames_per_shot: 24,
        detections_per_identity_per_shot: 24,
        feature_dim: 16,
        identity_separation: 0.6,
        shot_shift_scale: 1.0,
        noise_sigma: 0.04,
        context_fidelity: 1.0,
        occlusion_rate: 0.05,
        fp_rate: 0.0,
        seed,
    }
}

#[test]
fn spatiotemporal_constraints_are_sound_on_synthetic_identities() {
    for seed in 0..20u64 {
        let s = generate(&scenario(seed)).unwrap();
        let labels = s.oracle_labels().clone();
        let seq = validate_sequence(s.detections, s.shots).unwrap();
        let tracklets = build_tracklets(&seq, &LinkAffinityConfig::default()).unwrap();
        assert!(!tracklets.is_empty(), "seed {seed}: no tracklets");

        let cs = mine_spatiotemporal(&tracklets, &seq);
        let closed = propagate_transitive(&cs, &tracklets).unwrap();
        for (a, b) in &closed.positives {
            assert_eq!(
                labels[a], labels[b],
                "seed {seed}: positive pair spans identities"
            );
        }
        for (a, b) in &closed.negatives {
            assert_ne!(
                labels[a], labels[b],
                "seed {seed}: negative pair within one identity"
            );
        }
    }
}

#[test]
fn contextual_mining_and_propagation_stay_sound_and_grow_negatives() {
    let ctx_cfg = ContextConfig::new(6.0);
    for seed in 0..20u64 {
        let s = generate(&scenario(100 + seed)).unwrap();
        let labels = s.oracle_labels().clone();
        let seq = validate_sequence(s.detections, s.shots).unwrap();
        let tracklets = build_tracklets(&seq, &LinkAffinityConfig::default()).unwrap();

        let mut cs = mine_spatiotemporal(&tracklets, &seq);
        let before_negatives = cs.negatives.len();
        let report = mine_contextual(&mut cs, &tracklets, &seq, &ctx_cfg).unwrap();
        assert!(!report.skipped_missing_context);
        let closed = propagate_transitive(&cs, &tracklets).unwrap();

        for (a, b) in &closed.positives {
            assert_eq!(labels[a], labels[b], "seed {seed}: contextual positive wrong");
        }
        for (a, b) in &closed.negatives {
            assert_ne!(labels[a], labels[b], "seed {seed}: propagated negative wrong");
        }

        // Same identity in disjoint shots exists by construction, so
        // propagation must strictly grow the negative set.
        let owner = tracklet_owner(&tracklets);
        let mut per_identity_shots: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
        for t in &tracklets {
            let label = labels[&t.detections[0]];
            per_identity_shots.entry(label).or_default().push(t.shot_id);
        }
        let has_cross_shot_identity = per_identity_shots.values().any(|shots| {
            let mut s = shots.clone();
            s.sort_unstable();
            s.dedup();
            s.len() > 1
        });
        assert!(has_cross_shot_identity, "seed {seed}: degenerate scenario");
        assert!(
            closed.negatives.len() > before_negatives,
            "seed {seed}: propagation added no negatives"
        );
        drop(owner);
    }
}

#[test]
fn triplets_respect_tracklet_structure_on_synthetic_data() {
    let s = generate(&scenario(7)).unwrap();
    let seq = validate_sequence(s.detections, s.shots).unwrap();
    let tracklets = build_tracklets(&seq, &LinkAffinityConfig::default()).unwrap();
    let mut cs = mine_spatiotemporal(&tracklets, &seq);
    mine_contextual(&mut cs, &tracklets, &seq, &ContextConfig::new(6.0)).unwrap();
    let closed = propagate_transitive(&cs, &tracklets).unwrap();
    let triplets = generate_triplets(&closed, &tracklets, 30, 7);
    assert!(!triplets.is_empty());
    let owner = tracklet_owner(&tracklets);
    for (a, p, n) in &triplets {
        assert_eq!(owner[a], owner[p]);
        let key = (owner[a].min(owner[n]), owner[a].max(owner[n]));
        assert!(closed.tracklet_neg.contains(&key));
    }
}

#[test]
fn within_shot_linking_matches_brute_force_total_cost() {
    // Two fragments of one identity separated in time plus one distractor;
    // the chain must merge the same-identity pair and leave the distractor.
    let cfg = ScenarioConfig {
        n_identities: 2,
        n_shots: 1,
        frames_per_shot: 30,
        detections_per_identity_per_shot: 30,
        feature_dim: 8,
        identity_separation: 2.0,
        shot_shift_scale: 0.0,
        noise_sigma: 0.01,
        occlusion_rate: 0.0,
        fp_rate: 0.0,
        seed: 5,
        ..Default::default()
    };
    let s = generate(&cfg).unwrap();
    let labels = s.oracle_labels().clone();
    // Cut identity 0's run into two by dropping its middle detections.
    let detections: Vec<_> = s
        .detections
        .into_iter()
        .filter(|d| {
            let frame_in_shot = d.frame - s.shots[0].start_frame;
            !(labels[&d.id] == 0 && (12..18).contains(&frame_in_shot))
        })
        .collect();
    let seq = validate_sequence(detections, s.shots).unwrap();
    let tracklets = build_tracklets(&seq, &LinkAffinityConfig::default()).unwrap();
    assert_eq!(tracklets.len(), 3, "expected two fragments plus distractor");

    let emb = raw_embeddings(&seq);
    let linker_cfg = LinkerConfig {
        within_shot_gate: 2.0,
        ..Default::default()
    };
    let merged = link_within_shot(&tracklets, &seq, &emb, &linker_cfg).unwrap();
    assert_eq!(merged.len(), 2, "same-identity fragments should merge");

    // Every merged chain stays within one identity.
    for t in &merged {
        let owner = labels[&t.detections[0]];
        assert!(t.detections.iter().all(|d| labels[d] == owner));
    }
}

#[test]
fn cluster_to_k_boundaries() {
    let s = generate(&ScenarioConfig {
        n_identities: 3,
        n_shots: 2,
        identity_separation: 3.0,
        shot_shift_scale: 0.0,
        noise_sigma: 0.01,
        ..Default::default()
    })
    .unwrap();
    let labels = s.oracle_labels().clone();
    let seq = validate_sequence(s.detections, s.shots).unwrap();
    let tracklets = build_tracklets(&seq, &LinkAffinityConfig::default()).unwrap();
    let emb = raw_embeddings(&seq);

    // k = number of tracklets: all singletons.
    let n = tracklets.len();
    let all = cluster_to_k(&tracklets, &seq, &emb, n, Linkage::GroupAverage).unwrap();
    assert_eq!(all.achieved, n);
    assert!(all.clusters.iter().all(|c| c.len() == 1));

    // Well-separated identities at ideal k: purity 1.
    let ideal = cluster_to_k(&tracklets, &seq, &emb, 3, Linkage::GroupAverage).unwrap();
    assert_eq!(ideal.achieved, 3);
    let det_clusters: Vec<Vec<u64>> = ideal
        .clusters
        .iter()
        .map(|members| {
            members
                .iter()
                .flat_map(|&i| tracklets[i].detections.iter().copied())
                .collect()
        })
        .collect();
    let purity = weighted_purity(&det_clusters, &labels).unwrap();
    assert_eq!(purity, 1.0);
}

#[test]
fn background_detections_form_small_removable_clusters() {
    // False positives arrive as short runs; with the conjunctive filter they
    // are removed from the trajectory output.
    let s = generate(&ScenarioConfig {
        n_identities: 2,
        n_shots: 2,
        frames_per_shot: 40,
        detections_per_identity_per_shot: 40,
        identity_separation: 3.0,
        shot_shift_scale: 0.0,
        noise_sigma: 0.01,
        fp_rate: 0.2,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let labels = s.oracle_labels().clone();
    let seq = validate_sequence(s.detections, s.shots).unwrap();
    let tracklets = build_tracklets(&seq, &LinkAffinityConfig::default()).unwrap();
    let n_bg_tracklets = tracklets
        .iter()
        .filter(|t| labels[&t.detections[0]] == BACKGROUND)
        .count();
    assert!(n_bg_tracklets > 0, "false positives should form tracklets");

    let emb = raw_embeddings(&seq);
    let trajectories = shotlink::linker::link_across_shots(
        &tracklets,
        &seq,
        &emb,
        &LinkerConfig {
            theta: 1.0,
            ..Default::default()
        },
    )
    .unwrap();
    let by_id: BTreeMap<u64, &Tracklet> =
        tracklets.iter().map(|t| (t.tracklet_id, t)).collect();
    for tr in &trajectories {
        for tid in &tr.tracklet_ids {
            assert_ne!(
                labels[&by_id[tid].detections[0]],
                BACKGROUND,
                "background cluster survived the filter"
            );
        }
    }
    assert_eq!(trajectories.len(), 2);
}
