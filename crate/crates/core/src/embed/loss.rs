//! Pairwise and triplet hinge losses with analytic embedding gradients.
//!
//! All three losses work on squared Euclidean distances. The symmetric
//! triplet variant uses all three pairwise distances so the positive pair is
//! pulled together while the negative is pushed away from both positives;
//! its hinge carries no 1/2 prefactor, unlike the contrastive and
//! conventional triplet forms. At the hinge boundary (loss exactly zero) all
//! gradients are zero.

use serde::{Deserialize, Serialize};

use crate::distance::sq_dist_unchecked;
use crate::error::{Error, Result};

/// Which loss drives the adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Contrastive,
    Triplet,
    SymTriplet,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Contrastive => "contrastive",
            LossKind::Triplet => "triplet",
            LossKind::SymTriplet => "symtriplet",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contrastive" => Ok(LossKind::Contrastive),
            "triplet" => Ok(LossKind::Triplet),
            "symtriplet" => Ok(LossKind::SymTriplet),
            other => Err(Error::InvalidConfig(format!("unknown loss kind {other:?}"))),
        }
    }
}

/// Loss selection plus margins: `tau` for the contrastive negative hinge,
/// `alpha` for the triplet-family margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub kind: LossKind,
    pub tau: f64,
    pub alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::SymTriplet,
            tau: 1.0,
            alpha: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::InvalidConfig("tau must be > 0".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidConfig("alpha must be > 0".into()));
        }
        Ok(())
    }
}

/// Loss value and gradients for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrad {
    pub loss: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

/// Loss value and gradients for one triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletGrad {
    pub loss: f64,
    pub g_anchor: Vec<f64>,
    pub g_pos: Vec<f64>,
    pub g_neg: Vec<f64>,
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Contrastive loss: `D/2` for a positive pair, `max(0, tau - D)/2` for a
/// negative pair.
pub fn contrastive_loss(e1: &[f64], e2: &[f64], is_positive: bool, cfg: &LossConfig) -> PairGrad {
    assert_eq!(e1.len(), e2.len(), "embedding dimensions differ");
    let d = sq_dist_unchecked(e1, e2);
    let delta = diff(e1, e2);
    if is_positive {
        PairGrad {
            loss: 0.5 * d,
            g2: delta.iter().map(|v| -v).collect(),
            g1: delta,
        }
    } else if d < cfg.tau {
        PairGrad {
            loss: 0.5 * (cfg.tau - d),
            g1: delta.iter().map(|v| -v).collect(),
            g2: delta,
        }
    } else {
        PairGrad {
            loss: 0.0,
            g1: vec![0.0; e1.len()],
            g2: vec![0.0; e2.len()],
        }
    }
}

/// Conventional triplet loss
/// `max(0, D(anchor,pos) - D(anchor,neg) + alpha) / 2`.
pub fn triplet_loss(ek: &[f64], el: &[f64], em: &[f64], cfg: &LossConfig) -> TripletGrad {
    assert_eq!(ek.len(), el.len(), "embedding dimensions differ");
    assert_eq!(ek.len(), em.len(), "embedding dimensions differ");
    let d_pos = sq_dist_unchecked(ek, el);
    let d_neg = sq_dist_unchecked(ek, em);
    let margin = d_pos - d_neg + cfg.alpha;
    if margin <= 0.0 {
        return TripletGrad {
            loss: 0.0,
            g_anchor: vec![0.0; ek.len()],
            g_pos: vec![0.0; ek.len()],
            g_neg: vec![0.0; ek.len()],
        };
    }
    let d_lk = diff(el, ek);
    let d_mk = diff(em, ek);
    TripletGrad {
        loss: 0.5 * margin,
        g_anchor: d_lk.iter().zip(&d_mk).map(|(l, m)| -(l - m)).collect(),
        g_pos: d_lk,
        g_neg: d_mk.iter().map(|v| -v).collect(),
    }
}

/// Symmetric triplet loss
/// `max(0, D(anchor,pos) - (D(anchor,neg) + D(pos,neg))/2 + alpha)`.
pub fn symtriplet_loss(ek: &[f64], el: &[f64], em: &[f64], cfg: &LossConfig) -> TripletGrad {
    assert_eq!(ek.len(), el.len(), "embedding dimensions differ");
    assert_eq!(ek.len(), em.len(), "embedding dimensions differ");
    let d_pos = sq_dist_unchecked(ek, el);
    let d_nk = sq_dist_unchecked(ek, em);
    let d_nl = sq_dist_unchecked(el, em);
    let margin = d_pos - 0.5 * (d_nk + d_nl) + cfg.alpha;
    if margin <= 0.0 {
        return TripletGrad {
            loss: 0.0,
            g_anchor: vec![0.0; ek.len()],
            g_pos: vec![0.0; ek.len()],
            g_neg: vec![0.0; ek.len()],
        };
    }
    let d_lk = diff(el, ek);
    let d_mk = diff(em, ek);
    let d_ml = diff(em, el);
    TripletGrad {
        loss: margin,
        g_anchor: d_lk
            .iter()
            .zip(&d_mk)
            .map(|(l, m)| -(2.0 * l - m))
            .collect(),
        g_pos: d_lk
            .iter()
            .zip(&d_ml)
            .map(|(l, m)| 2.0 * l + m)
            .collect(),
        g_neg: d_mk.iter().zip(&d_ml).map(|(k, l)| -(k + l)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LossConfig {
        LossConfig::default()
    }

    #[test]
    fn contrastive_identical_positive_is_zero() {
        let r = contrastive_loss(&[1.0, 2.0], &[1.0, 2.0], true, &cfg());
        assert_eq!(r.loss, 0.0);
        assert_eq!(r.g1, vec![0.0, 0.0]);
        assert_eq!(r.g2, vec![0.0, 0.0]);
    }

    #[test]
    fn contrastive_negative_beyond_margin_is_zero() {
        // D = 4 >= tau = 1.
        let r = contrastive_loss(&[0.0], &[2.0], false, &cfg());
        assert_eq!(r.loss, 0.0);
        assert_eq!(r.g1, vec![0.0]);
    }

    #[test]
    fn contrastive_negative_inside_margin_hand_evaluated() {
        // D = 0.25, loss = (1 - 0.25)/2 = 0.375.
        let r = contrastive_loss(&[0.0], &[0.5], false, &cfg());
        assert!((r.loss - 0.375).abs() < 1e-15);
        // d(loss)/d(e1) = -(e1 - e2) = 0.5
        assert!((r.g1[0] - 0.5).abs() < 1e-15);
        assert!((r.g2[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn triplet_satisfied_margin_is_zero() {
        // anchor == positive, negative at squared distance alpha + 1.
        let a = vec![0.0, 0.0];
        let n = vec![(2.0f64).sqrt(), 0.0]; // D = 2 = alpha + 1
        let r = triplet_loss(&a, &a, &n, &cfg());
        assert_eq!(r.loss, 0.0);
        assert!(r.g_anchor.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn triplet_hand_evaluated() {
        // D_pos = 4, D_neg = 1: loss = (4 - 1 + 1)/2 = 2.
        let r = triplet_loss(&[0.0], &[2.0], &[1.0], &cfg());
        assert_eq!(r.loss, 2.0);
    }

    #[test]
    fn symtriplet_equidistant_negative_cancels() {
        // D_pos = 0, both negative distances 1: max(0, 0 - 1 + 1) = 0.
        let r = symtriplet_loss(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &cfg());
        assert_eq!(r.loss, 0.0);
    }

    #[test]
    fn symtriplet_hand_evaluated() {
        // D_pos = 4, negatives 1 and 1: loss = 4 - 1 + 1 = 4.
        let r = symtriplet_loss(&[0.0, 0.0], &[2.0, 0.0], &[1.0, 0.0], &cfg());
        assert_eq!(r.loss, 4.0);
    }

    #[test]
    fn symtriplet_gradients_sum_to_zero_in_active_case() {
        let r = symtriplet_loss(&[0.1, -0.4], &[0.3, 0.9], &[0.2, 0.1], &cfg());
        assert!(r.loss > 0.0);
        for d in 0..2 {
            let s = r.g_anchor[d] + r.g_pos[d] + r.g_neg[d];
            assert!(s.abs() < 1e-12, "component {d} sums to {s}");
        }
    }
}
