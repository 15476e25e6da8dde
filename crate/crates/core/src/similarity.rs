//! Component alignment and the gated weighted similarity score.
//!
//! A candidate hypothesis is compared to the ground truth component by
//! component. Per-pair similarities `s_i` are aggregated as
//!
//! ```text
//! S = (prod over critical i of [s_i > eps]) * (sum over i of w_i * s_i)
//! ```
//!
//! so any missing critical component zeroes the score, and the latent
//! distance between candidate and ground truth is `1 - S`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Component, GroundTruthSpec, Hypothesis};

/// Threshold below which a critical component counts as absent. With a
/// continuous scorer a strict `s_i > 0` reading would hinge on floating-
/// point coincidence.
pub const EPSILON_CRIT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("scorer returned {value} outside [0,1]")]
    ScoreOutOfRange { value: f64 },
    #[error("alignment does not cover ground-truth components: {0}")]
    AlignmentMismatch(String),
    #[error("external scorer failed: {0}")]
    Scorer(String),
}

/// Pluggable per-component similarity judge. The deterministic
/// [`CosineScorer`] and the HTTP-backed scorers in [`crate::scorer`]
/// implement the same contract, so a warm cache makes them interchangeable.
pub trait ComponentScorer: Send + Sync {
    fn score(
        &self,
        question: &str,
        gt: &Component,
        candidate: &Component,
    ) -> Result<f64, SimilarityError>;
}

/// Deterministic stand-in for an LLM mechanism judge: zero across
/// mechanism tags, clipped cosine within a tag.
#[derive(Debug, Clone, Copy, Default)]
pub struct CosineScorer;

impl ComponentScorer for CosineScorer {
    fn score(
        &self,
        _question: &str,
        gt: &Component,
        candidate: &Component,
    ) -> Result<f64, SimilarityError> {
        component_similarity(gt, candidate)
    }
}

/// Similarity between two components in `[0,1]`.
///
/// Differing mechanism tags hard-zero the score: cross-mechanism
/// similarity is meaningless in the component model. Identical components
/// return exactly 1; otherwise the cosine of the feature vectors, clipped
/// to `[0,1]`.
pub fn component_similarity(a: &Component, b: &Component) -> Result<f64, SimilarityError> {
    if a.features.len() != b.features.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: a.features.len(),
            right: b.features.len(),
        });
    }
    if a.mechanism_tag != b.mechanism_tag {
        return Ok(0.0);
    }
    if a.features == b.features {
        return Ok(1.0);
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (&x, &y) in a.features.iter().zip(&b.features) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        // the zero vector has no direction; treat as unrelated
        return Ok(0.0);
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(0.0, 1.0))
}

/// One aligned pair: a ground-truth component, the candidate component
/// matched to it (if any), and their similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub gt_component_id: String,
    pub candidate_component_id: Option<String>,
    pub s: f64,
}

/// The full alignment: exactly one pair per ground-truth component, each
/// candidate component used at most once, unmatched ground-truth
/// components carrying `s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentAlignment {
    pub pairs: Vec<AlignedPair>,
}

impl ComponentAlignment {
    pub fn similarity_of(&self, gt_component_id: &str) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.gt_component_id == gt_component_id)
            .map(|p| p.s)
    }
}

/// Alignment plus the aggregate quantities derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub alignment: ComponentAlignment,
    /// The multiplicative critical-component gate: false iff some critical
    /// component is effectively absent.
    pub gate: bool,
    pub weighted_sum: f64,
    pub score_s: f64,
    pub distance: f64,
}

impl SimilarityReport {
    pub fn gate_factor(&self) -> f64 {
        if self.gate {
            1.0
        } else {
            0.0
        }
    }
}

/// Greedy maximum matching of candidate components onto ground-truth
/// components using the deterministic cosine scorer.
pub fn align_components(
    candidate: &Hypothesis,
    gt_hypothesis: &Hypothesis,
) -> Result<ComponentAlignment, SimilarityError> {
    align_components_with(&CosineScorer, "", candidate, gt_hypothesis)
}

/// Greedy maximum matching with an injectable scorer.
///
/// Repeatedly picks the unmatched (gt, candidate) pair with the highest
/// similarity, breaking ties by lexicographically smallest
/// `(gt id, candidate id)`, and stops once the best remaining similarity
/// is zero. Unmatched ground-truth components get `s = 0`. Greedy, not
/// optimal: a one-pass reference-guided matching, fully reproducible.
pub fn align_components_with(
    scorer: &dyn ComponentScorer,
    question: &str,
    candidate: &Hypothesis,
    gt_hypothesis: &Hypothesis,
) -> Result<ComponentAlignment, SimilarityError> {
    let gt_components = &gt_hypothesis.components;
    let cand_components = &candidate.components;

    let mut sims = vec![vec![0.0; cand_components.len()]; gt_components.len()];
    for (gi, gt) in gt_components.iter().enumerate() {
        for (ci, cand) in cand_components.iter().enumerate() {
            let s = scorer.score(question, gt, cand)?;
            if !(0.0..=1.0).contains(&s) || s.is_nan() {
                return Err(SimilarityError::ScoreOutOfRange { value: s });
            }
            sims[gi][ci] = s;
        }
    }

    let mut matched_s = vec![None::<(usize, f64)>; gt_components.len()];
    let mut gt_free: Vec<bool> = vec![true; gt_components.len()];
    let mut cand_free: Vec<bool> = vec![true; cand_components.len()];

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for gi in (0..gt_components.len()).filter(|&g| gt_free[g]) {
            for ci in (0..cand_components.len()).filter(|&c| cand_free[c]) {
                let s = sims[gi][ci];
                let better = match best {
                    None => true,
                    Some((bg, bc, bs)) => {
                        s > bs
                            || (s == bs
                                && (gt_components[gi].id.as_str(), cand_components[ci].id.as_str())
                                    < (
                                        gt_components[bg].id.as_str(),
                                        cand_components[bc].id.as_str(),
                                    ))
                    }
                };
                if better {
                    best = Some((gi, ci, s));
                }
            }
        }
        match best {
            Some((gi, ci, s)) if s > 0.0 => {
                matched_s[gi] = Some((ci, s));
                gt_free[gi] = false;
                cand_free[ci] = false;
            }
            _ => break,
        }
    }

    let pairs = gt_components
        .iter()
        .enumerate()
        .map(|(gi, gt)| match matched_s[gi] {
            Some((ci, s)) => AlignedPair {
                gt_component_id: gt.id.clone(),
                candidate_component_id: Some(cand_components[ci].id.clone()),
                s,
            },
            None => AlignedPair {
                gt_component_id: gt.id.clone(),
                candidate_component_id: None,
                s: 0.0,
            },
        })
        .collect();

    Ok(ComponentAlignment { pairs })
}

/// Aggregates an alignment into the gated weighted score and its distance.
///
/// `gate` is true iff every critical component was matched with
/// `s > EPSILON_CRIT`. When every pair is an exact match (`s = 1`) the
/// score is pinned to exactly 1 — the weight-sum constraint makes the
/// weighted sum 1 up to representation error, and downstream code relies
/// on the ground truth being an exact fixed point.
pub fn aggregate_score(
    alignment: &ComponentAlignment,
    gt: &GroundTruthSpec,
) -> Result<SimilarityReport, SimilarityError> {
    if alignment.pairs.len() != gt.weights.len() {
        return Err(SimilarityError::AlignmentMismatch(format!(
            "{} pairs for {} weighted components",
            alignment.pairs.len(),
            gt.weights.len()
        )));
    }
    let mut weighted_sum = 0.0;
    let mut gate = true;
    for pair in &alignment.pairs {
        let w = gt.weights.get(&pair.gt_component_id).ok_or_else(|| {
            SimilarityError::AlignmentMismatch(format!(
                "pair for unweighted component {:?}",
                pair.gt_component_id
            ))
        })?;
        weighted_sum += w * pair.s;
        if gt.critical_set.contains(&pair.gt_component_id) && pair.s <= EPSILON_CRIT {
            gate = false;
        }
    }
    weighted_sum = weighted_sum.clamp(0.0, 1.0);
    if gate && alignment.pairs.iter().all(|p| p.s == 1.0) {
        weighted_sum = 1.0;
    }
    let score_s = if gate { weighted_sum } else { 0.0 };
    Ok(SimilarityReport {
        alignment: alignment.clone(),
        gate,
        weighted_sum,
        score_s,
        distance: 1.0 - score_s,
    })
}

/// Full similarity pipeline for one candidate against the resolved ground
/// truth: align, then aggregate.
pub fn score_candidate(
    scorer: &dyn ComponentScorer,
    question: &str,
    candidate: &Hypothesis,
    gt_hypothesis: &Hypothesis,
    gt: &GroundTruthSpec,
) -> Result<SimilarityReport, SimilarityError> {
    let alignment = align_components_with(scorer, question, candidate, gt_hypothesis)?;
    aggregate_score(&alignment, gt)
}
