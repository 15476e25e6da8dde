//! The experiment executor: similarity, link, and distortion composed
//! into a single evaluation returning a normalized score in `[0,1]`.
//!
//! An executor is built once per (problem, config) pair; the distortion
//! field is constructed at that point and reused for every evaluation, so
//! the perturbation is systematic rather than resampled per call.
//! Evaluation itself is a pure function of the inputs and safe to call
//! concurrently.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{
    apply_distortion, build_distortion, link_apply, DistortionField, DistortionFlags,
    LandscapeError, LinkFunction, NoiseSpec,
};
use crate::model::{Hypothesis, ResearchProblem};
use crate::scorer::{HttpScorer, ReplayScorer, ScorerError};
use crate::similarity::{score_candidate, ComponentScorer, CosineScorer, SimilarityError, SimilarityReport};

/// How similarity judgments are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerConfig {
    /// The built-in cosine stand-in.
    Deterministic,
    /// An external similarity service with retries and a disk cache.
    External {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default)]
        cache_path: Option<String>,
        #[serde(default = "default_retries")]
        retries: u32,
    },
    /// Cache-only resolution; any miss is a hard error. Full runs under
    /// replay are bit-reproducible.
    Replay { cache_path: String },
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    3
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Deterministic
    }
}

/// Whether policies may observe the per-component similarity report or
/// only the scalar score. Scalar is the default: the ranking agent is
/// supposed to receive the performance number plus its own analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    Scalar,
    ComponentLevel,
}

/// Executor configuration: link function, distortion spec, scorer seam,
/// and the feedback exposure mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub link: LinkFunction,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub feedback: FeedbackMode,
}

impl SimulatorConfig {
    pub fn deterministic(link: LinkFunction, noise: NoiseSpec) -> Self {
        SimulatorConfig {
            link,
            noise,
            scorer: ScorerConfig::Deterministic,
            feedback: FeedbackMode::Scalar,
        }
    }
}

/// One evaluation: the scalar score, the full similarity report behind
/// it, and which distortion kinds touched the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub hypothesis_id: String,
    pub score: f64,
    pub report: SimilarityReport,
    pub distorted: DistortionFlags,
}

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("hypothesis {0:?} not in pool")]
    NotInPool(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// The built executor for one problem.
pub struct Simulator {
    problem: ResearchProblem,
    config: SimulatorConfig,
    field: DistortionField,
    scorer: Arc<dyn ComponentScorer>,
}

impl Simulator {
    /// Builds the executor, constructing the scorer named by the config.
    pub fn new(problem: &ResearchProblem, config: &SimulatorConfig) -> Result<Self, SimulatorError> {
        let scorer: Arc<dyn ComponentScorer> = match &config.scorer {
            ScorerConfig::Deterministic => Arc::new(CosineScorer),
            ScorerConfig::External {
                endpoint,
                timeout_ms,
                cache_path,
                retries,
            } => Arc::new(HttpScorer::new(
                endpoint.clone(),
                *timeout_ms,
                cache_path.clone(),
                *retries,
            )?),
            ScorerConfig::Replay { cache_path } => Arc::new(ReplayScorer::open(cache_path)?),
        };
        Self::with_scorer(problem, config, scorer)
    }

    /// Builds the executor around an injected scorer.
    pub fn with_scorer(
        problem: &ResearchProblem,
        config: &SimulatorConfig,
        scorer: Arc<dyn ComponentScorer>,
    ) -> Result<Self, SimulatorError> {
        let field = build_distortion(&config.noise, &config.link, problem)?;
        Ok(Simulator {
            problem: problem.clone(),
            config: config.clone(),
            field,
            scorer,
        })
    }

    pub fn problem(&self) -> &ResearchProblem {
        &self.problem
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.config
    }

    pub fn field(&self) -> &DistortionField {
        &self.field
    }

    /// Evaluates one pool member by id.
    pub fn evaluate_id(&self, hypothesis_id: &str) -> Result<EvaluationRecord, SimulatorError> {
        let hypothesis = self
            .problem
            .hypothesis(hypothesis_id)
            .ok_or_else(|| SimulatorError::NotInPool(hypothesis_id.to_string()))?;
        let gt_hypothesis = self.problem.ground_truth_hypothesis();
        let report = score_candidate(
            self.scorer.as_ref(),
            &self.problem.question,
            hypothesis,
            gt_hypothesis,
            &self.problem.ground_truth,
        )?;
        // A failed critical gate means the reaction cannot work at all:
        // the observed performance is zero regardless of link shape or
        // distortion.
        if !report.gate {
            return Ok(EvaluationRecord {
                hypothesis_id: hypothesis_id.to_string(),
                score: 0.0,
                report,
                distorted: DistortionFlags::default(),
            });
        }
        let base = link_apply(&self.config.link, report.distance);
        let (score, distorted) = apply_distortion(&self.field, hypothesis_id, base, report.distance);
        Ok(EvaluationRecord {
            hypothesis_id: hypothesis_id.to_string(),
            score,
            report,
            distorted,
        })
    }

    /// Evaluates a hypothesis. The pool member with the same id is the
    /// canonical content; a hypothesis unknown to the pool is an error.
    pub fn evaluate(&self, hypothesis: &Hypothesis) -> Result<EvaluationRecord, SimulatorError> {
        if self.problem.hypothesis(&hypothesis.id).is_none() {
            return Err(SimulatorError::NotInPool(hypothesis.id.clone()));
        }
        self.evaluate_id(&hypothesis.id)
    }

    /// Evaluates every pool member in pool order.
    pub fn evaluate_pool(&self) -> Result<Vec<EvaluationRecord>, SimulatorError> {
        self.problem
            .pool
            .iter()
            .map(|h| self.evaluate_id(&h.id))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{generate_problem, GenParams};
    use crate::landscape::{NoiseTier, DELTA_GAP};
    use crate::metrics::{spearman, SpearmanOutcome};

    fn problem() -> ResearchProblem {
        generate_problem(&GenParams::default(), 7).unwrap()
    }

    fn config(link: LinkFunction, tier: NoiseTier, seed: u64) -> SimulatorConfig {
        SimulatorConfig::deterministic(link, NoiseSpec::preset(tier, seed))
    }

    #[test]
    fn ground_truth_scores_exactly_one() {
        let problem = problem();
        for link in LinkFunction::all_default() {
            for tier in [
                NoiseTier::None,
                NoiseTier::Simple,
                NoiseTier::Medium,
                NoiseTier::Complex,
            ] {
                let sim = Simulator::new(&problem, &config(link, tier, 31)).unwrap();
                let record = sim.evaluate_id(&problem.ground_truth.hypothesis_id).unwrap();
                assert_eq!(record.score, 1.0, "{} / {}", link.name(), tier.name());
                assert_eq!(record.distorted, DistortionFlags::default());
            }
        }
    }

    #[test]
    fn noise_free_linear_score_equals_similarity() {
        let problem = problem();
        let sim = Simulator::new(
            &problem,
            &config(LinkFunction::Linear, NoiseTier::None, 0),
        )
        .unwrap();
        for record in sim.evaluate_pool().unwrap() {
            assert!(
                (record.score - record.report.score_s).abs() < 1e-12,
                "linear link must pass S through: {} vs {}",
                record.score,
                record.report.score_s
            );
        }
    }

    #[test]
    fn pool_records_are_ordered_and_unique_max() {
        let problem = problem();
        let sim = Simulator::new(
            &problem,
            &config(LinkFunction::default_gaussian(), NoiseTier::Simple, 5),
        )
        .unwrap();
        let records = sim.evaluate_pool().unwrap();
        assert_eq!(records.len(), 64);
        for (record, h) in records.iter().zip(&problem.pool) {
            assert_eq!(record.hypothesis_id, h.id);
            assert!((0.0..=1.0).contains(&record.score));
        }
        let perfect: Vec<&EvaluationRecord> =
            records.iter().filter(|r| r.score == 1.0).collect();
        assert_eq!(perfect.len(), 1);
        assert_eq!(
            perfect[0].hypothesis_id,
            problem.ground_truth.hypothesis_id
        );
        for r in &records {
            if r.hypothesis_id != problem.ground_truth.hypothesis_id {
                assert!(r.score <= 1.0 - DELTA_GAP);
            }
        }
    }

    #[test]
    fn repeated_evaluation_agrees_bitwise() {
        let problem = problem();
        let cfg = config(LinkFunction::default_gaussian(), NoiseTier::Complex, 17);
        let sim_a = Simulator::new(&problem, &cfg).unwrap();
        let sim_b = Simulator::new(&problem, &cfg).unwrap();
        let a = sim_a.evaluate_pool().unwrap();
        let b = sim_b.evaluate_pool().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_free_ranking_matches_similarity_ranking() {
        let problem = problem();
        for link in LinkFunction::all_default() {
            let sim = Simulator::new(&problem, &config(link, NoiseTier::None, 0)).unwrap();
            let records = sim.evaluate_pool().unwrap();
            let s_values: Vec<f64> = records.iter().map(|r| r.report.score_s).collect();
            let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
            match spearman(&s_values, &scores).unwrap() {
                SpearmanOutcome::Rho(rho) => {
                    assert_eq!(rho, 1.0, "link {}", link.name())
                }
                SpearmanOutcome::Undefined => panic!("degenerate pool"),
            }
        }
    }

    #[test]
    fn unknown_hypothesis_rejected() {
        let problem = problem();
        let sim = Simulator::new(&problem, &config(LinkFunction::Linear, NoiseTier::None, 0))
            .unwrap();
        assert!(matches!(
            sim.evaluate_id("h-nope"),
            Err(SimulatorError::NotInPool(_))
        ));
    }
}
