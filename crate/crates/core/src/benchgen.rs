//! Synthetic benchmark generation.
//!
//! Each problem is one ground truth plus `N - 1` negatives built by
//! recombining the ground-truth component set: per component, with
//! probability `mutation_rate`, the component is dropped, swapped for a
//! pool distractor, or feature-jittered. Mutation keeps the similarity of
//! negatives to the ground truth graded rather than uniformly random,
//! which is what makes the performance landscape informative.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Component, Dataset, GroundTruthSpec, Hypothesis, ResearchProblem, SCHEMA_VERSION,
};
use crate::seed::derive_seed;

#[derive(Debug, Error)]
pub enum BenchgenError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate generation: {0}")]
    Degenerate(String),
}

/// Generation parameters. Defaults produce pools shaped like the
/// benchmark suite used throughout the crate: 64 candidates, 5
/// ground-truth components of which 2 are critical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub n_candidates: usize,
    pub gt_components: usize,
    pub critical_count: usize,
    pub component_pool: usize,
    pub feature_dim: usize,
    pub mutation_rate: f64,
    /// Relative odds of the three mutation kinds (drop, swap, jitter)
    /// once a component is chosen for mutation; normalized internally.
    pub mutation_mix: (f64, f64, f64),
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_candidates: 64,
            gt_components: 5,
            critical_count: 2,
            component_pool: 40,
            feature_dim: 8,
            mutation_rate: 0.3,
            mutation_mix: (1.0, 1.0, 1.0),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), BenchgenError> {
        if self.n_candidates < 2 {
            return Err(BenchgenError::InvalidParams(format!(
                "n_candidates = {} must be >= 2",
                self.n_candidates
            )));
        }
        if self.critical_count < 1 || self.critical_count > self.gt_components {
            return Err(BenchgenError::InvalidParams(format!(
                "critical_count = {} outside [1, gt_components = {}]",
                self.critical_count, self.gt_components
            )));
        }
        if self.gt_components > self.component_pool {
            return Err(BenchgenError::InvalidParams(format!(
                "gt_components = {} exceeds component_pool = {}",
                self.gt_components, self.component_pool
            )));
        }
        if self.feature_dim == 0 {
            return Err(BenchgenError::InvalidParams("feature_dim = 0".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(BenchgenError::InvalidParams(format!(
                "mutation_rate = {} outside [0,1]",
                self.mutation_rate
            )));
        }
        let (d, s, j) = self.mutation_mix;
        if d < 0.0 || s < 0.0 || j < 0.0 || d + s + j <= 0.0 {
            return Err(BenchgenError::InvalidParams(format!(
                "mutation_mix ({d}, {s}, {j}) must be non-negative with positive sum"
            )));
        }
        Ok(())
    }

    /// Number of distinct mechanism tags in the component pool.
    fn n_tags(&self) -> usize {
        (self.component_pool / 5).max(2)
    }
}

const MAX_NEGATIVE_ATTEMPTS: usize = 100;
const JITTER_STD: f64 = 0.15;

fn pad_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(2)
}

fn draw_pool(params: &GenParams, rng: &mut ChaCha8Rng) -> Vec<Component> {
    let tag_width = pad_width(params.n_tags());
    let id_width = pad_width(params.component_pool);
    (0..params.component_pool)
        .map(|i| Component {
            id: format!("c{i:0id_width$}"),
            mechanism_tag: format!("mech-{:0tag_width$}", rng.random_range(0..params.n_tags())),
            features: (0..params.feature_dim).map(|_| rng.random::<f64>()).collect(),
        })
        .collect()
}

/// Uniform Dirichlet weights via normalized exponentials, with an exact
/// sum-to-one fixup so the ground truth scores exactly 1 downstream.
fn draw_weights(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|e| e / total).collect();
    for _ in 0..4 {
        let sum: f64 = weights.iter().sum();
        if sum == 1.0 {
            break;
        }
        let max_idx = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        weights[max_idx] += 1.0 - sum;
    }
    weights
}

fn same_component_set(a: &[Component], b: &[Component]) -> bool {
    a.len() == b.len() && a.iter().all(|c| b.contains(c))
}

fn mutate_negative(
    gt_components: &[Component],
    pool: &[Component],
    params: &GenParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Component> {
    let jitter = Normal::new(0.0, JITTER_STD).expect("valid normal");
    let (w_drop, w_swap, w_jitter) = params.mutation_mix;
    let total = w_drop + w_swap + w_jitter;
    let mut components = Vec::with_capacity(gt_components.len());
    for component in gt_components {
        if rng.random::<f64>() >= params.mutation_rate {
            components.push(component.clone());
            continue;
        }
        let draw = rng.random::<f64>() * total;
        let kind = if draw < w_drop {
            0u8
        } else if draw < w_drop + w_swap {
            1
        } else {
            2
        };
        match kind {
            0 => {} // drop
            1 => {
                // swap for a distractor whose id is not already present
                let present: Vec<&str> = gt_components.iter().map(|c| c.id.as_str()).collect();
                let candidates: Vec<&Component> = pool
                    .iter()
                    .filter(|c| !present.contains(&c.id.as_str()))
                    .collect();
                if candidates.is_empty() {
                    components.push(component.clone());
                } else {
                    let pick = candidates[rng.random_range(0..candidates.len())];
                    components.push(pick.clone());
                }
            }
            _ => {
                let mut mutated = component.clone();
                for f in &mut mutated.features {
                    *f = (*f + jitter.sample(rng)).clamp(0.0, 1.0);
                }
                components.push(mutated);
            }
        }
    }
    // swaps can introduce the same distractor twice; keep first occurrence
    let mut seen = Vec::new();
    components.retain(|c| {
        if seen.contains(&c.id) {
            false
        } else {
            seen.push(c.id.clone());
            true
        }
    });
    components
}

/// Generates one research problem with the given question label.
pub fn generate_problem_with_question(
    params: &GenParams,
    seed: u64,
    question: &str,
) -> Result<ResearchProblem, BenchgenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pool = draw_pool(params, &mut rng);

    // ground-truth component subset: seeded prefix shuffle
    let mut indices: Vec<usize> = (0..params.component_pool).collect();
    for i in 0..params.gt_components {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    let mut gt_components: Vec<Component> = indices[..params.gt_components]
        .iter()
        .map(|&i| pool[i].clone())
        .collect();
    gt_components.sort_by(|a, b| a.id.cmp(&b.id));

    let weights = draw_weights(params.gt_components, &mut rng);

    let mut critical_indices: Vec<usize> = (0..params.gt_components).collect();
    for i in 0..params.critical_count {
        let j = rng.random_range(i..critical_indices.len());
        critical_indices.swap(i, j);
    }
    let critical_set = critical_indices[..params.critical_count]
        .iter()
        .map(|&i| gt_components[i].id.clone())
        .collect();

    let gt_index = rng.random_range(0..params.n_candidates);
    let id_width = pad_width(params.n_candidates);

    let mut hypotheses = Vec::with_capacity(params.n_candidates);
    for position in 0..params.n_candidates {
        let id = format!("h{position:0id_width$}");
        if position == gt_index {
            hypotheses.push(Hypothesis {
                id,
                text: Some("synthetic candidate".into()),
                components: gt_components.clone(),
                actual: None,
            });
            continue;
        }
        let mut attempt = 0;
        let components = loop {
            if attempt >= MAX_NEGATIVE_ATTEMPTS {
                return Err(BenchgenError::Degenerate(format!(
                    "negative at position {position} identical to the ground truth after \
                     {MAX_NEGATIVE_ATTEMPTS} attempts (mutation_rate = {})",
                    params.mutation_rate
                )));
            }
            attempt += 1;
            let candidate = mutate_negative(&gt_components, &pool, params, &mut rng);
            if !candidate.is_empty() && !same_component_set(&candidate, &gt_components) {
                break candidate;
            }
        };
        hypotheses.push(Hypothesis {
            id,
            text: Some("synthetic candidate".into()),
            components,
            actual: None,
        });
    }

    let gt_id = format!("h{gt_index:0id_width$}");
    let problem = ResearchProblem {
        question: question.to_string(),
        pool: hypotheses,
        ground_truth: GroundTruthSpec {
            hypothesis_id: gt_id,
            weights: gt_components
                .iter()
                .map(|c| c.id.clone())
                .zip(weights)
                .collect(),
            critical_set,
        },
        feature_dim: params.feature_dim,
    };
    debug_assert_eq!(crate::model::validate_problem(&problem), Vec::<String>::new());
    Ok(problem)
}

/// Generates one research problem with a seed-derived question label.
pub fn generate_problem(params: &GenParams, seed: u64) -> Result<ResearchProblem, BenchgenError> {
    generate_problem_with_question(params, seed, &format!("synthetic question (seed {seed})"))
}

/// Generates a dataset of independent problems with derived per-problem
/// seeds. Equal inputs produce bit-identical datasets.
pub fn generate_suite(
    n_problems: usize,
    params: &GenParams,
    seed: u64,
) -> Result<Dataset, BenchgenError> {
    params.validate()?;
    if n_problems == 0 {
        return Err(BenchgenError::InvalidParams("n_problems = 0".into()));
    }
    let problems = (0..n_problems)
        .map(|idx| {
            let problem_seed = derive_seed(seed, &["benchgen", &idx.to_string()]);
            generate_problem_with_question(
                params,
                problem_seed,
                &format!("synthetic question {idx:03}"),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        schema_version: SCHEMA_VERSION,
        feature_dim: params.feature_dim,
        problems,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::pool_scores;
    use crate::model::validate_problem;
    use crate::similarity::CosineScorer;

    #[test]
    fn default_problem_is_valid_and_sized() {
        let problem = generate_problem(&GenParams::default(), 42).unwrap();
        assert_eq!(problem.pool.len(), 64);
        assert_eq!(validate_problem(&problem), Vec::<String>::new());
        let gt = problem.ground_truth_hypothesis();
        assert_eq!(gt.components.len(), 5);
        assert_eq!(problem.ground_truth.critical_set.len(), 2);
    }

    #[test]
    fn generated_problems_validate_across_seeds() {
        let params = GenParams {
            n_candidates: 16,
            ..GenParams::default()
        };
        for seed in 0..1000 {
            let problem = generate_problem(&params, seed).unwrap();
            assert_eq!(
                validate_problem(&problem),
                Vec::<String>::new(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn ground_truth_is_unique_maximum() {
        for seed in [1u64, 7, 23, 99] {
            let problem = generate_problem(&GenParams::default(), seed).unwrap();
            let scores = pool_scores(&CosineScorer, &problem).unwrap();
            let gt_id = &problem.ground_truth.hypothesis_id;
            for (id, s) in &scores {
                if id == gt_id {
                    assert_eq!(*s, 1.0, "seed {seed}");
                } else {
                    assert!(*s < 1.0, "seed {seed}: negative {id} reached S = {s}");
                }
            }
        }
    }

    #[test]
    fn zero_mutation_rate_errors_out() {
        let params = GenParams {
            mutation_rate: 0.0,
            ..GenParams::default()
        };
        let err = generate_problem(&params, 5).unwrap_err();
        assert!(matches!(err, BenchgenError::Degenerate(_)));
    }

    #[test]
    fn equal_seeds_give_identical_datasets() {
        let params = GenParams {
            n_candidates: 8,
            ..GenParams::default()
        };
        let a = generate_suite(5, &params, 77).unwrap();
        let b = generate_suite(5, &params, 77).unwrap();
        assert_eq!(a, b);
        let c = generate_suite(5, &params, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn suite_of_51_problems_has_benchmark_shape() {
        let dataset = generate_suite(51, &GenParams::default(), 2024).unwrap();
        assert_eq!(dataset.problems.len(), 51);
        for problem in &dataset.problems {
            assert_eq!(problem.pool.len(), 64);
        }
        let questions: std::collections::BTreeSet<&str> = dataset
            .problems
            .iter()
            .map(|p| p.question.as_str())
            .collect();
        assert_eq!(questions.len(), 51);
    }

    #[test]
    fn invalid_params_rejected() {
        let params = GenParams {
            gt_components: 50,
            component_pool: 40,
            ..GenParams::default()
        };
        assert!(matches!(
            generate_problem(&params, 1),
            Err(BenchgenError::InvalidParams(_))
        ));
        let params = GenParams {
            critical_count: 0,
            ..GenParams::default()
        };
        assert!(params.validate().is_err());
    }

    #[test]
    fn difficulty_grows_with_mutation_rate() {
        let mean_negative_s = |rate: f64| -> f64 {
            let mut total = 0.0;
            let mut count = 0usize;
            for seed in 0..20 {
                let params = GenParams {
                    n_candidates: 32,
                    mutation_rate: rate,
                    ..GenParams::default()
                };
                let problem = generate_problem(&params, 1000 + seed).unwrap();
                let gt_id = problem.ground_truth.hypothesis_id.clone();
                for (id, s) in pool_scores(&CosineScorer, &problem).unwrap() {
                    if id != gt_id {
                        total += s;
                        count += 1;
                    }
                }
            }
            total / count as f64
        };
        let low = mean_negative_s(0.1);
        let mid = mean_negative_s(0.3);
        let high = mean_negative_s(0.6);
        assert!(low > mid, "mean S at 0.1 = {low} should exceed 0.3 = {mid}");
        assert!(mid > high, "mean S at 0.3 = {mid} should exceed 0.6 = {high}");
    }
}
