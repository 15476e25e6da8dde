//! Baseline policies: uniform random search, feedback-free prior
//! ranking, and the prior-ranking-with-skip-penalty ablations.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::similarity::SimilarityReport;

use super::clustering::ComponentKey;
use super::{Action, Policy, PolicyError, PoolView};

/// Uniform random draw over the untested hypotheses, seeded.
pub struct UninformedPolicy {
    untested: BTreeSet<String>,
    rng: ChaCha8Rng,
}

impl UninformedPolicy {
    pub fn new(view: &PoolView, seed: u64) -> Self {
        UninformedPolicy {
            untested: view.hypotheses.iter().map(|h| h.id.clone()).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for UninformedPolicy {
    fn name(&self) -> &str {
        "uninformed"
    }

    fn next(&mut self) -> Result<Action, PolicyError> {
        if self.untested.is_empty() {
            return Err(PolicyError::PoolExhausted);
        }
        let ids: Vec<&String> = self.untested.iter().collect();
        let chosen = ids[self.rng.random_range(0..ids.len())].clone();
        self.untested.remove(&chosen);
        Ok(Action {
            hypothesis_id: chosen,
        })
    }

    fn update(&mut self, _action: &Action, _reward: f64, _feedback: Option<&SimilarityReport>) {}
}

/// Fixed ordering by prior score, computed once and never revised by
/// feedback: descending prior, ties by ascending hypothesis id.
pub struct PreExperimentPolicy {
    order: Vec<String>,
    cursor: usize,
}

impl PreExperimentPolicy {
    pub fn new(view: &PoolView) -> Self {
        PreExperimentPolicy {
            order: view.prior_ranking(),
            cursor: 0,
        }
    }
}

impl Policy for PreExperimentPolicy {
    fn name(&self) -> &str {
        "preexperiment"
    }

    fn next(&mut self) -> Result<Action, PolicyError> {
        let chosen = self
            .order
            .get(self.cursor)
            .ok_or(PolicyError::PoolExhausted)?
            .clone();
        self.cursor += 1;
        Ok(Action {
            hypothesis_id: chosen,
        })
    }

    fn update(&mut self, _action: &Action, _reward: f64, _feedback: Option<&SimilarityReport>) {}
}

/// Prior ranking with a component-overlap skip penalty, no aggregated
/// component estimates (the "no clustering, no analysis" ablation).
///
/// Raw history is retained unaggregated. At each step, untested
/// hypotheses sharing at least half of their components with any tested
/// hypothesis whose reward fell below the median of observed rewards are
/// demoted behind the rest; ordering within each group stays the prior
/// ranking. With `window` set, only the most recent entries count as
/// observed history (the limited-feedback ablation).
pub struct SkipPenaltyPolicy {
    name: &'static str,
    priors: BTreeMap<String, f64>,
    comp_keys: BTreeMap<String, BTreeSet<ComponentKey>>,
    untested: BTreeSet<String>,
    tested: Vec<(String, f64)>,
    window: Option<usize>,
}

impl SkipPenaltyPolicy {
    pub fn new(view: &PoolView, window: Option<usize>, name: &'static str) -> Self {
        let comp_keys = view
            .hypotheses
            .iter()
            .map(|h| {
                (
                    h.id.clone(),
                    h.components.iter().map(ComponentKey::of).collect(),
                )
            })
            .collect();
        SkipPenaltyPolicy {
            name,
            priors: view.priors.clone(),
            comp_keys,
            untested: view.hypotheses.iter().map(|h| h.id.clone()).collect(),
            tested: Vec::new(),
            window,
        }
    }

    fn history(&self) -> &[(String, f64)] {
        let start = match self.window {
            Some(w) => self.tested.len().saturating_sub(w),
            None => 0,
        };
        &self.tested[start..]
    }

    fn median(rewards: &mut Vec<f64>) -> f64 {
        rewards.sort_by(|a, b| a.total_cmp(b));
        let n = rewards.len();
        if n % 2 == 1 {
            rewards[n / 2]
        } else {
            (rewards[n / 2 - 1] + rewards[n / 2]) / 2.0
        }
    }

    fn penalized(&self, hypothesis_id: &str, low_reward_ids: &[&String]) -> bool {
        let keys = &self.comp_keys[hypothesis_id];
        if keys.is_empty() {
            return false;
        }
        low_reward_ids.iter().any(|tested_id| {
            let tested_keys = &self.comp_keys[tested_id.as_str()];
            let shared = keys.intersection(tested_keys).count();
            shared * 2 >= keys.len()
        })
    }

    fn prior_of(&self, id: &str) -> f64 {
        self.priors.get(id).copied().unwrap_or(0.0)
    }
}

impl Policy for SkipPenaltyPolicy {
    fn name(&self) -> &str {
        self.name
    }

    fn next(&mut self) -> Result<Action, PolicyError> {
        if self.untested.is_empty() {
            return Err(PolicyError::PoolExhausted);
        }
        let history = self.history();
        let low_reward_ids: Vec<&String> = if history.is_empty() {
            Vec::new()
        } else {
            let mut rewards: Vec<f64> = history.iter().map(|(_, r)| *r).collect();
            let median = Self::median(&mut rewards);
            history
                .iter()
                .filter(|(_, r)| *r < median)
                .map(|(id, _)| id)
                .collect()
        };

        let mut ranked: Vec<&String> = self.untested.iter().collect();
        ranked.sort_by(|a, b| {
            self.prior_of(b)
                .total_cmp(&self.prior_of(a))
                .then_with(|| a.cmp(b))
        });
        let chosen = ranked
            .iter()
            .find(|id| !self.penalized(id, &low_reward_ids))
            .or(ranked.first())
            .expect("untested is non-empty")
            .to_string();
        self.untested.remove(&chosen);
        Ok(Action {
            hypothesis_id: chosen,
        })
    }

    fn update(&mut self, action: &Action, reward: f64, _feedback: Option<&SimilarityReport>) {
        self.tested.push((action.hypothesis_id.clone(), reward));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::testutil::{component, hypothesis, view_with_priors};

    fn tiny_view() -> PoolView {
        view_with_priors(
            vec![
                hypothesis("h0", vec![component("a", "t", &[1.0])]),
                hypothesis("h1", vec![component("b", "u", &[1.0])]),
                hypothesis("h2", vec![component("c", "v", &[1.0])]),
            ],
            &[("h0", 0.2), ("h1", 0.8), ("h2", 0.5)],
        )
    }

    #[test]
    fn uninformed_single_untested_is_forced() {
        let view = view_with_priors(
            vec![hypothesis("only", vec![component("a", "t", &[1.0])])],
            &[("only", 0.5)],
        );
        let mut policy = UninformedPolicy::new(&view, 3);
        assert_eq!(policy.next().unwrap().hypothesis_id, "only");
        assert!(matches!(policy.next(), Err(PolicyError::PoolExhausted)));
    }

    #[test]
    fn uninformed_is_seed_deterministic() {
        let view = tiny_view();
        let sequence = |seed: u64| {
            let mut policy = UninformedPolicy::new(&view, seed);
            (0..3)
                .map(|_| policy.next().unwrap().hypothesis_id)
                .collect::<Vec<_>>()
        };
        assert_eq!(sequence(9), sequence(9));
    }

    #[test]
    fn preexperiment_follows_prior_order() {
        let view = tiny_view();
        let mut policy = PreExperimentPolicy::new(&view);
        let order: Vec<String> = (0..3).map(|_| policy.next().unwrap().hypothesis_id).collect();
        assert_eq!(order, ["h1", "h2", "h0"]);
    }

    #[test]
    fn preexperiment_constant_prior_falls_back_to_id_order() {
        let view = view_with_priors(
            vec![
                hypothesis("h2", vec![component("a", "t", &[1.0])]),
                hypothesis("h0", vec![component("b", "t", &[0.5])]),
                hypothesis("h1", vec![component("c", "t", &[0.2])]),
            ],
            &[("h0", 0.5), ("h1", 0.5), ("h2", 0.5)],
        );
        let mut policy = PreExperimentPolicy::new(&view);
        let order: Vec<String> = (0..3).map(|_| policy.next().unwrap().hypothesis_id).collect();
        assert_eq!(order, ["h0", "h1", "h2"]);
    }

    fn shared_component_view() -> PoolView {
        let shared_a = component("a", "t", &[1.0, 0.0]);
        let shared_b = component("b", "u", &[0.0, 1.0]);
        let lone = component("c", "v", &[1.0, 1.0]);
        view_with_priors(
            vec![
                // h0 and h1 share both components; h2 is unrelated
                hypothesis("h0", vec![shared_a.clone(), shared_b.clone()]),
                hypothesis("h1", vec![shared_a.clone(), shared_b.clone()]),
                hypothesis("h2", vec![lone.clone()]),
                hypothesis("h3", vec![shared_a.clone(), lone.clone()]),
            ],
            &[("h0", 0.9), ("h1", 0.8), ("h2", 0.7), ("h3", 0.6)],
        )
    }

    #[test]
    fn skip_penalty_reduces_to_prior_rank_without_history() {
        let view = shared_component_view();
        let mut policy = SkipPenaltyPolicy::new(&view, None, "csx_wo_clustering_analysis");
        assert_eq!(policy.next().unwrap().hypothesis_id, "h0");
    }

    #[test]
    fn low_reward_neighbor_gets_demoted() {
        let view = shared_component_view();
        let mut policy = SkipPenaltyPolicy::new(&view, None, "csx_wo_clustering_analysis");
        // h0 tested at a low reward, h2 at a high one: median is 0.5,
        // so h0 counts as a low-reward tested hypothesis. h1 shares
        // 2/2 components with h0 and is demoted; h3 shares 1/2 and is
        // demoted too (>= half). Next pick therefore skips to h2... but
        // h2 was already tested, so the survivor order decides.
        policy.untested.remove("h0");
        policy.untested.remove("h2");
        policy.update(
            &Action {
                hypothesis_id: "h0".into(),
            },
            0.2,
            None,
        );
        policy.update(
            &Action {
                hypothesis_id: "h2".into(),
            },
            0.8,
            None,
        );
        // both remaining candidates are penalized; the fallback keeps
        // the prior order and picks h1
        assert_eq!(policy.next().unwrap().hypothesis_id, "h1");
    }

    #[test]
    fn penalty_skips_to_unrelated_candidate() {
        let shared_a = component("a", "t", &[1.0, 0.0]);
        let shared_b = component("b", "u", &[0.0, 1.0]);
        let lone1 = component("c", "v", &[1.0, 1.0]);
        let lone2 = component("d", "w", &[0.5, 0.5]);
        let view = view_with_priors(
            vec![
                hypothesis("h0", vec![shared_a.clone(), shared_b.clone()]),
                hypothesis("h1", vec![shared_a.clone(), shared_b.clone()]),
                hypothesis("h2", vec![lone1.clone(), lone2.clone()]),
            ],
            &[("h0", 0.9), ("h1", 0.8), ("h2", 0.1)],
        );
        let mut policy = SkipPenaltyPolicy::new(&view, None, "csx_wo_clustering_analysis");
        policy.untested.remove("h0");
        policy.update(
            &Action {
                hypothesis_id: "h0".into(),
            },
            0.1,
            None,
        );
        // single observation: median = 0.1, reward < median is false,
        // nothing penalized yet -> prior order picks h1
        assert_eq!(policy.next().unwrap().hypothesis_id, "h1");
        policy.update(
            &Action {
                hypothesis_id: "h1".into(),
            },
            0.9,
            None,
        );
        // now median = 0.5 and h0 is low; h2 shares nothing and
        // remains the only candidate anyway
        assert_eq!(policy.next().unwrap().hypothesis_id, "h2");
    }

    #[test]
    fn window_limits_visible_history() {
        let view = shared_component_view();
        let mut policy = SkipPenaltyPolicy::new(&view, Some(2), "csx_wo_clustering_analysis_ff");
        for (id, reward) in [("x1", 0.1), ("x2", 0.2), ("x3", 0.9), ("x4", 0.8)] {
            policy.tested.push((id.to_string(), reward));
        }
        assert_eq!(policy.history().len(), 2);
        assert_eq!(policy.history()[0].0, "x3");
    }

    #[test]
    fn median_of_even_history_is_midpoint() {
        let mut rewards = vec![0.4, 0.1, 0.9, 0.6];
        assert_eq!(SkipPenaltyPolicy::median(&mut rewards), 0.5);
        let mut rewards = vec![0.3, 0.9, 0.1];
        assert_eq!(SkipPenaltyPolicy::median(&mut rewards), 0.3);
    }
}
