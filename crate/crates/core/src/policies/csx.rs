//! The component-clustering feedback policy and its no-clustering
//! ablation.
//!
//! The policy realizes the decompose / classify / cluster / select loop
//! as a component-level bandit. Each tested hypothesis credits its
//! scalar reward uniformly to all of its components; components are
//! classified effective / uncertain / ineffective by running mean, and
//! ineffective ones are pruned from cluster scoring. Selection is
//! two-staged: an exploration-bonused cluster pick, then the carrier
//! hypothesis with the highest optimistic component-value sum.

use std::collections::{BTreeMap, BTreeSet};

use crate::similarity::SimilarityReport;

use super::clustering::{cluster_components, Cluster, ComponentKey};
use super::{Action, Policy, PolicyError, PolicyParams, PoolView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ComponentStatus {
    Effective,
    Uncertain,
    Ineffective,
}

#[derive(Debug, Clone, Copy)]
struct ValueEstimate {
    mean: f64,
    count: u32,
}

/// Clustering bandit policy. With `use_clustering = false` the cluster
/// stage is removed and the hypothesis-selection criterion is applied
/// globally (the first ablation). Removing clustering also removes
/// cross-hypothesis component identification: content keys and
/// similarity grouping are the machinery that makes one candidate's
/// evidence speak for another, so the ablated variant tracks component
/// values per hypothesis-local instance.
pub struct CsxPolicy {
    name: &'static str,
    params: PolicyParams,
    use_clustering: bool,
    /// Component keys per hypothesis id, deduplicated, deterministic.
    comp_keys: BTreeMap<String, Vec<ComponentKey>>,
    clusters: Vec<Cluster>,
    priors: BTreeMap<String, f64>,
    untested: BTreeSet<String>,
    tested: Vec<(String, f64)>,
    values: BTreeMap<ComponentKey, ValueEstimate>,
    status: BTreeMap<ComponentKey, ComponentStatus>,
}

impl CsxPolicy {
    pub fn new(
        view: &PoolView,
        params: &PolicyParams,
        use_clustering: bool,
    ) -> Result<Self, PolicyError> {
        let mut comp_keys = BTreeMap::new();
        for hypothesis in &view.hypotheses {
            let mut keys: Vec<ComponentKey> = hypothesis
                .components
                .iter()
                .map(|c| {
                    if use_clustering {
                        ComponentKey::of(c)
                    } else {
                        ComponentKey::scoped(&hypothesis.id, c)
                    }
                })
                .collect();
            keys.sort();
            keys.dedup();
            comp_keys.insert(hypothesis.id.clone(), keys);
        }
        let clusters = if use_clustering {
            cluster_components(&view.hypotheses, params.tau)?
        } else {
            Vec::new()
        };
        Ok(CsxPolicy {
            name: if use_clustering {
                "csx"
            } else {
                "csx_wo_clustering"
            },
            params: params.clone(),
            use_clustering,
            comp_keys,
            clusters,
            priors: view.priors.clone(),
            untested: view.hypotheses.iter().map(|h| h.id.clone()).collect(),
            tested: Vec::new(),
            values: BTreeMap::new(),
            status: BTreeMap::new(),
        })
    }

    fn status_of(&self, key: &ComponentKey) -> ComponentStatus {
        self.status
            .get(key)
            .copied()
            .unwrap_or(ComponentStatus::Uncertain)
    }

    fn estimate_of(&self, key: &ComponentKey) -> f64 {
        self.values
            .get(key)
            .map(|v| v.mean)
            .unwrap_or(self.params.v0)
    }

    fn count_of(&self, key: &ComponentKey) -> u32 {
        self.values.get(key).map(|v| v.count).unwrap_or(0)
    }

    /// Stage A: exploration-bonused cluster scores. The mean pools the
    /// value estimates of the cluster's observed members (estimates
    /// exist only for observed components); ineffective members are
    /// pruned from scoring, and a cluster whose members are all pruned
    /// is skipped. Unvisited clusters score infinity; ties resolve to
    /// the smallest cluster id.
    fn select_cluster(&self) -> Option<&Cluster> {
        let t = (self.tested.len() + 1) as f64;
        let mut best: Option<(&Cluster, f64)> = None;
        for cluster in &self.clusters {
            let scoring: Vec<&ComponentKey> = cluster
                .members
                .iter()
                .filter(|k| self.status_of(k) != ComponentStatus::Ineffective)
                .collect();
            if scoring.is_empty() {
                continue;
            }
            let observed: Vec<&&ComponentKey> =
                scoring.iter().filter(|k| self.count_of(k) > 0).collect();
            let n: u32 = observed.iter().map(|k| self.count_of(k)).sum();
            let score = if n == 0 {
                f64::INFINITY
            } else {
                let mean = observed.iter().map(|k| self.estimate_of(k)).sum::<f64>()
                    / observed.len() as f64;
                mean + self.params.c * (t.ln() / n as f64).sqrt()
            };
            // strict comparison keeps the smallest cluster id on ties,
            // clusters being iterated in id order
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((cluster, score));
            }
        }
        best.map(|(cluster, _)| cluster)
    }

    /// Stage B criterion: sum of component value estimates with the
    /// optimistic prior for unobserved components.
    fn hypothesis_value(&self, hypothesis_id: &str) -> f64 {
        self.comp_keys[hypothesis_id]
            .iter()
            .map(|k| self.estimate_of(k))
            .sum()
    }

    fn argmax_value<'a>(&self, candidates: impl Iterator<Item = &'a String>) -> Option<String> {
        let mut best: Option<(&'a String, f64)> = None;
        for id in candidates {
            let value = self.hypothesis_value(id);
            let better = match best {
                None => true,
                Some((bid, bv)) => value > bv || (value == bv && id < bid),
            };
            if better {
                best = Some((id, value));
            }
        }
        best.map(|(id, _)| id.clone())
    }

    fn argmax_prior(&self) -> Option<String> {
        let mut best: Option<(&String, f64)> = None;
        for id in &self.untested {
            let prior = self.priors.get(id).copied().unwrap_or(0.0);
            let better = match best {
                None => true,
                Some((bid, bp)) => prior > bp || (prior == bp && id < bid),
            };
            if better {
                best = Some((id, prior));
            }
        }
        best.map(|(id, _)| id.clone())
    }

    /// Rebuilds component estimates and statuses from the summary
    /// window (full history when unset). Rebuilding from scratch keeps
    /// the windowed estimates exactly equal to a fresh state fed only
    /// the window.
    fn rebuild(&mut self) {
        let start = match self.params.summary_window {
            Some(w) => self.tested.len().saturating_sub(w),
            None => 0,
        };
        self.values.clear();
        for (hypothesis_id, reward) in &self.tested[start..] {
            for key in &self.comp_keys[hypothesis_id] {
                let entry = self.values.entry(key.clone()).or_insert(ValueEstimate {
                    mean: 0.0,
                    count: 0,
                });
                entry.count += 1;
                entry.mean += (reward - entry.mean) / entry.count as f64;
            }
        }
        self.status.clear();
        for (key, estimate) in &self.values {
            let status = if estimate.count >= 2 && estimate.mean >= self.params.theta_eff {
                ComponentStatus::Effective
            } else if estimate.count >= 2 && estimate.mean <= self.params.theta_ineff {
                ComponentStatus::Ineffective
            } else {
                ComponentStatus::Uncertain
            };
            self.status.insert(key.clone(), status);
        }
    }

    #[cfg(test)]
    pub(crate) fn status_snapshot(&self) -> BTreeMap<String, (f64, u32, ComponentStatus)> {
        self.values
            .iter()
            .map(|(k, v)| {
                (
                    k.as_str().to_string(),
                    (v.mean, v.count, self.status_of(k)),
                )
            })
            .collect()
    }
}

impl Policy for CsxPolicy {
    fn name(&self) -> &str {
        self.name
    }

    fn next(&mut self) -> Result<Action, PolicyError> {
        if self.untested.is_empty() {
            return Err(PolicyError::PoolExhausted);
        }
        let chosen = if self.use_clustering {
            let carrier_pick = self.select_cluster().and_then(|cluster| {
                let carriers: Vec<&String> = self
                    .untested
                    .iter()
                    .filter(|id| {
                        self.comp_keys[*id]
                            .iter()
                            .any(|k| cluster.members.contains(k))
                    })
                    .collect();
                self.argmax_value(carriers.into_iter())
            });
            // fall back to the global criterion when the chosen cluster
            // has no untested carriers (or every cluster is pruned)
            match carrier_pick {
                Some(id) => id,
                None => self
                    .argmax_value(self.untested.iter())
                    .expect("untested is non-empty"),
            }
        } else if self.tested.is_empty() {
            // no feedback yet: the component estimates are all at the
            // optimistic prior, so rank by prior knowledge instead
            self.argmax_prior().expect("untested is non-empty")
        } else {
            self.argmax_value(self.untested.iter())
                .expect("untested is non-empty")
        };
        self.untested.remove(&chosen);
        Ok(Action {
            hypothesis_id: chosen,
        })
    }

    fn update(&mut self, action: &Action, reward: f64, _feedback: Option<&SimilarityReport>) {
        self.tested.push((action.hypothesis_id.clone(), reward));
        self.rebuild();
    }
}
