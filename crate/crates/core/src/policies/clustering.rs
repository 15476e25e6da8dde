//! Functional clustering of components across the candidate pool.
//!
//! Components are identified by content, not by id: two hypotheses
//! carrying an identical (tag, features) component share one key, which
//! is what lets reward evidence transfer between structurally related
//! candidates. Clustering groups keys by exact mechanism tag and then
//! single-link-merges keys whose pairwise similarity reaches the
//! threshold.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Component, Hypothesis};
use crate::similarity::{component_similarity, SimilarityError};

/// Content-based component identity: mechanism tag plus the exact
/// feature vector. Ordered, hashable, deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentKey(String);

impl ComponentKey {
    pub fn of(component: &Component) -> Self {
        let mut repr = component.mechanism_tag.clone();
        repr.push('|');
        for (i, f) in component.features.iter().enumerate() {
            if i > 0 {
                repr.push(',');
            }
            // shortest round-trip decimal: exact content identity
            repr.push_str(&format!("{f:?}"));
        }
        ComponentKey(repr)
    }

    /// A key private to one hypothesis: evidence attached to it never
    /// transfers to other candidates. This is what component identity
    /// degrades to when the clustering stage is removed.
    pub fn scoped(hypothesis_id: &str, component: &Component) -> Self {
        let inner = Self::of(component);
        ComponentKey(format!("{hypothesis_id}#{}", inner.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// A cluster of component keys. The id is the smallest member key, which
/// gives clusters a deterministic total order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: ComponentKey,
    pub members: BTreeSet<ComponentKey>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Partitions all distinct component keys in the pool.
///
/// Keys are grouped by exact mechanism tag; within a tag, keys with
/// pairwise similarity `>= tau` are merged transitively (single link).
/// The result is sorted by cluster id and covers every key exactly once.
pub fn cluster_components(
    hypotheses: &[Hypothesis],
    tau: f64,
) -> Result<Vec<Cluster>, SimilarityError> {
    // one representative component per distinct key, in key order
    let mut representatives: BTreeMap<ComponentKey, &Component> = BTreeMap::new();
    for hypothesis in hypotheses {
        for component in &hypothesis.components {
            representatives
                .entry(ComponentKey::of(component))
                .or_insert(component);
        }
    }
    let keys: Vec<&ComponentKey> = representatives.keys().collect();
    let components: Vec<&Component> = representatives.values().copied().collect();

    let mut uf = UnionFind::new(keys.len());
    for i in 0..keys.len() {
        for j in (i + 1)..keys.len() {
            if components[i].mechanism_tag != components[j].mechanism_tag {
                continue;
            }
            if component_similarity(components[i], components[j])? >= tau {
                uf.union(i, j);
            }
        }
    }

    let mut grouped: BTreeMap<usize, BTreeSet<ComponentKey>> = BTreeMap::new();
    for i in 0..keys.len() {
        let root = uf.find(i);
        grouped.entry(root).or_default().insert(keys[i].clone());
    }

    let mut clusters: Vec<Cluster> = grouped
        .into_values()
        .map(|members| Cluster {
            id: members.iter().next().expect("non-empty cluster").clone(),
            members,
        })
        .collect();
    clusters.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(clusters)
}
