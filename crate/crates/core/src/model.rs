//! Hypothesis-space data model and dataset ingestion.
//!
//! A [`ResearchProblem`] couples a candidate pool with a hidden
//! [`GroundTruthSpec`]; a [`Dataset`] is a versioned collection of
//! problems. Datasets and problems are immutable after load and safe to
//! share read-only across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Current dataset schema version. Unknown versions are rejected.
pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance on the ground-truth weight sum.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A functional component of a hypothesis: a mechanism category plus a
/// fixed-length feature vector in `[0,1]` that serves as the similarity
/// substrate for the deterministic scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub mechanism_tag: String,
    pub features: Vec<f64>,
}

/// A candidate solution decomposed into components.
///
/// `actual` is an optional experimentally reported outcome used only by
/// simulator validation; it is stripped from anything a policy can see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual: Option<f64>,
}

impl Hypothesis {
    /// Component ids in pool order.
    pub fn component_ids(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.id.as_str()).collect()
    }
}

/// The hidden optimum: which pool member is the ground truth, the
/// importance weight of each of its components, and the critical subset
/// whose absence zeroes the aggregate score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub hypothesis_id: String,
    pub weights: BTreeMap<String, f64>,
    pub critical_set: BTreeSet<String>,
}

/// One research question with its candidate pool and hidden optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchProblem {
    pub question: String,
    pub pool: Vec<Hypothesis>,
    pub ground_truth: GroundTruthSpec,
    pub feature_dim: usize,
}

impl ResearchProblem {
    /// The pool member named by `ground_truth.hypothesis_id`.
    ///
    /// Panics if the problem is invalid; run [`validate_problem`] first on
    /// untrusted data.
    pub fn ground_truth_hypothesis(&self) -> &Hypothesis {
        self.pool
            .iter()
            .find(|h| h.id == self.ground_truth.hypothesis_id)
            .expect("validated problem has its ground truth in the pool")
    }

    pub fn hypothesis(&self, id: &str) -> Option<&Hypothesis> {
        self.pool.iter().find(|h| h.id == id)
    }
}

/// A versioned collection of research problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub feature_dim: usize,
    pub problems: Vec<ResearchProblem>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("problem {problem_index} invalid: {violations:?}")]
    Validation {
        problem_index: usize,
        violations: Vec<String>,
    },
}

/// Loads and fully validates a dataset file.
///
/// Failure modes are kept distinct: unreadable file, malformed JSON,
/// schema mismatch (missing field or unknown version), and invariant
/// violations reported with the offending problem index and field path.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let raw = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&raw)
}

/// Parses and validates dataset JSON from a string.
pub fn parse_dataset(raw: &str) -> Result<Dataset, DatasetError> {
    let value: serde_json::Value = serde_json::from_str(raw).map_err(DatasetError::Parse)?;

    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DatasetError::Schema("missing schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(DatasetError::Schema(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }

    let dataset: Dataset =
        serde_json::from_value(value).map_err(|e| DatasetError::Schema(e.to_string()))?;
    validate_dataset(&dataset)?;
    Ok(dataset)
}

/// Validates every problem; the first invalid problem is reported.
pub fn validate_dataset(dataset: &Dataset) -> Result<(), DatasetError> {
    let mut questions = BTreeSet::new();
    for (idx, problem) in dataset.problems.iter().enumerate() {
        if !questions.insert(problem.question.as_str()) {
            return Err(DatasetError::Validation {
                problem_index: idx,
                violations: vec![format!("duplicate question {:?}", problem.question)],
            });
        }
        if problem.feature_dim != dataset.feature_dim {
            return Err(DatasetError::Validation {
                problem_index: idx,
                violations: vec![format!(
                    "feature_dim: problem declares {} but dataset declares {}",
                    problem.feature_dim, dataset.feature_dim
                )],
            });
        }
        let violations = validate_problem(problem);
        if !violations.is_empty() {
            return Err(DatasetError::Validation {
                problem_index: idx,
                violations,
            });
        }
    }
    Ok(())
}

/// Checks every structural invariant of a problem and returns the list of
/// violations (empty when valid). Violations carry a field path so dataset
/// errors are actionable.
pub fn validate_problem(problem: &ResearchProblem) -> Vec<String> {
    let mut violations = Vec::new();

    if problem.pool.is_empty() {
        violations.push("pool: empty".into());
        return violations;
    }

    let mut hypothesis_ids = BTreeSet::new();
    for (h_idx, hypothesis) in problem.pool.iter().enumerate() {
        if !hypothesis_ids.insert(hypothesis.id.as_str()) {
            violations.push(format!(
                "pool[{h_idx}].id: duplicate hypothesis id {:?}",
                hypothesis.id
            ));
        }
        if hypothesis.components.is_empty() {
            violations.push(format!("pool[{h_idx}].components: empty"));
        }
        let mut component_ids = BTreeSet::new();
        for (c_idx, component) in hypothesis.components.iter().enumerate() {
            if !component_ids.insert(component.id.as_str()) {
                violations.push(format!(
                    "pool[{h_idx}].components[{c_idx}].id: duplicate component id {:?}",
                    component.id
                ));
            }
            if component.features.len() != problem.feature_dim {
                violations.push(format!(
                    "pool[{h_idx}].components[{c_idx}].features: length {} != feature_dim {}",
                    component.features.len(),
                    problem.feature_dim
                ));
            }
            for (f_idx, &f) in component.features.iter().enumerate() {
                if !(0.0..=1.0).contains(&f) || f.is_nan() {
                    violations.push(format!(
                        "pool[{h_idx}].components[{c_idx}].features[{f_idx}]: {f} outside [0,1]"
                    ));
                }
            }
        }
    }

    let gt = &problem.ground_truth;
    let gt_hypothesis = problem.pool.iter().find(|h| h.id == gt.hypothesis_id);
    match gt_hypothesis {
        None => violations.push(format!(
            "ground_truth.hypothesis_id: {:?} not in pool",
            gt.hypothesis_id
        )),
        Some(h) => {
            let component_ids: BTreeSet<&str> =
                h.components.iter().map(|c| c.id.as_str()).collect();
            let weight_ids: BTreeSet<&str> = gt.weights.keys().map(String::as_str).collect();
            if component_ids != weight_ids {
                violations.push(format!(
                    "ground_truth.weights: keys {:?} do not cover ground-truth components {:?}",
                    weight_ids, component_ids
                ));
            }
        }
    }

    let weight_sum: f64 = gt.weights.values().sum();
    if (weight_sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        violations.push(format!(
            "ground_truth.weights: sum {weight_sum} != 1 (tolerance {WEIGHT_SUM_TOLERANCE})"
        ));
    }
    for (id, &w) in &gt.weights {
        if w < 0.0 || w.is_nan() {
            violations.push(format!("ground_truth.weights[{id:?}]: {w} negative"));
        }
    }
    for id in &gt.critical_set {
        if !gt.weights.contains_key(id) {
            violations.push(format!(
                "ground_truth.critical_set: {id:?} not among weighted components"
            ));
        }
    }

    violations
}

/// Serializes a dataset as pretty JSON. `serde_json` emits the shortest
/// decimal that round-trips each f64, so no precision is lost.
pub fn dataset_to_json(dataset: &Dataset) -> String {
    serde_json::to_string_pretty(dataset).expect("dataset serializes")
}

/// Writes a dataset file.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, dataset_to_json(dataset)).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn component(id: &str, tag: &str, features: &[f64]) -> Component {
        Component {
            id: id.into(),
            mechanism_tag: tag.into(),
            features: features.to_vec(),
        }
    }

    pub(crate) fn minimal_problem() -> ResearchProblem {
        let gt = Hypothesis {
            id: "h0".into(),
            text: None,
            components: vec![
                component("a", "redox", &[1.0, 0.0]),
                component("b", "matrix", &[0.0, 1.0]),
            ],
            actual: None,
        };
        let other = Hypothesis {
            id: "h1".into(),
            text: Some("candidate".into()),
            components: vec![component("a", "redox", &[0.5, 0.5])],
            actual: None,
        };
        ResearchProblem {
            question: "q0".into(),
            pool: vec![gt, other],
            ground_truth: GroundTruthSpec {
                hypothesis_id: "h0".into(),
                weights: BTreeMap::from([("a".into(), 0.6), ("b".into(), 0.4)]),
                critical_set: BTreeSet::from(["a".into()]),
            },
            feature_dim: 2,
        }
    }

    fn minimal_dataset() -> Dataset {
        Dataset {
            schema_version: SCHEMA_VERSION,
            feature_dim: 2,
            problems: vec![minimal_problem()],
        }
    }

    #[test]
    fn minimal_dataset_round_trips() {
        let dataset = minimal_dataset();
        let json = dataset_to_json(&dataset);
        let parsed = parse_dataset(&json).unwrap();
        assert_eq!(parsed, dataset);
        assert_eq!(parsed.problems.len(), 1);
    }

    #[test]
    fn valid_problem_has_no_violations() {
        assert_eq!(validate_problem(&minimal_problem()), Vec::<String>::new());
    }

    #[test]
    fn weight_sum_off_by_tenth_is_rejected() {
        let mut dataset = minimal_dataset();
        dataset.problems[0]
            .ground_truth
            .weights
            .insert("a".into(), 0.5);
        let json = dataset_to_json(&dataset);
        let err = parse_dataset(&json).unwrap_err();
        match err {
            DatasetError::Validation {
                problem_index,
                violations,
            } => {
                assert_eq!(problem_index, 0);
                assert!(
                    violations.iter().any(|v| v.contains("sum 0.9")),
                    "violations should name the sum: {violations:?}"
                );
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn ground_truth_missing_from_pool_is_rejected() {
        let mut dataset = minimal_dataset();
        dataset.problems[0].ground_truth.hypothesis_id = "h9".into();
        let err = parse_dataset(&dataset_to_json(&dataset)).unwrap_err();
        assert!(matches!(err, DatasetError::Validation { .. }));
    }

    #[test]
    fn duplicate_hypothesis_id_reported_once() {
        let mut problem = minimal_problem();
        problem.pool[1].id = "h0".into();
        let violations = validate_problem(&problem);
        assert_eq!(
            violations
                .iter()
                .filter(|v| v.contains("duplicate hypothesis id"))
                .count(),
            1
        );
        assert!(violations.iter().any(|v| v.contains("\"h0\"")));
    }

    #[test]
    fn unknown_critical_component_reported() {
        let mut problem = minimal_problem();
        problem.ground_truth.critical_set.insert("zz".into());
        let violations = validate_problem(&problem);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("critical_set"));
        assert!(violations[0].contains("zz"));
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let mut dataset = minimal_dataset();
        dataset.schema_version = 2;
        let err = parse_dataset(&dataset_to_json(&dataset)).unwrap_err();
        match err {
            DatasetError::Schema(msg) => assert!(msg.contains("unsupported schema_version 2")),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            parse_dataset("{not json"),
            Err(DatasetError::Parse(_))
        ));
    }

    #[test]
    fn feature_out_of_range_reported_with_path() {
        let mut problem = minimal_problem();
        problem.pool[0].components[0].features[1] = 1.5;
        let violations = validate_problem(&problem);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("pool[0].components[0].features[1]"));
    }
}
