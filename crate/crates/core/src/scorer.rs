//! Client for an external similarity service, with a content-addressed
//! disk cache and a replay mode that never touches the network.
//!
//! The service contract is a single endpoint, `POST /v1/similarity`,
//! taking `{"question", "gt_component", "candidate_component"}` and
//! returning `{"s": number, "rationale": string?}` with HTTP 200 on
//! success. Responses outside `[0,1]` are protocol errors and are never
//! cached. Cache entries are one JSON file per request hash, written
//! atomically (temp file + rename), so concurrent readers always observe
//! complete entries.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::Component;
use crate::similarity::{ComponentScorer, SimilarityError};

const BACKOFF_BASE_MS: u64 = 100;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("network error after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cache I/O at {path}: {message}")]
    CacheIo { path: String, message: String },
    #[error("replay miss for request {request_id}")]
    ReplayMiss { request_id: String },
    #[error("cache directory {0} does not exist")]
    MissingCacheDir(String),
}

impl From<ScorerError> for SimilarityError {
    fn from(err: ScorerError) -> Self {
        SimilarityError::Scorer(err.to_string())
    }
}

/// A similarity judgment request. The request id is a stable content
/// hash of the canonical serialization, so identical questions and
/// component pairs share a cache entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub question: String,
    pub gt_component: Component,
    pub candidate_component: Component,
}

impl ScoreRequest {
    pub fn new(question: &str, gt: &Component, candidate: &Component) -> Self {
        ScoreRequest {
            question: question.to_string(),
            gt_component: gt.clone(),
            candidate_component: candidate.clone(),
        }
    }

    /// SHA-256 of the canonical JSON serialization, hex-encoded.
    pub fn request_id(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl ScoreResponse {
    fn validate(&self) -> Result<(), ScorerError> {
        if !(0.0..=1.0).contains(&self.s) || self.s.is_nan() {
            return Err(ScorerError::Protocol(format!(
                "similarity {} outside [0,1]",
                self.s
            )));
        }
        Ok(())
    }
}

fn cache_file(dir: &Path, request_id: &str) -> PathBuf {
    dir.join(format!("{request_id}.json"))
}

fn cache_lookup(dir: &Path, request_id: &str) -> Result<Option<ScoreResponse>, ScorerError> {
    let path = cache_file(dir, request_id);
    let raw = match fs::read_to_string(&path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => {
            return Err(ScorerError::CacheIo {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        }
    };
    let response: ScoreResponse = serde_json::from_str(&raw).map_err(|e| ScorerError::CacheIo {
        path: path.display().to_string(),
        message: format!("corrupt cache entry: {e}"),
    })?;
    response.validate()?;
    Ok(Some(response))
}

/// Write-temp-then-rename so a concurrent reader never sees a partial
/// entry.
fn cache_store(dir: &Path, request_id: &str, response: &ScoreResponse) -> Result<(), ScorerError> {
    let path = cache_file(dir, request_id);
    let tmp = dir.join(format!(".{request_id}.tmp-{}", std::process::id()));
    let body = serde_json::to_string_pretty(response).expect("response serializes");
    let io_err = |e: std::io::Error| ScorerError::CacheIo {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::write(&tmp, body).map_err(io_err)?;
    fs::rename(&tmp, &path).map_err(io_err)?;
    Ok(())
}

/// HTTP-backed scorer with retries, exponential backoff, and an optional
/// disk cache keyed by request hash.
pub struct HttpScorer {
    endpoint: String,
    client: reqwest::blocking::Client,
    cache_dir: Option<PathBuf>,
    retries: u32,
}

impl HttpScorer {
    /// `endpoint` is the service base URL; the client posts to
    /// `{endpoint}/v1/similarity`. When `cache_path` is set, the
    /// directory is created if absent and every successful response is
    /// persisted there.
    pub fn new(
        endpoint: String,
        timeout_ms: u64,
        cache_path: Option<String>,
        retries: u32,
    ) -> Result<Self, ScorerError> {
        let cache_dir = match cache_path {
            Some(p) => {
                let dir = PathBuf::from(p);
                fs::create_dir_all(&dir).map_err(|e| ScorerError::CacheIo {
                    path: dir.display().to_string(),
                    message: e.to_string(),
                })?;
                Some(dir)
            }
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| ScorerError::Network {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpScorer {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            client,
            cache_dir,
            retries,
        })
    }

    fn url(&self) -> String {
        format!("{}/v1/similarity", self.endpoint)
    }

    /// Resolves a request: cache hit returns without network traffic;
    /// a miss performs at most `retries` additional attempts with
    /// exponential backoff, then persists the validated response.
    pub fn score_request(&self, request: &ScoreRequest) -> Result<ScoreResponse, ScorerError> {
        let request_id = request.request_id();
        if let Some(dir) = &self.cache_dir {
            if let Some(hit) = cache_lookup(dir, &request_id)? {
                return Ok(hit);
            }
        }
        let response = self.fetch(request)?;
        response.validate()?;
        if let Some(dir) = &self.cache_dir {
            cache_store(dir, &request_id, &response)?;
        }
        Ok(response)
    }

    fn fetch(&self, request: &ScoreRequest) -> Result<ScoreResponse, ScorerError> {
        let attempts = self.retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(
                    BACKOFF_BASE_MS << (attempt - 1).min(6),
                ));
            }
            match self.client.post(self.url()).json(request).send() {
                Ok(response) => {
                    let status = response.status();
                    if !status.is_success() {
                        last_error = format!("HTTP {status}");
                        continue;
                    }
                    let body = response.text().map_err(|e| ScorerError::Network {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    })?;
                    // a malformed 200 body is a contract violation, not a
                    // transient fault; do not retry
                    let parsed: ScoreResponse = serde_json::from_str(&body)
                        .map_err(|e| ScorerError::Protocol(format!("non-JSON body: {e}")))?;
                    return Ok(parsed);
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(ScorerError::Network {
            attempts,
            message: last_error,
        })
    }
}

impl ComponentScorer for HttpScorer {
    fn score(
        &self,
        question: &str,
        gt: &Component,
        candidate: &Component,
    ) -> Result<f64, SimilarityError> {
        let request = ScoreRequest::new(question, gt, candidate);
        let response = self.score_request(&request)?;
        Ok(response.s)
    }
}

/// Cache-only scorer: every lookup must hit; misses are hard errors
/// naming the request id. Useful for bit-reproducible replays of runs
/// that previously went through the network.
pub struct ReplayScorer {
    cache_dir: PathBuf,
}

impl ReplayScorer {
    pub fn open(cache_path: &str) -> Result<Self, ScorerError> {
        let dir = PathBuf::from(cache_path);
        if !dir.is_dir() {
            return Err(ScorerError::MissingCacheDir(dir.display().to_string()));
        }
        Ok(ReplayScorer { cache_dir: dir })
    }

    pub fn score_request(&self, request: &ScoreRequest) -> Result<ScoreResponse, ScorerError> {
        let request_id = request.request_id();
        cache_lookup(&self.cache_dir, &request_id)?
            .ok_or(ScorerError::ReplayMiss { request_id })
    }
}

impl ComponentScorer for ReplayScorer {
    fn score(
        &self,
        question: &str,
        gt: &Component,
        candidate: &Component,
    ) -> Result<f64, SimilarityError> {
        let request = ScoreRequest::new(question, gt, candidate);
        Ok(self.score_request(&request)?.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn component(id: &str) -> Component {
        Component {
            id: id.into(),
            mechanism_tag: "redox".into(),
            features: vec![0.25, 0.75],
        }
    }

    #[test]
    fn request_id_is_stable_and_content_sensitive() {
        let req = ScoreRequest::new("q", &component("a"), &component("b"));
        let again = ScoreRequest::new("q", &component("a"), &component("b"));
        assert_eq!(req.request_id(), again.request_id());
        assert_eq!(req.request_id().len(), 64);

        let other_question = ScoreRequest::new("q2", &component("a"), &component("b"));
        assert_ne!(req.request_id(), other_question.request_id());
        let mut other_features = component("b");
        other_features.features[0] = 0.35;
        let other = ScoreRequest::new("q", &component("a"), &other_features);
        assert_ne!(req.request_id(), other.request_id());
    }

    #[test]
    fn cache_round_trip_preserves_precision() {
        let dir = tempfile::tempdir().unwrap();
        let response = ScoreResponse {
            s: 0.123456789012345,
            rationale: Some("close match".into()),
        };
        cache_store(dir.path(), "abc", &response).unwrap();
        let loaded = cache_lookup(dir.path(), "abc").unwrap().unwrap();
        assert_eq!(loaded, response);
    }

    #[test]
    fn out_of_range_cache_entry_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.json"), r#"{"s": 1.3}"#).unwrap();
        assert!(matches!(
            cache_lookup(dir.path(), "bad"),
            Err(ScorerError::Protocol(_))
        ));
    }

    #[test]
    fn replay_requires_existing_directory() {
        assert!(matches!(
            ReplayScorer::open("/definitely/not/a/dir"),
            Err(ScorerError::MissingCacheDir(_))
        ));
    }

    #[test]
    fn replay_miss_names_the_request() {
        let dir = tempfile::tempdir().unwrap();
        let scorer = ReplayScorer::open(dir.path().to_str().unwrap()).unwrap();
        let request = ScoreRequest::new("q", &component("a"), &component("b"));
        let expected_id = request.request_id();
        match scorer.score_request(&request) {
            Err(ScorerError::ReplayMiss { request_id }) => assert_eq!(request_id, expected_id),
            other => panic!("expected replay miss, got {other:?}"),
        }
    }

    #[test]
    fn replay_serves_warm_cache_and_concurrent_reads_agree() {
        let dir = tempfile::tempdir().unwrap();
        let request = ScoreRequest::new("q", &component("a"), &component("b"));
        let response = ScoreResponse {
            s: 0.875,
            rationale: None,
        };
        cache_store(dir.path(), &request.request_id(), &response).unwrap();

        let scorer = std::sync::Arc::new(ReplayScorer::open(dir.path().to_str().unwrap()).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let scorer = scorer.clone();
                let request = request.clone();
                std::thread::spawn(move || {
                    for _ in 0..50 {
                        let got = scorer.score_request(&request).unwrap();
                        assert_eq!(got.s, 0.875);
                    }
                })
            })
            .collect();
        for handle in handles {
            handle.join().unwrap();
        }
    }
}
