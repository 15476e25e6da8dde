//! Episode and suite runners, the hidden-ground-truth information
//! barrier, and bootstrap significance analysis.
//!
//! The harness is the only place where ground-truth knowledge and policy
//! decisions meet: it builds each policy's [`PoolView`] with every
//! ground-truth annotation stripped, evaluates the policy's actions
//! against the simulator, and counts the trials until the ground truth
//! is tested. Episodes are independent units of parallel work; reports
//! are assembled in canonical order so worker count never changes the
//! output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::config::RunConfig;
use crate::landscape::{pool_scores, NoiseTier};
use crate::model::{Dataset, ResearchProblem};
use crate::policies::{PolicyError, PolicyKind, PoolView};
use crate::seed::derive_seed;
use crate::similarity::CosineScorer;
use crate::simulator::{FeedbackMode, Simulator, SimulatorConfig, SimulatorError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("budget must be >= 1")]
    ZeroBudget,
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Similarity(#[from] crate::similarity::SimilarityError),
}

/// Outcome of one episode: the trajectory of (hypothesis, reward) pairs
/// and the number of trials until the ground truth was tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub problem_id: String,
    pub policy_name: String,
    pub n_trials: usize,
    pub found: bool,
    pub trajectory: Vec<(String, f64)>,
    pub seed: u64,
}

/// Builds the information-barrier view for one episode: hypotheses with
/// annotations stripped, plus noisy-oracle priors
/// `clip(S + eta * z, 0, 1)` drawn from the episode's prior seed.
pub fn build_pool_view(
    problem: &ResearchProblem,
    prior_eta: f64,
    prior_seed: u64,
) -> Result<PoolView, HarnessError> {
    let scores = pool_scores(&CosineScorer, problem)?;
    let mut rng = ChaCha8Rng::seed_from_u64(prior_seed);
    let noise = Normal::new(0.0, prior_eta.max(f64::MIN_POSITIVE)).expect("valid normal");
    let priors: BTreeMap<String, f64> = scores
        .into_iter()
        .map(|(id, s)| {
            let noisy = if prior_eta > 0.0 {
                (s + noise.sample(&mut rng)).clamp(0.0, 1.0)
            } else {
                s
            };
            (id, noisy)
        })
        .collect();
    Ok(PoolView::new(&problem.pool, priors))
}

/// Runs one episode of `policy` on `problem`.
///
/// The loop asks the policy for an action, evaluates it, and feeds the
/// reward back, stopping when the ground truth is tested or the budget
/// is exhausted. The policy only ever sees the stripped pool view and
/// the scalar reward (plus the similarity report when the config asks
/// for component-level feedback).
pub fn run_episode(
    problem: &ResearchProblem,
    policy: PolicyKind,
    config: &RunConfig,
    sim_config: &SimulatorConfig,
    seed: u64,
) -> Result<EpisodeResult, HarnessError> {
    let budget = config.budget.unwrap_or(problem.pool.len());
    if budget == 0 {
        return Err(HarnessError::ZeroBudget);
    }
    let simulator = Simulator::new(problem, sim_config)?;
    let view = build_pool_view(problem, config.prior_eta, derive_seed(seed, &["prior"]))?;
    let mut agent = policy.build(&view, &config.policy_params, derive_seed(seed, &["policy"]))?;

    let gt_id = &problem.ground_truth.hypothesis_id;
    let mut trajectory = Vec::new();
    let mut found = false;
    for _ in 0..budget {
        let action = match agent.next() {
            Ok(action) => action,
            Err(PolicyError::PoolExhausted) => break,
            Err(e) => return Err(e.into()),
        };
        let record = simulator.evaluate_id(&action.hypothesis_id)?;
        trajectory.push((action.hypothesis_id.clone(), record.score));
        if &action.hypothesis_id == gt_id {
            found = true;
            break;
        }
        let feedback = match sim_config.feedback {
            FeedbackMode::Scalar => None,
            FeedbackMode::ComponentLevel => Some(&record.report),
        };
        agent.update(&action, record.score, feedback);
    }

    Ok(EpisodeResult {
        problem_id: problem.question.clone(),
        policy_name: policy.name().to_string(),
        n_trials: trajectory.len(),
        found,
        trajectory,
        seed,
    })
}

/// Per-problem aggregate within one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub problem_id: String,
    pub mean_trials: f64,
    pub reps: usize,
}

/// Per-policy aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub mean_trials: f64,
    pub episodes: usize,
    pub found_rate: f64,
    pub per_problem: Vec<ProblemSummary>,
}

/// The suite report: config snapshot plus per-policy aggregates. The
/// flat per-episode table is serialized separately as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: RunConfig,
    pub noise_tier: String,
    pub n_problems: usize,
    pub policies: Vec<PolicySummary>,
}

impl SuiteReport {
    pub fn policy_mean(&self, policy: &str) -> Option<f64> {
        self.policies
            .iter()
            .find(|p| p.policy == policy)
            .map(|p| p.mean_trials)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One row per episode, canonical order (policy, problem, rep).
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEpisodes {
    pub episodes: Vec<EpisodeResult>,
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl SuiteEpisodes {
    /// Flat CSV: problem_id, policy, rep, seed, n_trials, found.
    pub fn to_csv(&self, reps: usize) -> String {
        let mut out = String::from("problem_id,policy,rep,seed,n_trials,found\n");
        for (index, episode) in self.episodes.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_escape(&episode.problem_id),
                episode.policy_name,
                index % reps.max(1),
                episode.seed,
                episode.n_trials,
                episode.found
            ));
        }
        out
    }
}

/// Runs the full suite: `reps` independent episodes per (problem,
/// policy) with derived seeds. Episodes execute in parallel; results are
/// ordered canonically, so equal inputs give identical reports at any
/// worker count.
pub fn run_suite(
    dataset: &Dataset,
    config: &RunConfig,
) -> Result<(SuiteReport, SuiteEpisodes), HarnessError> {
    struct Job<'a> {
        problem: &'a ResearchProblem,
        policy: PolicyKind,
        rep: usize,
    }

    let mut jobs = Vec::new();
    for policy in &config.policies {
        for problem in &dataset.problems {
            for rep in 0..config.reps {
                jobs.push(Job {
                    problem,
                    policy: *policy,
                    rep,
                });
            }
        }
    }

    let episodes: Vec<EpisodeResult> = jobs
        .par_iter()
        .map(|job| {
            let episode_seed = derive_seed(
                config.base_seed,
                &[
                    &job.problem.question,
                    job.policy.name(),
                    &job.rep.to_string(),
                ],
            );
            // each episode sees an independent distortion realization;
            // within the episode the field is fixed
            let mut sim_config = config.simulator_config();
            if sim_config.noise.tier != NoiseTier::None {
                sim_config.noise = sim_config.noise.with_seed(derive_seed(
                    sim_config.noise.seed,
                    &[&job.problem.question, &job.rep.to_string()],
                ));
            }
            run_episode(job.problem, job.policy, config, &sim_config, episode_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut policies = Vec::new();
    for policy in &config.policies {
        let policy_episodes: Vec<&EpisodeResult> = episodes
            .iter()
            .filter(|e| e.policy_name == policy.name())
            .collect();
        let mut per_problem = Vec::new();
        for problem in &dataset.problems {
            let trials: Vec<f64> = policy_episodes
                .iter()
                .filter(|e| e.problem_id == problem.question)
                .map(|e| e.n_trials as f64)
                .collect();
            per_problem.push(ProblemSummary {
                problem_id: problem.question.clone(),
                mean_trials: trials.iter().sum::<f64>() / trials.len() as f64,
                reps: trials.len(),
            });
        }
        let episodes_count = policy_episodes.len();
        let mean_trials = policy_episodes
            .iter()
            .map(|e| e.n_trials as f64)
            .sum::<f64>()
            / episodes_count as f64;
        let found_rate = policy_episodes.iter().filter(|e| e.found).count() as f64
            / episodes_count as f64;
        policies.push(PolicySummary {
            policy: policy.name().to_string(),
            mean_trials,
            episodes: episodes_count,
            found_rate,
            per_problem,
        });
    }

    let report = SuiteReport {
        config: config.clone(),
        noise_tier: config.noise.tier.name().to_string(),
        n_problems: dataset.problems.len(),
        policies,
    };
    Ok((report, SuiteEpisodes { episodes }))
}

/// Percentile-bootstrap comparison of two sample means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapComparison {
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub iters: usize,
}

/// Percentile bootstrap of `mean(a) - mean(b)` with a 95% interval.
///
/// The two-sided p-value is twice the fraction of resampled differences
/// whose sign flips relative to the observed difference (zero included),
/// capped at 1. An observed difference of exactly zero carries no sign
/// to flip and yields p = 1.
pub fn bootstrap_compare(
    samples_a: &[f64],
    samples_b: &[f64],
    iters: usize,
    seed: u64,
) -> BootstrapComparison {
    assert!(
        !samples_a.is_empty() && !samples_b.is_empty(),
        "bootstrap needs non-empty samples"
    );
    assert!(iters >= 1, "bootstrap needs at least one iteration");

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let observed = mean(samples_a) - mean(samples_b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diffs = Vec::with_capacity(iters);
    let resample_mean = |xs: &[f64], rng: &mut ChaCha8Rng| {
        let mut total = 0.0;
        for _ in 0..xs.len() {
            total += xs[rand::Rng::random_range(rng, 0..xs.len())];
        }
        total / xs.len() as f64
    };
    for _ in 0..iters {
        let a = resample_mean(samples_a, &mut rng);
        let b = resample_mean(samples_b, &mut rng);
        diffs.push(a - b);
    }
    diffs.sort_by(|a, b| a.total_cmp(b));

    let quantile = |q: f64| -> f64 {
        let idx = ((q * iters as f64) as usize).min(iters - 1);
        diffs[idx]
    };
    let ci_low = quantile(0.025);
    let ci_high = quantile(0.975);

    let p_value = if observed == 0.0 {
        1.0
    } else {
        let flips = diffs
            .iter()
            .filter(|d| d.signum() != observed.signum() || **d == 0.0)
            .count();
        (2.0 * flips as f64 / iters as f64).min(1.0)
    };

    BootstrapComparison {
        mean_diff: observed,
        ci_low,
        ci_high,
        p_value,
        iters,
    }
}
