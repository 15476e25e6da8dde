//! Deterministic experiment-feedback simulation and sequential
//! hypothesis-ranking benchmark.
//!
//! The crate models a pool of candidate hypotheses, each decomposed into
//! functional components, and scores candidates by component-level
//! similarity to a hidden ground truth. A monotone link function maps the
//! resulting distance to a base performance score, which a configurable
//! distortion field perturbs with local optima, plateaus, and cliffs.
//! Sequential selection policies are benchmarked by the number of
//! simulated trials they need to discover the ground truth.
//!
//! Module map:
//! - [`model`] — hypothesis-space data model and dataset ingestion
//! - [`similarity`] — component alignment and the gated weighted score
//! - [`landscape`] — link functions and the distortion field
//! - [`simulator`] — the experiment executor composing the three above
//! - [`scorer`] — optional HTTP client for an external similarity judge
//! - [`policies`] — uninformed / pre-experiment / clustering policies
//! - [`harness`] — episode and suite runners, bootstrap comparison
//! - [`metrics`] — rank-correlation and error metrics, validation reports
//! - [`benchgen`] — synthetic benchmark generation
//! - [`config`] — run/generation configuration files
//!
//! Every random draw in the crate flows from explicit 64-bit seeds, and
//! repeated runs with equal inputs produce byte-identical outputs.

pub mod benchgen;
pub mod config;
pub mod harness;
pub mod landscape;
pub mod metrics;
pub mod model;
pub mod policies;
pub mod scorer;
pub mod seed;
pub mod similarity;
pub mod simulator;
