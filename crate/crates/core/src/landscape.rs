//! Link functions and the systematic distortion field.
//!
//! A monotone link maps the latent distance `d = 1 - S` to a base
//! performance score; a seeded distortion field then perturbs non-ground-
//! truth scores with three kinds of systematic error: per-hypothesis
//! additive bumps (spurious local optima), plateau bands (flattened score
//! regions), and cliff bands (multiplicative drops). The ground truth is
//! never perturbed, and all other scores are clamped strictly below 1.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::model::ResearchProblem;
use crate::similarity::score_candidate;
use crate::similarity::ComponentScorer;

/// Non-ground-truth scores are clamped to `1 - DELTA_GAP`, so discovering
/// the ground truth by identity and by score agree.
pub const DELTA_GAP: f64 = 0.01;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("invalid link function: {0}")]
    InvalidLink(String),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("infeasible placement: {0}")]
    InfeasiblePlacement(String),
}

/// Monotone map from distance to base score, normalized so every kind has
/// `g(0) = 1` and is non-increasing on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LinkFunction {
    Gaussian { sigma: f64 },
    Linear,
    /// Identical to `Linear` on `[0,1]`; retained as a named variant so
    /// the four-way link comparison can address it directly.
    Absolute,
    Quadratic,
}

impl LinkFunction {
    pub fn gaussian(sigma: f64) -> Result<Self, LandscapeError> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(LandscapeError::InvalidLink(format!(
                "gaussian sigma must be positive, got {sigma}"
            )));
        }
        Ok(LinkFunction::Gaussian { sigma })
    }

    /// Default Gaussian width. Keeps `g(1) = exp(-2) ~ 0.135`, which
    /// preserves usable dynamic range over the whole distance interval.
    pub fn default_gaussian() -> Self {
        LinkFunction::Gaussian { sigma: 0.5 }
    }

    pub fn validate(&self) -> Result<(), LandscapeError> {
        match self {
            LinkFunction::Gaussian { sigma } if *sigma <= 0.0 || !sigma.is_finite() => Err(
                LandscapeError::InvalidLink(format!("gaussian sigma must be positive, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LinkFunction::Gaussian { .. } => "gaussian",
            LinkFunction::Linear => "linear",
            LinkFunction::Absolute => "absolute",
            LinkFunction::Quadratic => "quadratic",
        }
    }

    /// All four link kinds with default parameters.
    pub fn all_default() -> Vec<LinkFunction> {
        vec![
            LinkFunction::default_gaussian(),
            LinkFunction::Linear,
            LinkFunction::Absolute,
            LinkFunction::Quadratic,
        ]
    }

    pub fn from_name(name: &str) -> Result<Self, LandscapeError> {
        match name {
            "gaussian" => Ok(LinkFunction::default_gaussian()),
            "linear" => Ok(LinkFunction::Linear),
            "absolute" => Ok(LinkFunction::Absolute),
            "quadratic" => Ok(LinkFunction::Quadratic),
            other => Err(LandscapeError::InvalidLink(format!(
                "unknown link {other:?}, expected gaussian|linear|absolute|quadratic"
            ))),
        }
    }
}

/// Applies the link to a distance in `[0,1]`, clamping the result to
/// `[0,1]`.
pub fn link_apply(link: &LinkFunction, d: f64) -> f64 {
    let d = d.clamp(0.0, 1.0);
    let value = match link {
        LinkFunction::Gaussian { sigma } => (-d * d / (2.0 * sigma * sigma)).exp(),
        LinkFunction::Linear => 1.0 - d,
        LinkFunction::Absolute => 1.0 - d.abs(),
        LinkFunction::Quadratic => 1.0 - d * d,
    };
    value.clamp(0.0, 1.0)
}

/// Named distortion tier. Preset counts sit at the boundary of each
/// tier's allowed range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTier {
    None,
    Simple,
    Medium,
    Complex,
}

impl NoiseTier {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseTier::None => "none",
            NoiseTier::Simple => "simple",
            NoiseTier::Medium => "medium",
            NoiseTier::Complex => "complex",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, LandscapeError> {
        match name {
            "none" => Ok(NoiseTier::None),
            "simple" => Ok(NoiseTier::Simple),
            "medium" => Ok(NoiseTier::Medium),
            "complex" => Ok(NoiseTier::Complex),
            other => Err(LandscapeError::InvalidNoise(format!(
                "unknown noise tier {other:?}, expected none|simple|medium|complex"
            ))),
        }
    }

    /// Preset distortion counts (local optima, plateaus, cliffs). Each
    /// preset sits at the boundary of its tier's allowed range, and each
    /// tier dominates the previous one in every count so the difficulty
    /// ordering is structural.
    pub fn preset_counts(&self) -> (usize, usize, usize) {
        match self {
            NoiseTier::None => (0, 0, 0),
            NoiseTier::Simple => (10, 2, 2),
            NoiseTier::Medium => (30, 6, 6),
            NoiseTier::Complex => (40, 6, 6),
        }
    }

    /// Allowed count ranges per tier, as (min, max) with `None` meaning
    /// unbounded above.
    fn allowed(&self) -> [(usize, Option<usize>); 3] {
        match self {
            NoiseTier::None => [(0, Some(0)), (0, Some(0)), (0, Some(0))],
            NoiseTier::Simple => [(0, Some(10)), (0, Some(2)), (0, Some(2))],
            NoiseTier::Medium => [(0, Some(30)), (0, Some(6)), (0, Some(6))],
            NoiseTier::Complex => [(30, None), (3, None), (3, None)],
        }
    }
}

/// Full distortion specification: tier, counts, magnitudes, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub tier: NoiseTier,
    pub n_local_optima: usize,
    pub n_plateaus: usize,
    pub n_cliffs: usize,
    /// Magnitude range for the signed per-hypothesis offsets.
    pub bump_amplitude_range: (f64, f64),
    /// Width of each plateau band; cliff bands share the same width.
    pub plateau_width: f64,
    pub cliff_drop_factor: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Tier preset with default magnitudes.
    pub fn preset(tier: NoiseTier, seed: u64) -> Self {
        let (n_local_optima, n_plateaus, n_cliffs) = tier.preset_counts();
        NoiseSpec {
            tier,
            n_local_optima,
            n_plateaus,
            n_cliffs,
            bump_amplitude_range: (0.05, 0.30),
            plateau_width: 0.1,
            cliff_drop_factor: 0.5,
            seed,
        }
    }

    pub fn none(seed: u64) -> Self {
        Self::preset(NoiseTier::None, seed)
    }

    /// Same spec with a different seed; used by the suite runner to draw
    /// an independent distortion realization per episode.
    pub fn with_seed(&self, seed: u64) -> Self {
        NoiseSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), LandscapeError> {
        let allowed = self.tier.allowed();
        let counts = [self.n_local_optima, self.n_plateaus, self.n_cliffs];
        let labels = ["n_local_optima", "n_plateaus", "n_cliffs"];
        for ((count, (lo, hi)), label) in counts.iter().zip(allowed).zip(labels) {
            if *count < lo || hi.is_some_and(|h| *count > h) {
                return Err(LandscapeError::InvalidNoise(format!(
                    "{label} = {count} outside tier {} range [{lo}, {}]",
                    self.tier.name(),
                    hi.map_or("inf".to_string(), |h| h.to_string()),
                )));
            }
        }
        let (lo, hi) = self.bump_amplitude_range;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(LandscapeError::InvalidNoise(format!(
                "bump_amplitude_range ({lo}, {hi}) must satisfy 0 < lo <= hi < 1"
            )));
        }
        if !(0.0 < self.plateau_width && self.plateau_width < 1.0) {
            return Err(LandscapeError::InvalidNoise(format!(
                "plateau_width {} outside (0,1)",
                self.plateau_width
            )));
        }
        if !(0.0 < self.cliff_drop_factor && self.cliff_drop_factor < 1.0) {
            return Err(LandscapeError::InvalidNoise(format!(
                "cliff_drop_factor {} outside (0,1)",
                self.cliff_drop_factor
            )));
        }
        Ok(())
    }
}

/// A distance interval `[lo, hi)` with an associated value: the
/// replacement score for plateaus, the multiplier for cliffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl Band {
    fn contains(&self, d: f64) -> bool {
        self.lo <= d && d < self.hi
    }
}

/// Which distortion kinds touched a score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionFlags {
    pub plateau: bool,
    pub cliff: bool,
    pub bump: bool,
}

/// The built distortion field for one problem: deterministic given
/// (spec, problem), immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionField {
    gt_hypothesis_id: String,
    offsets: BTreeMap<String, f64>,
    plateaus: Vec<Band>,
    cliffs: Vec<Band>,
}

impl DistortionField {
    pub fn empty(gt_hypothesis_id: &str) -> Self {
        DistortionField {
            gt_hypothesis_id: gt_hypothesis_id.to_string(),
            offsets: BTreeMap::new(),
            plateaus: Vec::new(),
            cliffs: Vec::new(),
        }
    }

    pub fn offsets(&self) -> &BTreeMap<String, f64> {
        &self.offsets
    }

    pub fn plateau_bands(&self) -> &[Band] {
        &self.plateaus
    }

    pub fn cliff_bands(&self) -> &[Band] {
        &self.cliffs
    }

    pub fn is_identity(&self) -> bool {
        self.offsets.is_empty() && self.plateaus.is_empty() && self.cliffs.is_empty()
    }
}

/// Places `n` disjoint bands of `width` inside (0,1), uniformly over all
/// disjoint configurations: draw the band starts in the space left after
/// removing the bands' total width, sort, and re-expand.
fn place_bands(
    rng: &mut ChaCha8Rng,
    n: usize,
    width: f64,
    kind: &str,
) -> Result<Vec<(f64, f64)>, LandscapeError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let free = 1.0 - n as f64 * width;
    if free <= 0.0 {
        return Err(LandscapeError::InfeasiblePlacement(format!(
            "{n} {kind} bands of width {width} cannot be disjoint in (0,1)"
        )));
    }
    let mut starts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..free)).collect();
    starts.sort_by(|a, b| a.total_cmp(b));
    Ok(starts
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let lo = s + i as f64 * width;
            (lo, lo + width)
        })
        .collect())
}

/// Builds the distortion field for a problem.
///
/// From the spec seed: picks `n_local_optima` non-ground-truth hypotheses
/// and assigns each a signed offset with magnitude uniform in the bump
/// range; places disjoint plateau bands whose scores are replaced by the
/// link value at the band midpoint; places disjoint cliff bands whose
/// scores are multiplied by the drop factor. Equal (spec, problem) inputs
/// always produce the identical field.
pub fn build_distortion(
    spec: &NoiseSpec,
    link: &LinkFunction,
    problem: &ResearchProblem,
) -> Result<DistortionField, LandscapeError> {
    spec.validate()?;
    link.validate()?;
    let gt_id = &problem.ground_truth.hypothesis_id;
    let mut field = DistortionField::empty(gt_id);
    if spec.tier == NoiseTier::None {
        return Ok(field);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut non_gt: Vec<&str> = problem
        .pool
        .iter()
        .map(|h| h.id.as_str())
        .filter(|id| id != gt_id)
        .collect();
    non_gt.sort_unstable();
    if spec.n_local_optima > non_gt.len() {
        return Err(LandscapeError::InfeasiblePlacement(format!(
            "{} local optima requested but only {} non-ground-truth hypotheses",
            spec.n_local_optima,
            non_gt.len()
        )));
    }
    // Fisher-Yates prefix over the sorted id list keeps the draw
    // independent of pool order.
    for i in 0..spec.n_local_optima {
        let j = rng.random_range(i..non_gt.len());
        non_gt.swap(i, j);
    }
    let (lo_amp, hi_amp) = spec.bump_amplitude_range;
    for id in non_gt.iter().take(spec.n_local_optima) {
        let magnitude = rng.random_range(lo_amp..=hi_amp);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        field.offsets.insert((*id).to_string(), sign * magnitude);
    }

    field.plateaus = place_bands(&mut rng, spec.n_plateaus, spec.plateau_width, "plateau")?
        .into_iter()
        .map(|(lo, hi)| Band {
            lo,
            hi,
            value: link_apply(link, (lo + hi) / 2.0),
        })
        .collect();

    field.cliffs = place_bands(&mut rng, spec.n_cliffs, spec.plateau_width, "cliff")?
        .into_iter()
        .map(|(lo, hi)| Band {
            lo,
            hi,
            value: spec.cliff_drop_factor,
        })
        .collect();

    Ok(field)
}

/// Applies the field to one hypothesis score.
///
/// Order is fixed for determinism: plateau replacement, then cliff
/// multiplier, then the additive per-hypothesis offset. The ground truth
/// passes through untouched. Under an active field every other score is
/// clamped to `[0, 1 - DELTA_GAP]` so no perturbation can push a
/// non-ground-truth hypothesis to a perfect score; an empty field is the
/// identity.
pub fn apply_distortion(
    field: &DistortionField,
    hypothesis_id: &str,
    base: f64,
    d: f64,
) -> (f64, DistortionFlags) {
    let mut flags = DistortionFlags::default();
    if hypothesis_id == field.gt_hypothesis_id || field.is_identity() {
        return (base, flags);
    }
    let mut score = base;
    if let Some(band) = field.plateaus.iter().find(|b| b.contains(d)) {
        score = band.value;
        flags.plateau = true;
    }
    if let Some(band) = field.cliffs.iter().find(|b| b.contains(d)) {
        score *= band.value;
        flags.cliff = true;
    }
    if let Some(offset) = field.offsets.get(hypothesis_id) {
        score += offset;
        flags.bump = true;
    }
    (score.clamp(0.0, 1.0 - DELTA_GAP), flags)
}

/// Computes the aggregate similarity score of every pool member; shared
/// by the simulator and by distortion-free oracles.
pub fn pool_scores(
    scorer: &dyn ComponentScorer,
    problem: &ResearchProblem,
) -> Result<Vec<(String, f64)>, crate::similarity::SimilarityError> {
    let gt_hypothesis = problem.ground_truth_hypothesis();
    problem
        .pool
        .iter()
        .map(|h| {
            score_candidate(
                scorer,
                &problem.question,
                h,
                gt_hypothesis,
                &problem.ground_truth,
            )
            .map(|report| (h.id.clone(), report.score_s))
        })
        .collect()
}
