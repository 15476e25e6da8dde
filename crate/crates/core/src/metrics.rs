//! Rank-correlation and error metrics for simulator validation.
//!
//! Spearman correlation uses the classic closed form on tie-free inputs
//! and degrades to Pearson correlation of average ranks when either side
//! has ties. Groups without rank variance yield an explicit undefined
//! outcome rather than NaN.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("rmsle requires non-negative values, got {0}")]
    NegativeInput(f64),
    #[error("no validation groups")]
    NoGroups,
    #[error("group {question_id:?}: {message}")]
    BadGroup {
        question_id: String,
        message: String,
    },
}

/// Result of a Spearman computation: either a coefficient or an explicit
/// marker that one side had zero rank variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpearmanOutcome {
    Rho(f64),
    Undefined,
}

impl SpearmanOutcome {
    pub fn rho(self) -> Option<f64> {
        match self {
            SpearmanOutcome::Rho(r) => Some(r),
            SpearmanOutcome::Undefined => None,
        }
    }

    pub fn is_perfect(self) -> bool {
        self == SpearmanOutcome::Rho(1.0)
    }
}

/// Ascending ranks with average ranks for ties, 1-based.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the average of ranks i+1..=j+1
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    // identical rank vectors are perfect agreement by definition; the
    // arithmetic below would land an ulp shy of 1
    if xs == ys {
        return Some(1.0);
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return None;
    }
    Some(cov / (var_x * var_y).sqrt())
}

/// Spearman rank correlation.
///
/// Tie-free inputs use `rho = 1 - 6 sum(d_i^2) / (n (n^2 - 1))` exactly;
/// inputs with ties fall back to Pearson correlation of average ranks,
/// which coincides with the closed form when tie-free.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<SpearmanOutcome, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooFew {
            need: 2,
            got: xs.len(),
        });
    }
    let tied = has_ties(xs) || has_ties(ys);
    let rank_x = average_ranks(xs);
    let rank_y = average_ranks(ys);
    if tied {
        return Ok(match pearson(&rank_x, &rank_y) {
            Some(r) => SpearmanOutcome::Rho(r),
            None => SpearmanOutcome::Undefined,
        });
    }
    let n = xs.len() as f64;
    let d_squared: f64 = rank_x
        .iter()
        .zip(&rank_y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(SpearmanOutcome::Rho(
        1.0 - 6.0 * d_squared / (n * (n * n - 1.0)),
    ))
}

fn check_pair(ys: &[f64], y_hats: &[f64]) -> Result<(), MetricsError> {
    if ys.len() != y_hats.len() {
        return Err(MetricsError::LengthMismatch {
            left: ys.len(),
            right: y_hats.len(),
        });
    }
    if ys.is_empty() {
        return Err(MetricsError::TooFew { need: 1, got: 0 });
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(ys: &[f64], y_hats: &[f64]) -> Result<f64, MetricsError> {
    check_pair(ys, y_hats)?;
    let n = ys.len() as f64;
    Ok(ys
        .iter()
        .zip(y_hats)
        .map(|(y, yh)| (yh - y) * (yh - y))
        .sum::<f64>()
        / n)
}

/// Root mean squared error.
pub fn rmse(ys: &[f64], y_hats: &[f64]) -> Result<f64, MetricsError> {
    Ok(mse(ys, y_hats)?.sqrt())
}

/// Mean absolute error.
pub fn mae(ys: &[f64], y_hats: &[f64]) -> Result<f64, MetricsError> {
    check_pair(ys, y_hats)?;
    let n = ys.len() as f64;
    Ok(ys.iter().zip(y_hats).map(|(y, yh)| (yh - y).abs()).sum::<f64>() / n)
}

/// Root mean squared logarithmic error over `log(v + 1)`; defined for
/// non-negative values only.
pub fn rmsle(ys: &[f64], y_hats: &[f64]) -> Result<f64, MetricsError> {
    check_pair(ys, y_hats)?;
    let n = ys.len() as f64;
    let mut total = 0.0;
    for (&y, &yh) in ys.iter().zip(y_hats) {
        if y < 0.0 {
            return Err(MetricsError::NegativeInput(y));
        }
        if yh < 0.0 {
            return Err(MetricsError::NegativeInput(yh));
        }
        let d = yh.ln_1p() - y.ln_1p();
        total += d * d;
    }
    Ok((total / n).sqrt())
}

/// One validation group: simulated vs experimentally reported outcomes
/// for the hypotheses of a single question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationGroup {
    pub question_id: String,
    pub simulated: Vec<f64>,
    pub actual: Vec<f64>,
}

impl ValidationGroup {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.simulated.len() != self.actual.len() {
            return Err(MetricsError::BadGroup {
                question_id: self.question_id.clone(),
                message: format!(
                    "simulated has {} entries, actual has {}",
                    self.simulated.len(),
                    self.actual.len()
                ),
            });
        }
        if self.simulated.len() < 2 {
            return Err(MetricsError::BadGroup {
                question_id: self.question_id.clone(),
                message: format!("need at least 2 pairs, got {}", self.simulated.len()),
            });
        }
        Ok(())
    }
}

/// Counts groups in perfect rank agreement (`rho = 1` exactly).
/// Undefined groups count as non-perfect.
pub fn pci(groups: &[ValidationGroup]) -> Result<(usize, usize), MetricsError> {
    let mut perfect = 0;
    for group in groups {
        group.validate()?;
        if spearman(&group.simulated, &group.actual)?.is_perfect() {
            perfect += 1;
        }
    }
    Ok((perfect, groups.len()))
}

/// Aggregated validation report: per-group mean Spearman plus pooled
/// error metrics over the concatenation of all pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_groups: usize,
    pub n_pairs: usize,
    /// Arithmetic mean of per-group rho, excluding undefined groups.
    pub mean_spearman: Option<f64>,
    pub undefined_groups: usize,
    pub pci_perfect: usize,
    pub pci_total: usize,
    pub rmse: f64,
    pub mse: f64,
    pub mae: f64,
    pub rmsle: f64,
}

impl ValidationReport {
    /// Two-column `metric,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let mean = self
            .mean_spearman
            .map_or("undefined".to_string(), |v| v.to_string());
        out.push_str(&format!("mean_spearman,{mean}\n"));
        out.push_str(&format!("undefined_groups,{}\n", self.undefined_groups));
        out.push_str(&format!("pci,{}/{}\n", self.pci_perfect, self.pci_total));
        out.push_str(&format!("rmse,{}\n", self.rmse));
        out.push_str(&format!("mse,{}\n", self.mse));
        out.push_str(&format!("mae,{}\n", self.mae));
        out.push_str(&format!("rmsle,{}\n", self.rmsle));
        out.push_str(&format!("n_groups,{}\n", self.n_groups));
        out.push_str(&format!("n_pairs,{}\n", self.n_pairs));
        out
    }
}

/// Builds the validation report for a set of groups.
pub fn validation_report(groups: &[ValidationGroup]) -> Result<ValidationReport, MetricsError> {
    if groups.is_empty() {
        return Err(MetricsError::NoGroups);
    }
    let mut rhos = Vec::new();
    let mut undefined = 0usize;
    let mut perfect = 0usize;
    let mut pooled_actual = Vec::new();
    let mut pooled_simulated = Vec::new();
    for group in groups {
        group.validate()?;
        match spearman(&group.simulated, &group.actual)? {
            SpearmanOutcome::Rho(rho) => {
                if rho == 1.0 {
                    perfect += 1;
                }
                rhos.push(rho);
            }
            SpearmanOutcome::Undefined => undefined += 1,
        }
        pooled_actual.extend_from_slice(&group.actual);
        pooled_simulated.extend_from_slice(&group.simulated);
    }
    let mean_spearman = if rhos.is_empty() {
        None
    } else {
        Some(rhos.iter().sum::<f64>() / rhos.len() as f64)
    };
    Ok(ValidationReport {
        n_groups: groups.len(),
        n_pairs: pooled_actual.len(),
        mean_spearman,
        undefined_groups: undefined,
        pci_perfect: perfect,
        pci_total: groups.len(),
        rmse: rmse(&pooled_actual, &pooled_simulated)?,
        mse: mse(&pooled_actual, &pooled_simulated)?,
        mae: mae(&pooled_actual, &pooled_simulated)?,
        rmsle: rmsle(&pooled_actual, &pooled_simulated)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(xs: &[f64], ys: &[f64]) -> f64 {
        spearman(xs, ys).unwrap().rho().expect("defined")
    }

    #[test]
    fn identity_is_one() {
        let xs = [3.0, 1.0, 4.0, 1.5, 9.0];
        assert_eq!(rho(&xs, &xs), 1.0);
    }

    #[test]
    fn reversal_is_minus_one() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(rho(&xs, &ys), -1.0);
    }

    #[test]
    fn closed_form_hand_value() {
        // ranks differ by d = (0, 0, 1, -1): 1 - 6*2/(4*15) = 0.8
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 2.0, 4.0, 3.0];
        assert_eq!(rho(&xs, &ys), 0.8);
    }

    #[test]
    fn ties_use_average_ranks() {
        let xs = [1.0, 2.0, 2.0, 4.0];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let r = rho(&xs, &ys);
        // ranks x = (1, 2.5, 2.5, 4); Pearson against (1,2,3,4)
        assert!((r - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_undefined() {
        let xs = [2.0, 2.0, 2.0];
        let ys = [1.0, 2.0, 3.0];
        assert_eq!(spearman(&xs, &ys).unwrap(), SpearmanOutcome::Undefined);
    }

    #[test]
    fn length_and_size_errors() {
        assert!(matches!(
            spearman(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0], &[1.0]),
            Err(MetricsError::TooFew { .. })
        ));
    }

    #[test]
    fn spearman_symmetric_and_monotone_invariant() {
        let xs = [0.2, 0.9, 0.4, 0.7, 0.1];
        let ys = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert_eq!(rho(&xs, &ys), rho(&ys, &xs));
        // strictly increasing transform of one side preserves rho
        let transformed: Vec<f64> = xs.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
        assert_eq!(rho(&transformed, &ys), rho(&xs, &ys));
    }

    #[test]
    fn error_metric_hand_values() {
        let y = [0.0, 1.0];
        let y_hat = [1.0, 0.0];
        assert_eq!(rmse(&y, &y_hat).unwrap(), 1.0);
        assert_eq!(mse(&y, &y_hat).unwrap(), 1.0);
        assert_eq!(mae(&y, &y_hat).unwrap(), 1.0);
    }

    #[test]
    fn perfect_prediction_zeroes_every_metric() {
        let y = [0.3, 0.5, 0.9];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_eq!(rmsle(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn rmsle_hand_value() {
        // log1p(e - 1) - log1p(0) = 1
        let y = [0.0];
        let y_hat = [std::f64::consts::E - 1.0];
        assert!((rmsle(&y, &y_hat).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rmsle_rejects_negatives() {
        assert!(matches!(
            rmsle(&[-0.1], &[0.0]),
            Err(MetricsError::NegativeInput(_))
        ));
    }

    fn group(id: &str, simulated: &[f64], actual: &[f64]) -> ValidationGroup {
        ValidationGroup {
            question_id: id.into(),
            simulated: simulated.to_vec(),
            actual: actual.to_vec(),
        }
    }

    #[test]
    fn pci_counts_perfect_groups() {
        let groups = vec![
            group("q1", &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]),
            group("q2", &[0.1, 0.3, 0.2], &[1.0, 2.0, 3.0]),
        ];
        assert_eq!(pci(&groups).unwrap(), (1, 2));
    }

    #[test]
    fn single_perfect_group_report() {
        let report = validation_report(&[group("q", &[0.1, 0.2], &[0.1, 0.2])]).unwrap();
        assert_eq!(report.mean_spearman, Some(1.0));
        assert_eq!((report.pci_perfect, report.pci_total), (1, 1));
        assert_eq!(report.rmse, 0.0);
        assert_eq!(report.undefined_groups, 0);
    }

    #[test]
    fn mean_rho_is_arithmetic_mean() {
        // rho = 1 and rho = 0.5 average to 0.75
        let groups = vec![
            group("q1", &[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]),
            group("q2", &[1.0, 2.0, 4.0, 3.0], &[1.0, 2.0, 3.0, 4.0]),
        ];
        let report = validation_report(&groups).unwrap();
        let q2 = rho(&[1.0, 2.0, 4.0, 3.0], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(q2, 0.8);
        assert_eq!(report.mean_spearman, Some((1.0 + 0.8) / 2.0));
    }

    #[test]
    fn mean_rho_half_case() {
        // construct a group with rho exactly 0.5: d^2 sum = 5 over n = 5?
        // 1 - 6*5/(5*24) = 0.75; instead use n = 4 with d^2 sum = 5:
        // 1 - 30/60 = 0.5
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 1.0, 4.0, 3.0]; // d = (1,-1,1,-1)? d^2 = 4 -> 1-24/60 = 0.6
        assert_eq!(rho(&xs, &ys), 0.6);
        let groups = vec![
            group("q1", &xs, &xs),
            group("q2", &ys, &xs),
        ];
        let report = validation_report(&groups).unwrap();
        assert_eq!(report.mean_spearman, Some(0.8));
    }

    #[test]
    fn undefined_groups_excluded_and_counted() {
        let groups = vec![
            group("q1", &[1.0, 2.0], &[1.0, 2.0]),
            group("q2", &[2.0, 2.0], &[1.0, 2.0]),
        ];
        let report = validation_report(&groups).unwrap();
        assert_eq!(report.mean_spearman, Some(1.0));
        assert_eq!(report.undefined_groups, 1);
        assert_eq!(report.pci_perfect, 1);
        assert_eq!(report.pci_total, 2);
    }

    #[test]
    fn empty_groups_rejected() {
        assert!(matches!(validation_report(&[]), Err(MetricsError::NoGroups)));
        let bad = group("q", &[1.0], &[1.0]);
        assert!(matches!(
            validation_report(&[bad]),
            Err(MetricsError::BadGroup { .. })
        ));
    }

    #[test]
    fn csv_has_table_shape() {
        let report = validation_report(&[group("q", &[0.1, 0.2], &[0.1, 0.2])]).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "metric,value");
        assert!(lines.iter().any(|l| l.starts_with("mean_spearman,")));
        assert!(lines.iter().any(|l| *l == "pci,1/1"));
        assert!(lines.iter().any(|l| l.starts_with("rmsle,")));
    }
}
