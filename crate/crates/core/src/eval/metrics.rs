use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average precision over a descending-score ranking.
///
/// Rows with equal scores form one group: every positive in a group gets
/// the precision measured after the whole group is admitted. This equals
/// the step-wise area under the precision-recall curve with one threshold
/// per distinct score.
pub fn auprc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("scores contain NaN".into()));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 {
        return Err(Error::InvalidInput("AUPRC needs at least one positive label".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut seen, mut hits, mut sum) = (0usize, 0usize, 0.0);
    let mut start = 0;
    while start < order.len() {
        let score = scores[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| scores[i] == score).count();
        let group_hits = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        seen += end - start;
        hits += group_hits;
        sum += group_hits as f64 * hits as f64 / seen as f64;
        start = end;
    }
    Ok(sum / positives as f64)
}

/// Misclassification costs: `c01` for a false negative (true 1 predicted
/// 0), `c10` for a false positive.
///
/// Imbalanced problems normally have `c01 >= c10`; other values are
/// accepted, see [`CostMatrix::favours_minority`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub c01: f64,
    pub c10: f64,
}

impl CostMatrix {
    pub fn new(c01: f64, c10: f64) -> Result<Self> {
        if !(c01 >= 0.0 && c10 >= 0.0 && c01.is_finite() && c10.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "costs must be finite and non-negative, got ({c01}, {c10})"
            )));
        }
        Ok(Self { c01, c10 })
    }

    pub fn favours_minority(&self) -> bool {
        self.c01 >= self.c10
    }
}

/// Empirical asymmetric risk `c01 * pi1 * FNR + c10 * pi0 * FPR`.
pub fn compute_asymmetric_risk(predictions: &[u8], labels: &[u8], costs: &CostMatrix) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    let n = labels.len() as f64;
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            majority: negatives,
            minority: positives,
        });
    }
    let (mut fn_, mut fp) = (0usize, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (y, p) {
            (1, 0) => fn_ += 1,
            (0, 1) => fp += 1,
            _ => {}
        }
    }
    let pi1 = positives as f64 / n;
    let pi0 = negatives as f64 / n;
    let fnr = fn_ as f64 / positives as f64;
    let fpr = fp as f64 / negatives as f64;
    Ok(costs.c01 * pi1 * fnr + costs.c10 * pi0 * fpr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auprc(&[0.9, 0.1], &[0, 1]).unwrap(), 0.5);
        let labels = [1, 0, 0, 1, 0, 0, 0, 0];
        assert_eq!(auprc(&[0.3; 8], &labels).unwrap(), 0.25);
    }

    #[test]
    fn auprc_errors() {
        assert!(auprc(&[0.5, 0.2], &[0, 0]).is_err());
        assert!(auprc(&[0.5], &[1, 0]).is_err());
        assert!(auprc(&[f64::NAN, 0.2], &[1, 0]).is_err());
    }

    #[test]
    fn risk_examples() {
        let unit = CostMatrix::new(1.0, 1.0).unwrap();
        let labels = [1, 0, 1, 0];
        assert_eq!(compute_asymmetric_risk(&labels, &labels, &unit).unwrap(), 0.0);
        assert_eq!(compute_asymmetric_risk(&[0; 4], &labels, &unit).unwrap(), 0.5);

        let labels = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let preds = [0, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let costs = CostMatrix::new(5.0, 1.0).unwrap();
        assert!((compute_asymmetric_risk(&preds, &labels, &costs).unwrap() - 0.5).abs() < 1e-15);
        assert!(costs.favours_minority());
        assert!(!CostMatrix::new(1.0, 2.0).unwrap().favours_minority());
    }

    #[test]
    fn risk_errors() {
        let unit = CostMatrix::new(1.0, 1.0).unwrap();
        assert!(compute_asymmetric_risk(&[0, 0], &[1, 1], &unit).is_err());
        assert!(compute_asymmetric_risk(&[0], &[1, 0], &unit).is_err());
        assert!(CostMatrix::new(-1.0, 1.0).is_err());
    }
}
