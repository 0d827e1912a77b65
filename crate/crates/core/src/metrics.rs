//! Ranking and calibration metrics for probe scores.

use crate::error::{Error, Result};

pub const DEFAULT_ECE_BINS: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn check_pair(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&v| v > 1) {
        return Err(Error::Validation(format!("labels must be 0 or 1, found {bad}")));
    }
    Ok(())
}

/// Midranks (1-based, ties averaged) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share the average of ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Area under the ROC curve: the probability that a random positive outranks
/// a random negative, with ties counted one half (Mann-Whitney U / (n+ n-)).
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_pair(scores, labels)?;
    if let Some(bad) = scores.iter().find(|v| v.is_nan()) {
        return Err(Error::Validation(format!("score {bad} is not a number")));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes".into()));
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Bin index of `p` among `n_bins` equal-width bins `(b/n, (b+1)/n]`, with 0
/// falling in the first bin.
fn ece_bin(p: f64, n_bins: usize) -> usize {
    let n = n_bins as f64;
    let mut b = ((p * n).ceil() as usize).saturating_sub(1).min(n_bins - 1);
    // correct for rounding in p * n against the exact edge values
    while b > 0 && p <= b as f64 / n {
        b -= 1;
    }
    while b + 1 < n_bins && p > (b + 1) as f64 / n {
        b += 1;
    }
    b
}

/// Expected calibration error: `sum_b (n_b / N) |acc_b - conf_b|` over
/// equal-width right-closed bins on [0, 1].
pub fn ece(probs: &[f64], labels: &[u8], n_bins: usize) -> Result<f64> {
    check_pair(probs, labels)?;
    if probs.is_empty() {
        return Err(Error::UndefinedMetric("ECE of an empty sample".into()));
    }
    if n_bins == 0 {
        return Err(Error::Config("ECE needs at least one bin".into()));
    }
    if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Validation(format!("probability {bad} outside [0, 1]")));
    }
    let mut count = vec![0usize; n_bins];
    let mut conf = vec![0.0; n_bins];
    let mut hits = vec![0.0; n_bins];
    for (&p, &y) in probs.iter().zip(labels) {
        let b = ece_bin(p, n_bins);
        count[b] += 1;
        conf[b] += p;
        hits[b] += f64::from(y);
    }
    let n = probs.len() as f64;
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let nb = count[b] as f64;
            (nb / n) * (hits[b] / nb - conf[b] / nb).abs()
        })
        .sum())
}

/// Fraction of rows where `(p >= threshold)` agrees with the label.
pub fn accuracy(probs: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    check_pair(probs, labels)?;
    if probs.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty sample".into()));
    }
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| u8::from(p >= threshold) == y)
        .count();
    Ok(correct as f64 / probs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.3], &[1, 1, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1, 0.2], &[1, 0]).unwrap(), 0.0);
        assert!(matches!(auroc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn ece_examples() {
        assert_eq!(ece(&[0.0, 1.0, 1.0, 0.0], &[0, 1, 1, 0], 10).unwrap(), 0.0);
        assert_abs_diff_eq!(ece(&[0.7; 4], &[1, 1, 1, 0], 10).unwrap(), 0.05, epsilon = 1e-12);
        assert!(ece(&[], &[], 10).is_err());
        assert!(ece(&[1.2], &[1], 10).is_err());
    }

    #[test]
    fn ece_bins_are_right_closed() {
        assert_eq!(ece_bin(0.0, 10), 0);
        assert_eq!(ece_bin(0.1, 10), 0);
        assert_eq!(ece_bin(0.10000001, 10), 1);
        assert_eq!(ece_bin(0.3, 10), 2);
        assert_eq!(ece_bin(0.7, 10), 6);
        assert_eq!(ece_bin(1.0, 10), 9);
        for b in 1..10 {
            let edge = b as f64 / 10.0;
            assert_eq!(ece_bin(edge, 10), b - 1);
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1.0, 0.0, 1.0], &[1, 0, 1], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.5; 4], &[1, 1, 0, 0], 0.5).unwrap(), 0.5);
        assert!(accuracy(&[], &[], 0.5).is_err());
    }
}
