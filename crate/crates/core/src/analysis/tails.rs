//! Token-level divergence, per-example percentiles and survival ECDFs with
//! percentile-bootstrap confidence bands.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceTensor;
use crate::error::{Error, Result};
use crate::rng::substream;

/// Unweighted mean over all `L*H` heads, one value per row of the tensor.
pub fn token_divergence(tensor: &DivergenceTensor) -> Vec<f64> {
    let width = tensor.heads_per_row() as f64;
    (0..tensor.num_rows())
        .map(|r| tensor.row(r).iter().sum::<f64>() / width)
        .collect()
}

/// Token divergences of the generated rows only.
pub fn answer_token_divergence(tensor: &DivergenceTensor) -> Vec<f64> {
    let all = token_divergence(tensor);
    tensor.generated_rows().map(|r| all[r]).collect()
}

/// Linear-interpolation percentile: rank `(n - 1) p / 100` between order statistics.
pub fn example_percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Validation("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Config(format!("percentile {p} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// `n_points` evenly spaced thresholds spanning the pooled range of `groups`.
pub fn threshold_grid(groups: &[&[f64]], n_points: usize) -> Vec<f64> {
    let (lo, hi) = groups
        .iter()
        .flat_map(|g| g.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || n_points == 0 {
        return Vec::new();
    }
    if n_points == 1 || lo == hi {
        return vec![lo];
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    (0..n_points).map(|i| if i + 1 == n_points { hi } else { lo + step * i as f64 }).collect()
}

/// `P(V >= x)` for each threshold, given ascending-sorted `sorted`.
fn survival_sorted(sorted: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    thresholds
        .iter()
        .map(|&x| (sorted.len() - sorted.partition_point(|&v| v < x)) as f64 / n)
        .collect()
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalBand {
    pub level: f64,
    pub resamples: usize,
    pub seed: u64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub thresholds: Vec<f64>,
    pub correct: Vec<f64>,
    pub incorrect: Vec<f64>,
    /// `correct - incorrect` at each threshold.
    pub difference: Vec<f64>,
    pub band: Option<SurvivalBand>,
}

impl SurvivalCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,correct,incorrect,difference,lower,upper\n");
        for i in 0..self.thresholds.len() {
            let (lo, hi) = match &self.band {
                Some(b) => (b.lower[i].to_string(), b.upper[i].to_string()),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{lo},{hi}\n",
                self.thresholds[i], self.correct[i], self.incorrect[i], self.difference[i]
            ));
        }
        out
    }
}

fn check_groups(correct: &[f64], incorrect: &[f64], thresholds: &[f64]) -> Result<()> {
    if correct.is_empty() || incorrect.is_empty() {
        return Err(Error::Validation("both label groups must be non-empty".into()));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Validation("thresholds must be ascending".into()));
    }
    Ok(())
}

/// Empirical survival functions of both groups on a shared threshold grid.
pub fn survival_curve(correct: &[f64], incorrect: &[f64], thresholds: &[f64]) -> Result<SurvivalCurve> {
    check_groups(correct, incorrect, thresholds)?;
    let c = survival_sorted(&sorted_copy(correct), thresholds);
    let i = survival_sorted(&sorted_copy(incorrect), thresholds);
    let difference = c.iter().zip(&i).map(|(a, b)| a - b).collect();
    Ok(SurvivalCurve {
        thresholds: thresholds.to_vec(),
        correct: c,
        incorrect: i,
        difference,
        band: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

fn resample(values: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let mut out: Vec<f64> = (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Survival curves plus a percentile-bootstrap band on their difference.
///
/// Each resample draws both groups independently with replacement; resample
/// `b` uses its own substream of `cfg.seed`.
pub fn survival_diff_ci(correct: &[f64], incorrect: &[f64], thresholds: &[f64], cfg: &BootstrapConfig) -> Result<SurvivalCurve> {
    if cfg.resamples == 0 || !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::Config(format!(
            "bootstrap needs resamples >= 1 and level in (0, 1), got {} and {}",
            cfg.resamples, cfg.level
        )));
    }
    let mut curve = survival_curve(correct, incorrect, thresholds)?;
    let diffs: Vec<Vec<f64>> = (0..cfg.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(cfg.seed, b as u64);
            let c = survival_sorted(&resample(correct, &mut rng), thresholds);
            let i = survival_sorted(&resample(incorrect, &mut rng), thresholds);
            c.iter().zip(&i).map(|(a, b)| a - b).collect()
        })
        .collect();
    let alpha = (1.0 - cfg.level) / 2.0;
    let mut lower = Vec::with_capacity(thresholds.len());
    let mut upper = Vec::with_capacity(thresholds.len());
    let mut column = vec![0.0; cfg.resamples];
    for t in 0..thresholds.len() {
        for (slot, d) in column.iter_mut().zip(&diffs) {
            *slot = d[t];
        }
        column.sort_by(f64::total_cmp);
        lower.push(percentile_sorted(&column, 100.0 * alpha));
        upper.push(percentile_sorted(&column, 100.0 * (1.0 - alpha)));
    }
    curve.band = Some(SurvivalBand {
        level: cfg.level,
        resamples: cfg.resamples,
        seed: cfg.seed,
        lower,
        upper,
    });
    Ok(curve)
}
