//! Stratified fold planning, seeded cross-validation and label permutation.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dump::FeatureRecord;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, auroc, ece, DEFAULT_ECE_BINS, DEFAULT_THRESHOLD};
use crate::probe::{predict_proba, train, TrainConfig};
use crate::rng::stream;

/// Labeled design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(ids: Vec<String>, x: Array2<f64>, y: Vec<u8>) -> Result<Self> {
        if ids.len() != x.nrows() || y.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "{} ids, {} rows, {} labels",
                ids.len(),
                x.nrows(),
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!("labels must be 0 or 1, found {bad}")));
        }
        Ok(Self { ids, x, y })
    }

    /// Builds a dataset from feature records; every record must carry a label.
    pub fn from_records(records: &[FeatureRecord]) -> Result<Self> {
        let width = records.first().map_or(0, |r| r.features.len());
        let mut x = Array2::zeros((records.len(), width));
        let mut y = Vec::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if rec.features.len() != width {
                return Err(Error::Schema(format!(
                    "record {} has {} features, expected {width}",
                    rec.example_id,
                    rec.features.len()
                )));
            }
            let label = rec
                .label
                .ok_or_else(|| Error::Schema(format!("record {} has no label", rec.example_id)))?;
            y.push(label);
            for (j, &v) in rec.features.iter().enumerate() {
                x[[i, j]] = v;
            }
        }
        Self::new(records.iter().map(|r| r.example_id.clone()).collect(), x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            x: self.x.select(Axis(0), rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Copy with the listed feature columns removed.
    pub fn drop_columns(&self, drop: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = drop.iter().find(|&&j| j >= self.num_features()) {
            return Err(Error::Dimension(format!(
                "column {bad} out of range for {} features",
                self.num_features()
            )));
        }
        let keep: Vec<usize> = (0..self.num_features()).filter(|j| !drop.contains(j)).collect();
        Ok(Dataset {
            ids: self.ids.clone(),
            x: self.x.select(Axis(1), &keep),
            y: self.y.clone(),
        })
    }

    pub fn with_labels(&self, y: Vec<u8>) -> Result<Dataset> {
        Dataset::new(self.ids.clone(), self.x.clone(), y)
    }
}

/// Fold assignment of each example, by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_members(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Shuffles each class with the seeded stream and deals it round-robin over
/// `k` folds, continuing the deal where the previous class stopped.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    let mut rng = stream(seed);
    let mut assignments = vec![0usize; labels.len()];
    let mut next = 0usize;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} members, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    if let Some(bad) = labels.iter().find(|&&v| v > 1) {
        return Err(Error::Validation(format!("labels must be 0 or 1, found {bad}")));
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// Uniformly random permutation of `labels`, deterministic per seed.
pub fn permute_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    out.shuffle(&mut stream(seed));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seeds: Vec<u64>,
    pub probe: TrainConfig,
    pub ece_bins: usize,
    pub threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seeds: vec![0, 1, 2],
            probe: TrainConfig::default(),
            ece_bins: DEFAULT_ECE_BINS,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl CvConfig {
    /// Seeds sorted and deduplicated.
    pub fn normalized_seeds(&self) -> Vec<u64> {
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Metrics of one (seed, fold) evaluation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub seed: u64,
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub auroc: f64,
    pub accuracy: f64,
    pub ece: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation across cells.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auroc: Summary,
    pub accuracy: Summary,
    pub ece: Summary,
    pub cells: Vec<CellMetrics>,
}

impl MetricReport {
    pub fn from_cells(cells: Vec<CellMetrics>) -> Self {
        let pick = |f: fn(&CellMetrics) -> f64| cells.iter().map(f).collect::<Vec<_>>();
        Self {
            auroc: Summary::of(&pick(|c| c.auroc)),
            accuracy: Summary::of(&pick(|c| c.accuracy)),
            ece: Summary::of(&pick(|c| c.ece)),
            cells,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-cell metrics as CSV.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("seed,fold,n_train,n_valid,auroc,accuracy,ece\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.seed, c.fold, c.n_train, c.n_valid, c.auroc, c.accuracy, c.ece
            ));
        }
        out
    }

    /// Aligned human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<10} {:>8} {:>8}\n", "metric", "mean", "std");
        for (name, s) in [("auroc", self.auroc), ("accuracy", self.accuracy), ("ece", self.ece)] {
            out.push_str(&format!("{name:<10} {:>8.4} {:>8.4}\n", s.mean, s.std));
        }
        out.push_str(&format!("cells: {}\n", self.cells.len()));
        out
    }
}

fn evaluate_cell(data: &Dataset, train_rows: &[usize], valid_rows: &[usize], seed: u64, fold: usize, cfg: &CvConfig) -> Result<CellMetrics> {
    let train_set = data.subset(train_rows);
    let valid_set = data.subset(valid_rows);
    let model = train(train_set.x.view(), &train_set.y, &cfg.probe)?;
    let probs = predict_proba(&model, valid_set.x.view())?;
    Ok(CellMetrics {
        seed,
        fold,
        n_train: train_rows.len(),
        n_valid: valid_rows.len(),
        auroc: auroc(&probs, &valid_set.y)?,
        accuracy: accuracy(&probs, &valid_set.y, cfg.threshold)?,
        ece: ece(&probs, &valid_set.y, cfg.ece_bins)?,
    })
}

/// Stratified k-fold evaluation repeated over every seed; aggregates over all
/// seed x fold cells. Cells run in parallel and are reduced in (seed, fold) order.
pub fn cross_validate(data: &Dataset, cfg: &CvConfig) -> Result<MetricReport> {
    let seeds = cfg.normalized_seeds();
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let plans = seeds
        .iter()
        .map(|&s| stratified_kfold(&data.y, cfg.folds, s))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(&FoldPlan, usize)> = plans.iter().flat_map(|p| (0..p.k).map(move |f| (p, f))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(plan, fold)| {
            evaluate_cell(data, &plan.complement(fold), &plan.fold_members(fold), plan.seed, fold, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_cells(cells))
}

/// Stratified single split per seed: `test_fraction` of each class is held out.
pub fn holdout_evaluate(data: &Dataset, cfg: &CvConfig, test_fraction: f64) -> Result<MetricReport> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let seeds = cfg.normalized_seeds();
    let cells = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = stream(seed);
            let mut valid = Vec::new();
            for class in [0u8, 1] {
                let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == class).collect();
                let take = ((members.len() as f64 * test_fraction).round() as usize).max(1);
                if take >= members.len() {
                    return Err(Error::Stratification(format!(
                        "class {class} has {} members, too few for a holdout split",
                        members.len()
                    )));
                }
                members.shuffle(&mut rng);
                valid.extend_from_slice(&members[..take]);
            }
            valid.sort_unstable();
            let train_rows: Vec<usize> = (0..data.len()).filter(|i| valid.binary_search(i).is_err()).collect();
            evaluate_cell(data, &train_rows, &valid, seed, 0, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_cells(cells))
}
