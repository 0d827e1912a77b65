//! Run configuration: a JSON file (`--config`) merged with command-line flags.
//! Every flag has a same-named snake_case key in the file; flags win.

use std::path::{Path, PathBuf};

use adiv_core::cv::CvConfig;
use adiv_core::divergence::{DivergenceConfig, Pooling, Scope};
use adiv_core::probe::TrainConfig;
use adiv_core::{Error, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSON run configuration; explicit flags override its values
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Attention dump (ADV1)
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Feature file (JSON lines)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Token rows to pool: prompt, answer or full
    #[arg(long)]
    pub scope: Option<String>,
    /// Pooling over rows: mean or max
    #[arg(long)]
    pub pooling: Option<String>,
    /// Clamp inside logarithms
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// L1 penalty on the summed log-loss
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Cross-validation seed; repeat for several (duplicates collapse)
    #[arg(long = "seeds")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,

    /// Sub-mode of ablate or analyze
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of top-ranked heads to remove
    #[arg(long)]
    pub k: Option<usize>,
    /// Layers per model (feature grid rows)
    #[arg(long)]
    pub layers: Option<usize>,
    /// Heads per layer (feature grid columns)
    #[arg(long)]
    pub heads: Option<usize>,
    /// Probe model for analyze --mode heads, as NAME=PATH; repeatable
    #[arg(long = "model")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<String>,

    /// Per-example (ecdf) or word (words) percentile
    #[arg(long)]
    pub percentile: Option<f64>,
    /// Survival-curve thresholds
    #[arg(long)]
    pub points: Option<usize>,
    /// Bootstrap resamples
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Bootstrap confidence level
    #[arg(long)]
    pub level: Option<f64>,
    /// Label permutations for the sanity control
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Seed for synthetic data, bootstrap and permutations
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub n_examples: Option<usize>,
    #[arg(long)]
    pub prompt_len: Option<usize>,
    #[arg(long)]
    pub gen_len: Option<usize>,
    #[arg(long)]
    pub alpha_correct: Option<f64>,
    #[arg(long)]
    pub alpha_incorrect: Option<f64>,
    #[arg(long)]
    pub base_rate: Option<f64>,
    /// Omit the prompt prefill block from synthetic dumps
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_prefill: Option<bool>,

    /// Worker threads (0 = logical cores)
    #[arg(long)]
    pub jobs: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RunConfig {
    /// Reads `--config` (if given) and lays the explicit flags over it.
    pub fn resolve(flags: RunConfig) -> Result<RunConfig> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        overlay!(cfg, flags;
            dump, features, out, scope, pooling, epsilon, lambda, max_iter, tol, folds, mode, k,
            layers, heads, percentile, points, resamples, level, permutations, seed, n_examples,
            prompt_len, gen_len, alpha_correct, alpha_incorrect, base_rate, no_prefill, jobs,
        );
        if !flags.seeds.is_empty() {
            cfg.seeds = flags.seeds;
        }
        if !flags.models.is_empty() {
            cfg.models = flags.models;
        }
        Ok(cfg)
    }

    pub fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| Error::Config(format!("--{flag} is required")))
    }

    pub fn dump_path(&self) -> Result<&Path> {
        Ok(Self::require(&self.dump, "dump")?.as_path())
    }

    pub fn features_path(&self) -> Result<&Path> {
        Ok(Self::require(&self.features, "features")?.as_path())
    }

    pub fn out_dir(&self) -> Result<&Path> {
        Ok(Self::require(&self.out, "out")?.as_path())
    }

    pub fn scope(&self) -> Result<Scope> {
        self.scope.as_deref().unwrap_or("answer").parse()
    }

    pub fn pooling(&self) -> Result<Pooling> {
        self.pooling.as_deref().unwrap_or("mean").parse()
    }

    pub fn divergence(&self) -> Result<DivergenceConfig> {
        match self.epsilon {
            Some(eps) => DivergenceConfig::new(eps),
            None => Ok(DivergenceConfig::default()),
        }
    }

    pub fn cv(&self) -> Result<CvConfig> {
        let base = CvConfig::default();
        let probe = TrainConfig {
            lambda: self.lambda.unwrap_or(base.probe.lambda),
            max_iter: self.max_iter.unwrap_or(base.probe.max_iter),
            tol: self.tol.unwrap_or(base.probe.tol),
            ..base.probe
        };
        probe.validate()?;
        let cfg = CvConfig {
            folds: self.folds.unwrap_or(base.folds),
            seeds: if self.seeds.is_empty() { base.seeds.clone() } else { self.seeds.clone() },
            probe,
            ..base
        };
        Ok(CvConfig {
            seeds: cfg.normalized_seeds(),
            ..cfg
        })
    }

    pub fn grid(&self) -> Result<(usize, usize)> {
        Ok((*Self::require(&self.layers, "layers")?, *Self::require(&self.heads, "heads")?))
    }

    pub fn mode(&self) -> Result<&str> {
        Ok(Self::require(&self.mode, "mode")?.as_str())
    }
}
