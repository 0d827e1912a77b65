//! Attention-divergence features for answer-correctness probing.
//!
//! Attention rows from a decoder are scored by their KL divergence to the
//! uniform distribution over their context, pooled into one feature per
//! (layer, head), and fed to an L1-regularized logistic probe. The crate also
//! carries the evaluation and analysis tooling around that probe: stratified
//! cross-validation, AUROC/ECE/accuracy, head and layer ablations, survival
//! ECDFs with bootstrap bands, word-level tail composition and surface-feature
//! baselines.

pub mod analysis;
pub mod cv;
pub mod divergence;
pub mod dump;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod probe;
pub mod reference;
pub mod rng;
pub mod sanity;

pub use cv::{cross_validate, permute_labels, stratified_kfold, CvConfig, Dataset, FoldPlan, MetricReport};
pub use divergence::{
    compute_divergence_tensor, kl_divergence, kl_to_uniform, pool_features, AttentionRow, DivergenceConfig,
    DivergenceTensor, FeatureVector, Pooling, RowKind, Scope,
};
pub use dump::{read_dump, read_features, write_dump, write_features, DumpExample, DumpMetadata, FeatureRecord};
pub use error::{Error, Result};
pub use metrics::{accuracy, auroc, ece};
pub use probe::{objective, predict_proba, soft_threshold, train, ProbeModel, TrainConfig};
