//! Dump-to-feature extraction.

use rayon::prelude::*;

use crate::divergence::{compute_divergence_tensor, pool_features, DivergenceConfig, Pooling, Scope};
use crate::dump::{DumpExample, FeatureRecord};
use crate::error::Result;

pub fn extract_record(example: &DumpExample, scope: Scope, pooling: Pooling, cfg: &DivergenceConfig) -> Result<FeatureRecord> {
    let tensor = compute_divergence_tensor(example, cfg)?;
    let fv = pool_features(&tensor, scope, pooling)?;
    Ok(FeatureRecord {
        example_id: example.meta.example_id.clone(),
        label: example.meta.label,
        scope,
        pooling,
        features: fv.entries,
    })
}

/// One feature record per example, in input order.
pub fn extract_features(examples: &[DumpExample], scope: Scope, pooling: Pooling, cfg: &DivergenceConfig) -> Result<Vec<FeatureRecord>> {
    examples
        .par_iter()
        .map(|ex| extract_record(ex, scope, pooling, cfg))
        .collect()
}
