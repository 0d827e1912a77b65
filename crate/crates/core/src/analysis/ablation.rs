//! Re-running cross-validation with head columns removed.

use serde::{Deserialize, Serialize};

use super::heads::{layer_group_range, rank_heads, LayerGroup, RankedHead};
use crate::cv::{cross_validate, CvConfig, Dataset, MetricReport};
use crate::error::{Error, Result};
use crate::probe::train;

/// Cross-validates after dropping the listed feature columns; dropping all of
/// them leaves an intercept-only probe.
pub fn ablate_columns(data: &Dataset, drop: &[usize], cv: &CvConfig) -> Result<MetricReport> {
    cross_validate(&data.drop_columns(drop)?, cv)
}

/// Removes the first `k` heads of `ranked` from every feature vector.
pub fn ablate_heads(data: &Dataset, ranked: &[RankedHead], k: usize, num_heads: usize, cv: &CvConfig) -> Result<MetricReport> {
    if k >= data.num_features() {
        return Err(Error::Config(format!(
            "cannot remove {k} of {} heads",
            data.num_features()
        )));
    }
    if k > ranked.len() {
        return Err(Error::Config(format!(
            "only {} heads are ranked, cannot remove the top {k}",
            ranked.len()
        )));
    }
    let drop: Vec<usize> = ranked[..k].iter().map(|r| r.head.flat(num_heads)).collect();
    ablate_columns(data, &drop, cv)
}

/// Removes every head in one depth third.
pub fn ablate_layer_group(data: &Dataset, group: LayerGroup, num_layers: usize, num_heads: usize, cv: &CvConfig) -> Result<MetricReport> {
    if num_layers * num_heads != data.num_features() {
        return Err(Error::Dimension(format!(
            "{} features do not form a {num_layers} x {num_heads} grid",
            data.num_features()
        )));
    }
    let layers = layer_group_range(group, num_layers)?;
    let drop: Vec<usize> = layers.flat_map(|l| (0..num_heads).map(move |h| l * num_heads + h)).collect();
    ablate_columns(data, &drop, cv)
}

/// Ranks heads with a probe fitted on all of `data` at the configured penalty.
pub fn rank_on_full_data(data: &Dataset, num_heads: usize, cv: &CvConfig) -> Result<Vec<RankedHead>> {
    let model = train(data.x.view(), &data.y, &cv.probe)?;
    rank_heads(&model, num_heads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub report: MetricReport,
}

/// Baseline plus top-k head removals for each `k` in `ks` (skipping any `k`
/// larger than the number of selected heads) and the three layer groups.
pub fn ablation_suite(data: &Dataset, num_layers: usize, num_heads: usize, ks: &[usize], cv: &CvConfig) -> Result<Vec<AblationRow>> {
    let mut rows = vec![AblationRow {
        name: "baseline".into(),
        report: cross_validate(data, cv)?,
    }];
    let ranked = rank_on_full_data(data, num_heads, cv)?;
    for &k in ks {
        if k == 0 || k > ranked.len() || k >= data.num_features() {
            continue;
        }
        rows.push(AblationRow {
            name: format!("remove top-{k} heads"),
            report: ablate_heads(data, &ranked, k, num_heads, cv)?,
        });
    }
    if num_layers >= 3 {
        for group in LayerGroup::ALL {
            rows.push(AblationRow {
                name: format!("remove {} layers", group.as_str()),
                report: ablate_layer_group(data, group, num_layers, num_heads, cv)?,
            });
        }
    }
    Ok(rows)
}
