//! Per-head statistics: class-conditional divergence differences, probe head
//! rankings, layer regions and head-selection overlap.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::cv::Dataset;
use crate::error::{Error, Result};
use crate::probe::ProbeModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HeadIndex {
    pub layer: usize,
    pub head: usize,
}

impl HeadIndex {
    pub fn from_flat(index: usize, num_heads: usize) -> Self {
        Self {
            layer: index / num_heads,
            head: index % num_heads,
        }
    }

    pub fn flat(&self, num_heads: usize) -> usize {
        self.layer * num_heads + self.head
    }
}

fn check_grid(width: usize, num_layers: usize, num_heads: usize) -> Result<()> {
    if num_layers == 0 || num_heads == 0 || num_layers * num_heads != width {
        return Err(Error::Dimension(format!(
            "{width} features do not form a {num_layers} x {num_heads} head grid"
        )));
    }
    Ok(())
}

/// Mean feature over correct examples minus mean over incorrect ones, per head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMap {
    pub num_layers: usize,
    pub num_heads: usize,
    pub values: Vec<f64>,
}

impl DeltaMap {
    pub fn get(&self, layer: usize, head: usize) -> f64 {
        self.values[layer * self.num_heads + head]
    }

    /// Long-format CSV: `layer,head,delta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,head,delta\n");
        for l in 0..self.num_layers {
            for h in 0..self.num_heads {
                out.push_str(&format!("{l},{h},{}\n", self.get(l, h)));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn class_mean(data: &Dataset, class: u8, col: usize) -> f64 {
    let (sum, n) = data
        .y
        .iter()
        .enumerate()
        .filter(|(_, &y)| y == class)
        .fold((0.0, 0usize), |(s, n), (i, _)| (s + data.x[[i, col]], n + 1));
    sum / n as f64
}

pub fn delta_divergence_map(data: &Dataset, num_layers: usize, num_heads: usize) -> Result<DeltaMap> {
    check_grid(data.num_features(), num_layers, num_heads)?;
    let pos = data.y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::DegenerateLabels);
    }
    let values = (0..data.num_features())
        .map(|j| class_mean(data, 1, j) - class_mean(data, 0, j))
        .collect();
    Ok(DeltaMap {
        num_layers,
        num_heads,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedHead {
    pub head: HeadIndex,
    pub weight: f64,
}

/// Heads with nonzero probe weight, by descending `|w|`; ties by (layer, head).
pub fn rank_heads(model: &ProbeModel, num_heads: usize) -> Result<Vec<RankedHead>> {
    if num_heads == 0 || !model.feature_len.is_multiple_of(num_heads) {
        return Err(Error::Dimension(format!(
            "{} weights do not split into rows of {num_heads} heads",
            model.feature_len
        )));
    }
    let mut ranked: Vec<RankedHead> = model
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(j, &w)| RankedHead {
            head: HeadIndex::from_flat(j, num_heads),
            weight: w,
        })
        .collect();
    ranked.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then(a.head.cmp(&b.head)));
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerGroup {
    Early,
    Middle,
    Late,
}

impl LayerGroup {
    pub const ALL: [LayerGroup; 3] = [LayerGroup::Early, LayerGroup::Middle, LayerGroup::Late];

    pub fn as_str(&self) -> &'static str {
        match self {
            LayerGroup::Early => "early",
            LayerGroup::Middle => "middle",
            LayerGroup::Late => "late",
        }
    }
}

impl std::str::FromStr for LayerGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(LayerGroup::Early),
            "middle" => Ok(LayerGroup::Middle),
            "late" => Ok(LayerGroup::Late),
            other => Err(Error::Config(format!("unknown layer group `{other}`"))),
        }
    }
}

/// Depth thirds `[0, ceil(L/3))`, `[ceil(L/3), ceil(2L/3))`, `[ceil(2L/3), L)`.
pub fn layer_thirds(num_layers: usize) -> Result<[Range<usize>; 3]> {
    if num_layers < 3 {
        return Err(Error::Config(format!("layer thirds need L >= 3, got {num_layers}")));
    }
    let a = num_layers.div_ceil(3);
    let b = (2 * num_layers).div_ceil(3);
    Ok([0..a, a..b, b..num_layers])
}

pub fn layer_group_range(group: LayerGroup, num_layers: usize) -> Result<Range<usize>> {
    let [early, middle, late] = layer_thirds(num_layers)?;
    Ok(match group {
        LayerGroup::Early => early,
        LayerGroup::Middle => middle,
        LayerGroup::Late => late,
    })
}

/// Heads chosen by one or more probe fits, with how often each was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSelection {
    pub num_layers: usize,
    pub num_heads: usize,
    pub counts: Vec<SelectedHead>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedHead {
    pub layer: usize,
    pub head: usize,
    pub count: usize,
}

impl HeadSelection {
    /// Counts, over `models`, how many times each head has a nonzero weight.
    pub fn from_models<'a>(models: impl IntoIterator<Item = &'a ProbeModel>, num_layers: usize, num_heads: usize) -> Result<Self> {
        let mut counts: BTreeMap<HeadIndex, usize> = BTreeMap::new();
        for model in models {
            check_grid(model.feature_len, num_layers, num_heads)?;
            for j in model.support() {
                *counts.entry(HeadIndex::from_flat(j, num_heads)).or_default() += 1;
            }
        }
        Ok(Self::from_counts(counts, num_layers, num_heads))
    }

    pub fn from_heads(heads: impl IntoIterator<Item = HeadIndex>, num_layers: usize, num_heads: usize) -> Result<Self> {
        let mut counts: BTreeMap<HeadIndex, usize> = BTreeMap::new();
        for h in heads {
            if h.layer >= num_layers || h.head >= num_heads {
                return Err(Error::Dimension(format!(
                    "head ({}, {}) outside a {num_layers} x {num_heads} grid",
                    h.layer, h.head
                )));
            }
            *counts.entry(h).or_default() += 1;
        }
        Ok(Self::from_counts(counts, num_layers, num_heads))
    }

    fn from_counts(counts: BTreeMap<HeadIndex, usize>, num_layers: usize, num_heads: usize) -> Self {
        Self {
            num_layers,
            num_heads,
            counts: counts
                .into_iter()
                .map(|(h, count)| SelectedHead {
                    layer: h.layer,
                    head: h.head,
                    count,
                })
                .collect(),
        }
    }

    pub fn heads(&self) -> impl Iterator<Item = HeadIndex> + '_ {
        self.counts.iter().map(|s| HeadIndex {
            layer: s.layer,
            head: s.head,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// A head shared by two or more selections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub layer: usize,
    pub head: usize,
    pub sources: Vec<String>,
}

/// Heads that appear in at least two of the named selections (all of one grid shape).
pub fn head_overlap(selections: &[(String, HeadSelection)]) -> Result<Vec<OverlapRow>> {
    if let Some((_, first)) = selections.first() {
        for (name, sel) in selections {
            if (sel.num_layers, sel.num_heads) != (first.num_layers, first.num_heads) {
                return Err(Error::Dimension(format!(
                    "selection `{name}` is {} x {}, expected {} x {}",
                    sel.num_layers, sel.num_heads, first.num_layers, first.num_heads
                )));
            }
        }
    }
    Ok(overlap_of(selections.iter().map(|(n, s)| (n.clone(), s.heads().collect()))))
}

fn overlap_of(groups: impl Iterator<Item = (String, Vec<HeadIndex>)>) -> Vec<OverlapRow> {
    let mut seen: BTreeMap<HeadIndex, Vec<String>> = BTreeMap::new();
    for (name, heads) in groups {
        for h in heads {
            let sources = seen.entry(h).or_default();
            if sources.last() != Some(&name) {
                sources.push(name.clone());
            }
        }
    }
    seen.into_iter()
        .filter(|(_, s)| s.len() >= 2)
        .map(|(h, sources)| OverlapRow {
            layer: h.layer,
            head: h.head,
            sources,
        })
        .collect()
}

/// Exact (layer, head) pairs selected in at least one dataset of two or more models.
pub fn cross_model_overlap(models: &[(String, Vec<HeadSelection>)]) -> Result<Vec<OverlapRow>> {
    let mut groups = Vec::with_capacity(models.len());
    for (name, selections) in models {
        let named: Vec<(String, HeadSelection)> =
            selections.iter().map(|s| (name.clone(), s.clone())).collect();
        head_overlap(&named)?;
        let mut heads: Vec<HeadIndex> = selections.iter().flat_map(|s| s.heads()).collect();
        heads.sort_unstable();
        heads.dedup();
        groups.push((name.clone(), heads));
    }
    Ok(overlap_of(groups.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDistribution {
    pub early: f64,
    pub middle: f64,
    pub late: f64,
    pub counts: [usize; 3],
}

/// Percentage of `heads` falling in each depth third.
pub fn region_distribution(heads: &[HeadIndex], num_layers: usize) -> Result<RegionDistribution> {
    let thirds = layer_thirds(num_layers)?;
    let mut counts = [0usize; 3];
    for h in heads {
        let slot = thirds
            .iter()
            .position(|r| r.contains(&h.layer))
            .ok_or_else(|| Error::Dimension(format!("layer {} outside [0, {num_layers})", h.layer)))?;
        counts[slot] += 1;
    }
    let total = heads.len() as f64;
    let pct = |c: usize| if heads.is_empty() { 0.0 } else { 100.0 * c as f64 / total };
    Ok(RegionDistribution {
        early: pct(counts[0]),
        middle: pct(counts[1]),
        late: pct(counts[2]),
        counts,
    })
}
