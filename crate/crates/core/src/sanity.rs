//! Surface-feature baselines and the permuted-label control.
//!
//! Baselines only ever see [`DumpMetadata`], never attention values.

use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, permute_labels, CvConfig, Dataset, Summary};
use crate::dump::DumpMetadata;
use crate::error::{Error, Result};
use crate::metrics::auroc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceFeature {
    /// Generated tokens.
    GenerationLength,
    /// Prompt tokens.
    PromptLength,
    /// Characters of the raw generated text.
    RawOutputLength,
    EndsWithPunctuation,
    DigitCount,
}

impl SurfaceFeature {
    pub const ALL: [SurfaceFeature; 5] = [
        SurfaceFeature::GenerationLength,
        SurfaceFeature::PromptLength,
        SurfaceFeature::RawOutputLength,
        SurfaceFeature::EndsWithPunctuation,
        SurfaceFeature::DigitCount,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SurfaceFeature::GenerationLength => "generation length",
            SurfaceFeature::PromptLength => "prompt length",
            SurfaceFeature::RawOutputLength => "raw output length",
            SurfaceFeature::EndsWithPunctuation => "ends with punctuation",
            SurfaceFeature::DigitCount => "number of digits",
        }
    }

    pub fn value(&self, meta: &DumpMetadata) -> f64 {
        match self {
            SurfaceFeature::GenerationLength => meta.gen_len as f64,
            SurfaceFeature::PromptLength => meta.prompt_len as f64,
            SurfaceFeature::RawOutputLength => meta.raw_output_char_len as f64,
            SurfaceFeature::EndsWithPunctuation => f64::from(u8::from(meta.ends_with_punctuation)),
            SurfaceFeature::DigitCount => meta.digit_count as f64,
        }
    }
}

/// Labels carried in the metadata, in order.
pub fn metadata_labels(metas: &[DumpMetadata]) -> Result<Vec<u8>> {
    metas
        .iter()
        .map(|m| {
            m.label
                .ok_or_else(|| Error::Metadata(format!("example {} has no label", m.example_id)))
        })
        .collect()
}

/// AUROC of one raw surface feature against correctness.
pub fn baseline_auroc(feature: SurfaceFeature, metas: &[DumpMetadata], labels: &[u8]) -> Result<f64> {
    if metas.len() != labels.len() {
        return Err(Error::Metadata(format!(
            "{} metadata records for {} labels",
            metas.len(),
            labels.len()
        )));
    }
    let scores: Vec<f64> = metas.iter().map(|m| feature.value(m)).collect();
    auroc(&scores, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityConfig {
    pub n_permutations: usize,
    pub seed: u64,
    /// Folds and probe settings for the permuted-label runs; each permutation
    /// is cross-validated with the single seed `seed + permutation index`.
    pub cv: CvConfig,
}

impl Default for SanityConfig {
    fn default() -> Self {
        Self {
            n_permutations: 20,
            seed: 0,
            cv: CvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityRow {
    pub name: String,
    pub auroc: f64,
    /// Spread across permutations; zero for single-evaluation rows.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub rows: Vec<SanityRow>,
}

impl SanityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("baseline,auroc,std\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.name, r.auroc, r.std));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<28} {:>8}\n", "baseline", "auroc");
        for r in &self.rows {
            out.push_str(&format!("{:<28} {:>8.4}\n", r.name, r.auroc));
        }
        out
    }
}

/// Mean cross-validated AUROC of the divergence probe over `n` label permutations.
pub fn permutation_auroc(data: &Dataset, cfg: &SanityConfig) -> Result<Summary> {
    let mut values = Vec::with_capacity(cfg.n_permutations);
    for k in 0..cfg.n_permutations as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let permuted = data.with_labels(permute_labels(&data.y, seed))?;
        let cv = CvConfig {
            seeds: vec![seed],
            ..cfg.cv.clone()
        };
        values.push(cross_validate(&permuted, &cv)?.auroc.mean);
    }
    Ok(Summary::of(&values))
}

/// Five surface baselines plus the permuted-label probe, one row each.
///
/// `data` must list the same examples as `metas`, in the same order.
pub fn run_sanity_suite(metas: &[DumpMetadata], data: &Dataset, cfg: &SanityConfig) -> Result<SanityReport> {
    if metas.len() != data.len() || metas.iter().zip(&data.ids).any(|(m, id)| &m.example_id != id) {
        return Err(Error::Metadata("metadata and features list different examples".into()));
    }
    let labels = &data.y;
    let mut rows = Vec::with_capacity(SurfaceFeature::ALL.len() + 1);
    for f in SurfaceFeature::ALL {
        rows.push(SanityRow {
            name: f.name().into(),
            auroc: baseline_auroc(f, metas, labels)?,
            std: 0.0,
        });
    }
    let perm = permutation_auroc(data, cfg)?;
    rows.push(SanityRow {
        name: "permuted labels".into(),
        auroc: perm.mean,
        std: perm.std,
    });
    Ok(SanityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dump::SCHEMA_VERSION;

    fn meta(id: usize, label: u8, digits: usize) -> DumpMetadata {
        DumpMetadata {
            schema_version: SCHEMA_VERSION,
            model_name: "m".into(),
            dataset_name: "d".into(),
            example_id: format!("e{id}"),
            num_layers: 1,
            num_heads: 1,
            prompt_len: 3,
            gen_len: 2,
            has_prefill: false,
            label: Some(label),
            prompt_char_len: 10,
            raw_output_char_len: 4,
            ends_with_punctuation: false,
            digit_count: digits,
            word_ids: None,
            word_classes: None,
        }
    }

    #[test]
    fn constant_and_perfect_baselines() {
        let metas: Vec<_> = (0..6).map(|i| meta(i, (i % 2) as u8, i % 2)).collect();
        let labels = metadata_labels(&metas).unwrap();
        assert_eq!(baseline_auroc(SurfaceFeature::GenerationLength, &metas, &labels).unwrap(), 0.5);
        assert_eq!(baseline_auroc(SurfaceFeature::DigitCount, &metas, &labels).unwrap(), 1.0);
        assert!(matches!(
            baseline_auroc(SurfaceFeature::DigitCount, &metas, &labels[..2]),
            Err(Error::Metadata(_))
        ));
    }

    #[test]
    fn missing_label_in_metadata() {
        let mut m = meta(0, 1, 0);
        m.label = None;
        assert!(matches!(metadata_labels(&[m]), Err(Error::Metadata(_))));
    }
}
