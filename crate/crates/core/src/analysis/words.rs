//! Word-level aggregation of token divergences and tail class composition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tails::{answer_token_divergence, example_percentile};
use crate::divergence::DivergenceTensor;
use crate::dump::WordClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordPooling {
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word_id: u32,
    pub value: f64,
    pub n_tokens: usize,
}

/// Pools the generated-token divergences of each word.
pub fn word_aggregate(tensor: &DivergenceTensor, word_ids: &[u32], method: WordPooling) -> Result<Vec<WordScore>> {
    let tokens = answer_token_divergence(tensor);
    if tokens.len() != word_ids.len() {
        return Err(Error::Annotation(format!(
            "example {}: {} word ids for {} generated tokens",
            tensor.example_id,
            word_ids.len(),
            tokens.len()
        )));
    }
    let mut out: Vec<WordScore> = Vec::new();
    for (&id, &v) in word_ids.iter().zip(&tokens) {
        match out.last_mut() {
            Some(w) if w.word_id == id => {
                w.value = match method {
                    WordPooling::Mean => w.value + v,
                    WordPooling::Max => w.value.max(v),
                };
                w.n_tokens += 1;
            }
            Some(w) if w.word_id > id => {
                return Err(Error::Annotation(format!(
                    "example {}: word ids must be nondecreasing",
                    tensor.example_id
                )));
            }
            _ => out.push(WordScore {
                word_id: id,
                value: v,
                n_tokens: 1,
            }),
        }
    }
    if method == WordPooling::Mean {
        for w in &mut out {
            w.value /= w.n_tokens as f64;
        }
    }
    Ok(out)
}

/// Attaches a class to every word score; an unmapped word is an error.
pub fn classify_words(scores: &[WordScore], classes: &BTreeMap<u32, WordClass>) -> Result<Vec<(WordClass, f64)>> {
    scores
        .iter()
        .map(|w| {
            classes
                .get(&w.word_id)
                .map(|&c| (c, w.value))
                .ok_or_else(|| Error::Annotation(format!("word {} has no class", w.word_id)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailComposition {
    pub percentile: f64,
    pub threshold: f64,
    pub total_words: usize,
    pub tail_size: usize,
    pub counts: BTreeMap<WordClass, usize>,
    pub proportions: BTreeMap<WordClass, f64>,
}

impl TailComposition {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,proportion\n");
        for c in WordClass::ALL {
            out.push_str(&format!("{},{},{}\n", c.as_str(), self.counts[&c], self.proportions[&c]));
        }
        out
    }
}

/// Class make-up of the words at or above the `p`-th percentile of all word scores.
pub fn tail_composition(words: &[(WordClass, f64)], p: f64) -> Result<TailComposition> {
    let values: Vec<f64> = words.iter().map(|w| w.1).collect();
    let threshold = example_percentile(&values, p)?;
    let mut counts: BTreeMap<WordClass, usize> = WordClass::ALL.iter().map(|&c| (c, 0)).collect();
    let mut tail_size = 0;
    for &(class, v) in words {
        if v >= threshold {
            *counts.get_mut(&class).expect("all classes present") += 1;
            tail_size += 1;
        }
    }
    let proportions = counts
        .iter()
        .map(|(&c, &n)| (c, n as f64 / tail_size as f64))
        .collect();
    Ok(TailComposition {
        percentile: p,
        threshold,
        total_words: words.len(),
        tail_size,
        counts,
        proportions,
    })
}

/// Mean word divergence per class (classes with no words are omitted).
pub fn class_means(words: &[(WordClass, f64)]) -> BTreeMap<WordClass, f64> {
    let mut acc: BTreeMap<WordClass, (f64, usize)> = BTreeMap::new();
    for &(c, v) in words {
        let e = acc.entry(c).or_default();
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect()
}
