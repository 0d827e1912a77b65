//! Synthetic dumps with a controllable correctness signal.
//!
//! Each example's label is Bernoulli(`base_rate`). Every attention row of the
//! example is a symmetric Dirichlet draw whose concentration depends on the
//! label: a small concentration gives peaked rows (high KL to uniform), a large
//! one gives near-uniform rows. Surface metadata is drawn independently of the
//! label.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{DumpExample, DumpMetadata, WordClass, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::rng::{substream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_examples: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub prompt_len: usize,
    pub gen_len: usize,
    /// Dirichlet concentration for rows of correct (label 1) examples.
    pub alpha_correct: f64,
    /// Dirichlet concentration for rows of incorrect (label 0) examples.
    pub alpha_incorrect: f64,
    pub base_rate: f64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub with_prefill: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_examples: 400,
            num_layers: 4,
            num_heads: 4,
            prompt_len: 8,
            gen_len: 8,
            alpha_correct: 0.3,
            alpha_incorrect: 3.0,
            base_rate: 0.5,
            seed: 42,
            with_prefill: true,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.n_examples == 0 {
            return bad("n_examples must be >= 1".into());
        }
        if self.num_layers == 0 || self.num_heads == 0 || self.prompt_len == 0 || self.gen_len == 0 {
            return bad("num_layers, num_heads, prompt_len and gen_len must be >= 1".into());
        }
        for (name, a) in [("alpha_correct", self.alpha_correct), ("alpha_incorrect", self.alpha_incorrect)] {
            if !(a.is_finite() && a > 0.0) {
                return bad(format!("{name} must be a positive finite number, got {a}"));
            }
        }
        if !(self.base_rate > 0.0 && self.base_rate < 1.0) {
            return bad(format!("base_rate must lie in (0, 1), got {}", self.base_rate));
        }
        Ok(())
    }
}

/// Symmetric Dirichlet sampler via normalized Gamma(alpha, 1) draws.
struct SymmetricDirichlet {
    gamma: Gamma<f64>,
}

impl SymmetricDirichlet {
    fn new(alpha: f64) -> Result<Self> {
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Validation(format!("gamma({alpha}): {e}")))?;
        Ok(Self { gamma })
    }

    fn sample_into(&self, rng: &mut StreamRng, len: usize, out: &mut Vec<f32>) {
        let mut draws = vec![0.0f64; len];
        loop {
            for d in draws.iter_mut() {
                *d = self.gamma.sample(rng);
            }
            let total: f64 = draws.iter().sum();
            // All-underflow is possible for tiny alpha; redraw.
            if total > 0.0 && total.is_finite() {
                out.extend(draws.iter().map(|d| (d / total) as f32));
                return;
            }
        }
    }
}

const CLASS_WEIGHTS: [(WordClass, f64); 5] = [
    (WordClass::Entity, 0.2),
    (WordClass::Number, 0.05),
    (WordClass::Stopword, 0.3),
    (WordClass::Punctuation, 0.1),
    (WordClass::Other, 0.35),
];

fn draw_class(rng: &mut StreamRng) -> WordClass {
    let mut u: f64 = rng.random();
    for (class, w) in CLASS_WEIGHTS {
        if u < w {
            return class;
        }
        u -= w;
    }
    WordClass::Other
}

fn generate_example(spec: &SyntheticSpec, index: usize, correct: &SymmetricDirichlet, incorrect: &SymmetricDirichlet) -> DumpExample {
    let mut rng = substream(spec.seed, index as u64);
    let label = u8::from(rng.random_bool(spec.base_rate));

    let (p, g) = (spec.prompt_len, spec.gen_len);
    let prompt_char_len = p * 4 + rng.random_range(0..40);
    let raw_output_char_len = g * 4 + rng.random_range(0..20);
    let ends_with_punctuation = rng.random_bool(0.5);
    let digit_count = rng.random_range(0..4);

    let mut word_ids = Vec::with_capacity(g);
    let mut word = 0u32;
    for t in 0..g {
        if t > 0 && rng.random_bool(0.6) {
            word += 1;
        }
        word_ids.push(word);
    }
    let word_classes: BTreeMap<u32, WordClass> = (0..=word).map(|w| (w, draw_class(&mut rng))).collect();

    let dirichlet = if label == 1 { correct } else { incorrect };
    let heads = spec.num_layers * spec.num_heads;
    let mut prefill = Vec::new();
    if spec.with_prefill {
        for i in 0..p {
            for _ in 0..heads {
                dirichlet.sample_into(&mut rng, i + 1, &mut prefill);
            }
        }
    }
    let mut generated = Vec::new();
    for t in 0..g {
        for _ in 0..heads {
            dirichlet.sample_into(&mut rng, p + t, &mut generated);
        }
    }

    DumpExample {
        meta: DumpMetadata {
            schema_version: SCHEMA_VERSION,
            model_name: "synthetic".into(),
            dataset_name: "synthetic".into(),
            example_id: format!("syn-{index:06}"),
            num_layers: spec.num_layers,
            num_heads: spec.num_heads,
            prompt_len: p,
            gen_len: g,
            has_prefill: spec.with_prefill,
            label: Some(label),
            prompt_char_len,
            raw_output_char_len,
            ends_with_punctuation,
            digit_count,
            word_ids: Some(word_ids),
            word_classes: Some(word_classes),
        },
        prefill,
        generated,
    }
}

/// Generates `spec.n_examples` examples; a pure function of `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<DumpExample>> {
    spec.validate()?;
    let correct = SymmetricDirichlet::new(spec.alpha_correct)?;
    let incorrect = SymmetricDirichlet::new(spec.alpha_incorrect)?;
    Ok((0..spec.n_examples)
        .map(|i| generate_example(spec, i, &correct, &incorrect))
        .collect())
}
