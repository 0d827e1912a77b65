//! KL divergence of attention rows against the uniform reference, and pooling
//! of per-row divergences into one scalar feature per attention head.
//!
//! All quantities are in nats. Rows may be stored as `f32` or `f64`; every
//! accumulation happens in `f64`.

use serde::{Deserialize, Serialize};

use crate::dump::DumpExample;
use crate::error::{Error, Result, RowLocation};

/// Maximum allowed deviation of a row's mass from 1.
pub const SUM_TOLERANCE: f64 = 1e-3;

/// Default floor for logarithm arguments.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Rows longer than this are summed pairwise.
const PAIRWISE_THRESHOLD: usize = 4096;
const PAIRWISE_BLOCK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceConfig {
    /// Clamp floor applied to every logarithm argument.
    pub epsilon: f64,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl DivergenceConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = Self { epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-6) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1e-6], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Whether an attention row comes from prompt prefill or from a decoding step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Prompt,
    Generated,
}

impl RowKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowKind::Prompt => "prompt",
            RowKind::Generated => "generated",
        }
    }
}

/// Which rows of an example are pooled into the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Prefill rows only.
    Prompt,
    /// Generated-token rows only.
    Answer,
    /// Every row.
    Full,
}

impl Scope {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scope::Prompt => "prompt",
            Scope::Answer => "answer",
            Scope::Full => "full",
        }
    }

    fn selects(&self, kind: RowKind) -> bool {
        match self {
            Scope::Prompt => kind == RowKind::Prompt,
            Scope::Answer => kind == RowKind::Generated,
            Scope::Full => true,
        }
    }
}

impl std::str::FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prompt" => Ok(Scope::Prompt),
            "answer" => Ok(Scope::Answer),
            "full" => Ok(Scope::Full),
            other => Err(Error::Config(format!("unknown scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Mean,
    Max,
}

impl Pooling {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        }
    }
}

impl std::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            other => Err(Error::Config(format!("unknown pooling `{other}`"))),
        }
    }
}

/// A validated attention distribution over `T >= 1` context positions.
#[derive(Debug, Clone, Copy)]
pub struct AttentionRow<'a, F = f64> {
    probs: &'a [F],
}

impl<'a, F> AttentionRow<'a, F>
where
    F: Copy + Into<f64>,
{
    /// Checks non-negativity and that the mass sums to 1 within [`SUM_TOLERANCE`].
    pub fn new(probs: &'a [F]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyRow);
        }
        check_entries(probs)?;
        let total = sum_by(probs.len(), |i| probs[i].into());
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Validation(format!(
                "row mass {total} deviates from 1 by more than {SUM_TOLERANCE}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &'a [F] {
        self.probs
    }

    pub fn kl_to_uniform(&self, cfg: &DivergenceConfig) -> f64 {
        kl_to_uniform_unchecked(self.probs, cfg.epsilon)
    }
}

fn check_entries<F: Copy + Into<f64>>(probs: &[F]) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        let v: f64 = p.into();
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Validation(format!(
                "entry {i} is {v}; probabilities must be finite and non-negative"
            )));
        }
    }
    Ok(())
}

/// Sums `term(0..n)`; pairwise for long rows.
fn sum_by(n: usize, term: impl Fn(usize) -> f64) -> f64 {
    if n <= PAIRWISE_THRESHOLD {
        (0..n).map(&term).sum()
    } else {
        pairwise(0, n, &term)
    }
}

fn pairwise(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
    if hi - lo <= PAIRWISE_BLOCK {
        return (lo..hi).map(term).sum();
    }
    let mid = lo + (hi - lo) / 2;
    pairwise(lo, mid, term) + pairwise(mid, hi, term)
}

#[inline]
fn xlogx(p: f64, epsilon: f64) -> f64 {
    if p > 0.0 {
        p * p.max(epsilon).ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats with the `0 ln 0 = 0` convention.
pub fn entropy<F: Copy + Into<f64>>(p: &[F], cfg: &DivergenceConfig) -> f64 {
    -sum_by(p.len(), |i| xlogx(p[i].into(), cfg.epsilon))
}

/// `sum_x p(x) ln(p(x) / q(x))`, with `q` (and `p` inside the log) clamped
/// below by epsilon. Zero-mass entries of `p` contribute nothing.
pub fn kl_divergence<F: Copy + Into<f64>>(p: &[F], q: &[F], cfg: &DivergenceConfig) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "p has {} entries but q has {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::EmptyRow);
    }
    check_entries(p)?;
    check_entries(q)?;
    let eps = cfg.epsilon;
    let kl = sum_by(p.len(), |i| {
        let pi: f64 = p[i].into();
        if pi > 0.0 {
            let qi: f64 = q[i].into();
            pi * (pi.max(eps).ln() - qi.max(eps).ln())
        } else {
            0.0
        }
    });
    Ok(kl.max(0.0))
}

/// `ln T - H(p)`: divergence of `p` from the uniform distribution over its `T` positions.
pub fn kl_to_uniform<F: Copy + Into<f64>>(p: &[F], cfg: &DivergenceConfig) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::EmptyRow);
    }
    check_entries(p)?;
    Ok(kl_to_uniform_unchecked(p, cfg.epsilon))
}

fn kl_to_uniform_unchecked<F: Copy + Into<f64>>(p: &[F], epsilon: f64) -> f64 {
    let ln_t = (p.len() as f64).ln();
    let neg_entropy = sum_by(p.len(), |i| xlogx(p[i].into(), epsilon));
    // Storage rounding can push the raw value a hair outside [0, ln T].
    (ln_t + neg_entropy).clamp(0.0, ln_t)
}

/// Per-example KL values laid out as `[row][layer][head]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTensor {
    pub example_id: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub row_kinds: Vec<RowKind>,
    /// Context length `T_r` of each row.
    pub context_lens: Vec<usize>,
    pub values: Vec<f64>,
}

impl DivergenceTensor {
    pub fn num_rows(&self) -> usize {
        self.row_kinds.len()
    }

    pub fn heads_per_row(&self) -> usize {
        self.num_layers * self.num_heads
    }

    pub fn get(&self, row: usize, layer: usize, head: usize) -> f64 {
        self.values[(row * self.num_layers + layer) * self.num_heads + head]
    }

    /// The `L*H` slice of row `row`, layer-major.
    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.heads_per_row();
        &self.values[row * w..(row + 1) * w]
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.row_kinds.iter().filter(|&&k| k == kind).count()
    }

    /// Indices of generated rows, in decoding order.
    pub fn generated_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.row_kinds
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == RowKind::Generated)
            .map(|(r, _)| r)
    }
}

/// Computes one KL-to-uniform value per (row, layer, head) of a dump example.
///
/// Prefill rows come first (prompt position `i` attends over `i` positions),
/// followed by generated rows (step `t` attends over `P + t` positions).
pub fn compute_divergence_tensor(example: &DumpExample, cfg: &DivergenceConfig) -> Result<DivergenceTensor> {
    cfg.validate()?;
    example.check_shape()?;
    let meta = &example.meta;
    let (l_count, h_count) = (meta.num_layers, meta.num_heads);

    let mut acc = TensorBuilder {
        cfg,
        num_layers: l_count,
        num_heads: h_count,
        row_kinds: Vec::new(),
        context_lens: Vec::new(),
        values: Vec::new(),
    };
    if meta.has_prefill {
        for i in 0..meta.prompt_len {
            acc.push_row(RowKind::Prompt, i, i + 1, |l, h| example.prefill_row(i, l, h))?;
        }
    }
    for t in 0..meta.gen_len {
        acc.push_row(RowKind::Generated, t, meta.prompt_len + t, |l, h| example.generated_row(t, l, h))?;
    }
    let TensorBuilder {
        row_kinds,
        context_lens,
        values,
        ..
    } = acc;

    Ok(DivergenceTensor {
        example_id: meta.example_id.clone(),
        num_layers: l_count,
        num_heads: h_count,
        row_kinds,
        context_lens,
        values,
    })
}

struct TensorBuilder<'c> {
    cfg: &'c DivergenceConfig,
    num_layers: usize,
    num_heads: usize,
    row_kinds: Vec<RowKind>,
    context_lens: Vec<usize>,
    values: Vec<f64>,
}

impl TensorBuilder<'_> {
    fn push_row<'a>(&mut self, kind: RowKind, index: usize, len: usize, rows: impl Fn(usize, usize) -> &'a [f32]) -> Result<()> {
        self.row_kinds.push(kind);
        self.context_lens.push(len);
        for layer in 0..self.num_layers {
            for head in 0..self.num_heads {
                let row = AttentionRow::new(rows(layer, head)).map_err(|e| Error::InvalidRow {
                    location: RowLocation {
                        kind,
                        row: index,
                        layer,
                        head,
                    },
                    reason: e.to_string(),
                })?;
                self.values.push(row.kl_to_uniform(self.cfg));
            }
        }
        Ok(())
    }
}

/// Pooled per-head features of one example, layer-major (`index = l * H + h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<f64>,
    pub scope: Scope,
    pub pooling: Pooling,
}

/// Pools the rows selected by `scope` into one value per head.
pub fn pool_features(tensor: &DivergenceTensor, scope: Scope, pooling: Pooling) -> Result<FeatureVector> {
    let width = tensor.heads_per_row();
    let mut acc = vec![
        match pooling {
            Pooling::Mean => 0.0,
            Pooling::Max => f64::NEG_INFINITY,
        };
        width
    ];
    let mut n = 0usize;
    for (r, &kind) in tensor.row_kinds.iter().enumerate() {
        if !scope.selects(kind) {
            continue;
        }
        n += 1;
        for (a, &v) in acc.iter_mut().zip(tensor.row(r)) {
            match pooling {
                Pooling::Mean => *a += v,
                Pooling::Max => *a = a.max(v),
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyScope(scope.as_str()));
    }
    if pooling == Pooling::Mean {
        let n = n as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    Ok(FeatureVector {
        entries: acc,
        scope,
        pooling,
    })
}
