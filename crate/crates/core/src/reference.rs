//! Published reference numbers for Llama-3.2-3B-Instruct on TriviaQA, used as
//! comparison rows in reports. They come from GPU-scale runs and are not
//! reproduced by the synthetic pipeline.

/// Cross-validated AUROC (mean, std).
pub const CV_AUROC: (f64, f64) = (0.835, 0.004);

/// AUROC without ablation in the ablation study.
pub const ABLATION_BASELINE_AUROC: f64 = 0.858;

pub const ABLATIONS: [(&str, f64); 8] = [
    ("remove top-5 heads", 0.857),
    ("remove top-10 heads", 0.853),
    ("remove top-20 heads", 0.862),
    ("remove top-50 heads", 0.872),
    ("remove early layers", 0.849),
    ("remove middle layers", 0.844),
    ("remove late layers", 0.862),
    ("max pooling", 0.795),
];

pub const SCOPE_AUROC: [(&str, f64); 3] = [("prompt", 0.7674), ("answer", 0.8707), ("full", 0.8215)];

pub const SANITY_AUROC: [(&str, f64); 6] = [
    ("generation length", 0.36),
    ("prompt length", 0.44),
    ("raw output length", 0.37),
    ("ends with punctuation", 0.54),
    ("number of digits", 0.48),
    ("permuted labels", 0.50),
];

/// Early / middle / late percentages of probe-selected heads, pooled over datasets.
pub const REGION_PERCENT: [(&str, [f64; 3]); 3] = [
    ("Llama-3.2-3B", [15.5, 53.5, 31.0]),
    ("Qwen3-4B", [28.1, 35.9, 35.9]),
    ("Mistral-7B", [33.8, 46.3, 20.0]),
];

/// Words in the 99th-percentile tail: total, entity, other, stopword, number.
/// The class counts sum to 1434, not the stated total.
pub const TAIL_WORDS: (usize, [(&str, usize); 4]) =
    (1445, [("entity", 961), ("other", 435), ("stopword", 33), ("number", 5)]);
