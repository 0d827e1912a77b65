//! Interpretability analyses over pooled features, divergence tensors and
//! fitted probes.

mod ablation;
mod heads;
mod tails;
mod words;

pub use ablation::{ablate_columns, ablate_heads, ablate_layer_group, ablation_suite, rank_on_full_data, AblationRow};
pub use heads::{
    cross_model_overlap, delta_divergence_map, head_overlap, layer_group_range, layer_thirds, rank_heads,
    region_distribution, DeltaMap, HeadIndex, HeadSelection, LayerGroup, OverlapRow, RankedHead,
    RegionDistribution, SelectedHead,
};
pub use tails::{
    answer_token_divergence, example_percentile, survival_curve, survival_diff_ci, threshold_grid,
    token_divergence, BootstrapConfig, SurvivalBand, SurvivalCurve,
};
pub use words::{class_means, classify_words, tail_composition, word_aggregate, TailComposition, WordPooling, WordScore};
