//! Datasets, the cosine-distance baseline and evaluation metrics.

mod dataset;
mod metrics;
mod synthetic;

pub use dataset::{
    featurize_records, load_jsonl, parse_jsonl, read_jsonl, split_records, write_jsonl, PairRecord,
};
pub use metrics::{
    baseline_report, cosine_distance, distance_histogram, evaluate_baseline, evaluate_cnn,
    fit_threshold, pair_distance, record_distances, threshold_accuracy, EvalReport, HistogramSpec,
    Threshold,
};
pub use synthetic::{
    default_dissimilar_count, edit_distance, generate_synthetic, normalized_edit_distance,
    DISSIMILAR_FLOOR, DISSIMILAR_RATIO,
};
