//! Structural statistics, histogram similarity scoring, correlation with
//! significance, and the two downstream experiments (solver-tuning
//! correlation and objective-value prediction).

mod correlation;
mod predictor;
mod similarity;
mod stats;

pub use correlation::{corpus_effort, pearson, tuning_correlation, CorrelationReport};
pub use predictor::{
    predict_objective, rel_mse, train_objective_predictor, ObjectivePredictor, PredictorConfig, RelMse,
};
pub use similarity::{histogram, js_distance, js_similarity, js_similarity_bins, SimilarityReport, SimilarityResult, BINS};
pub use stats::{instance_stats, mean_profile, StatProfile, METRICS};
