//! Example-based explanations by corpus decomposition in latent space.
//!
//! A trained model is split as f = l ∘ g into a latent map and a linear
//! head. A test latent h = g(x) is approximated by the best convex
//! mixture of corpus latents; the mixture weights say which corpus
//! examples explain the prediction, the residual says how far the test
//! point sits from the corpus, and integrated-Jacobian projections say
//! which input features carry each corpus example's contribution.

pub mod attribution;
pub mod baselines;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod parallel;
pub mod rng;
pub mod simplex;

pub use attribution::{
    attribute, completeness_check, integrated_gradients, integrated_jacobian,
    projected_jacobians, AttributionResult, Baseline, BaselineKind, DEFAULT_N_BINS,
};
pub use baselines::{knn_distance, knn_uniform, representer_output, BaselineWeights, KnnMethod};
pub use error::{Error, Result};
pub use evaluation::{
    corruption_delta, detection_curve, gen_ar2, gen_tabular_shifted, load_idx, load_idx_labels,
    r2_score, read_dataset_csv, write_dataset_csv, Ar2Config, DetectionCurve, R2Pair,
};
pub use model::{
    checkpoint_from_json, checkpoint_to_json, load_checkpoint, save_checkpoint, train,
    train_logged, Activation, Checkpoint, EpochStats, Layer, LossKind, SplitModel, TrainConfig,
    CHECKPOINT_FORMAT_VERSION,
};
pub use numerics::{l2_norm, softmax, Matrix};
pub use rng::CounterRng;
pub use simplex::{
    affine_independence, corpus_residual, fit_decomposition, fit_decomposition_batch,
    fit_decomposition_batch_seq, output_error_bound, reconstruct_latent, Corpus, Decomposition,
    DecompositionConfig,
};
