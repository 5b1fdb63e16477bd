//! Topological features of transformer attention maps.
//!
//! Each attention head of a sample is symmetrized into a distance matrix
//! ([`attention::symmetrize`]), its flag-complex filtration is reduced to
//! persistence diagrams in dimensions 0 and 1 ([`homology`]), and each
//! diagram is summarized by five statistics ([`features`]). The resulting
//! vectors feed a logistic-regression classifier ([`classifier`]).
//!
//! Attention tensors travel in the ATTN binary container
//! ([`attention::read_attn_file`], [`attention::write_attn_file`]).

pub mod attention;
pub mod classifier;
pub mod features;
pub mod homology;
pub mod numfmt;
pub mod synth;

pub use attention::{AttentionTensor, Sample};
pub use classifier::{evaluate, Dataset, EvalReport, LinearModel, TrainParams};
pub use features::{
    featurize_sample, featurize_sample_with, FeatureConfig, FeatureVector, HeadSelection,
};
pub use homology::{compute_diagrams, DistanceMatrix, PersistenceDiagram, PersistencePair};
