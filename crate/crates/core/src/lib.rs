//! Transductive zero-shot learning over precomputed feature embeddings.
//!
//! A two-layer tanh network projects class semantic vectors into feature
//! space. It is first fit to labeled seen-class features, then refined with
//! a pseudo-label triplet loss on unlabeled test features. Classification
//! picks the class whose projection is nearest to a feature.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod losses;
pub mod numerics;
pub mod training;
pub mod triplet;

pub use dataset::{
    generate_synthetic, load_dataset, save_dataset, ClassId, Dataset, EmbeddingRecord,
    SemanticTable, Split, SynthConfig,
};
pub use error::{Error, ErrorKind, Result};
pub use evaluation::{evaluate, harmonic_mean, Averaging, EvalReport, HubnessReport, QfslReport};
pub use losses::{LossBreakdown, UnsupervisedVariant};
pub use numerics::{AdamState, DenseMatrix, ProjectionNet};
pub use training::{Checkpoint, Stage, TrainConfig};
pub use triplet::{ClassProjections, Mode, TripletAssignment};
