//! Fixtures shared by the benchmarks.

use tzsl_core::{generate_synthetic, Dataset, SynthConfig, TrainConfig};

/// The default synthetic dataset (20 seen, 8 unseen classes).
pub fn reference_dataset() -> Dataset {
    generate_synthetic(&SynthConfig::default()).expect("default synthetic config is valid")
}

/// Default hyperparameters with one epoch per stage.
pub fn one_epoch_config() -> TrainConfig {
    TrainConfig {
        epochs_inductive: 1,
        epochs_transductive: 1,
        seed: 1,
        ..TrainConfig::default()
    }
}
