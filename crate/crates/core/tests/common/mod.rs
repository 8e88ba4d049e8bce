#![allow(dead_code)]

pub mod gradients;
pub mod invariants;
pub mod naive;
pub mod trees;

use uavids_core::ingest::{synthesize_dataset, SynthSpec};
use uavids_core::pipeline::{split_and_prepare, Prepared, RawDataset};

/// Class proportions shaped like the ISOT traffic mix: one dominant class
/// and a long tail.
pub const ISOT_LIKE_WEIGHTS: [f64; 10] = [0.40, 0.20, 0.08, 0.07, 0.06, 0.05, 0.05, 0.04, 0.03, 0.02];

pub fn dataset(spec: &SynthSpec, seed: u64) -> RawDataset {
    let (t, m) = synthesize_dataset(spec, seed).unwrap();
    RawDataset::new(t, m).unwrap()
}

pub fn prepared(spec: &SynthSpec, seed: u64) -> Prepared {
    split_and_prepare(&dataset(spec, seed), 0.8, seed, false).unwrap()
}

pub fn ten_class_spec(n_rows: usize) -> SynthSpec {
    SynthSpec {
        n_rows,
        n_numeric: 20,
        n_noise: 0,
        n_categorical: 2,
        n_classes: 10,
        class_weights: ISOT_LIKE_WEIGHTS.to_vec(),
        separability: 1.0,
        missing_fraction: 0.01,
        class_names: None,
    }
}

pub fn binary_spec(n_rows: usize, separability: f64) -> SynthSpec {
    SynthSpec {
        n_rows,
        n_numeric: 4,
        n_noise: 2,
        n_categorical: 1,
        n_classes: 2,
        class_weights: vec![0.7, 0.3],
        separability,
        missing_fraction: 0.0,
        class_names: None,
    }
}
