//! 16×3 spiking classifier for Fisher's Iris.
//!
//! Each of the four features is population-coded by Gaussian receptive
//! fields into input rates. Output neuron `i` sees a constant gate voltage
//! `v_bias + v_scale·Σ_j w_ij·rate_j/r_max` for the length of a sample and
//! fires through the capacitor neuron of [`crate::neuron`]. The class is the
//! output with the most spikes. Weights learn by a rate delta rule.

mod data;
mod encode;
mod network;
mod train;

pub use data::{
    IrisDataset, Sample, CLASS_NAMES, DATA_DIR_ENV, EMBEDDED_IRIS_CSV, IRIS_CSV_HEADER, N_CLASSES,
    N_FEATURES,
};
pub use encode::EncoderConfig;
pub use network::{forward, predict, Drive, Prediction, SynapseMatrix, WEIGHTS_SCHEMA};
pub use train::{
    default_output_neuron, evaluate, prepare, sample_counts, stratified_split, train, train_epoch,
    EpochAccuracy, TrainConfig, TrainReport, ACCURACY_CSV_HEADER, REFERENCE_ACCURACY,
    TRAIN_CONFIG_SCHEMA,
};

use thiserror::Error;

use crate::neuron::NeuronError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SnnError {
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("invalid snn config: {0}")]
    InvalidConfig(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("empty partition")]
    EmptyPartition,
    #[error(transparent)]
    Neuron(#[from] NeuronError),
}
