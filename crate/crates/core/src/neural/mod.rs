pub mod activation;
pub mod adam;
pub mod layer;
pub mod network;
pub mod train;

pub use activation::{leaky_relu, leaky_relu_deriv, DEFAULT_ALPHA};
pub use adam::AdamState;
pub use layer::{DenseLayer, Layer, LayerCache, ResidualLayer};
pub use network::{ForwardCache, Network, ParamSet};
pub use train::{split_indices, train, EpochRecord, Objective, TrainConfig, TrainLog};
