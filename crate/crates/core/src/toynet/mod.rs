//! Desk-scale Bayesian regressor.
//!
//! A small fully connected network with two output heads (mean and
//! `ln sigma`), trained on the Laplace NLL by manual backpropagation. The
//! same trained weights give MC-dropout samples when dropout layers are
//! flagged; independently seeded dropout-free copies form a deep ensemble.

mod config;
mod network;
mod sampling;
mod train;

pub use config::{DropoutPlan, ToyNetConfig};
pub use network::{
    backward, forward, forward_cached, init_params, DropoutMasks, ForwardCache, Layer,
    ToyNetParams, INIT_VARIANCE,
};
pub use sampling::{ensemble_sample, mc_dropout_sample, train_ensemble, EnsembleModel};
pub use train::{batch_loss_and_grad, train, Dataset, TrainMetadata, TrainSettings, TrainedModel};
