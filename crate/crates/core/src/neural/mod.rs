//! Tied-weight denoising autoencoders, greedy stacking, and softmax
//! networks fine-tuned by backpropagation.

mod activation;
mod autoencoder;
mod hyper;
mod network;
mod optim;

pub use activation::{activate, softmax, Activation};
pub use autoencoder::{
    ae_layer_gradients, ae_layer_loss, batch_reconstruction_loss, corrupt, reconstruction_loss, stack_pretrain,
    train_ae_layer, AeGradients, AutoencoderLayer,
};
pub use hyper::*;
pub use network::{
    cross_entropy, dropout_mask, finetune, finetune_network, network_predict, Dense, GradientSet, Network,
};
pub(crate) use optim::{Momentum, Param, Schedule};
