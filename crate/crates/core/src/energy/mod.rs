//! Restricted Boltzmann machines, exact small-model oracles, CD-1 and deep
//! belief networks.

mod dbn;
mod rbm;

pub use dbn::{cd1_gradients, cd1_step, cd1_update, dbn_pretrain, dbn_to_network, train_rbm, Cd1Mode, Dbn, RbmGradients};
pub use rbm::{
    bits, energy, exact_partition, free_energy, log_likelihood, log_partition, reconstruction_cross_entropy,
    sample_h_given_v, sample_v_given_h, Rbm, MAX_ENUMERATION,
};
