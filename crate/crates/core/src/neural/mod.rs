//! Differentiable layers (peephole LSTM, dense, 1-D convolution, max pooling,
//! ConvLSTM) with backpropagation through time, Adam, MSE training with early
//! stopping and a finite-difference gradient checker.

mod adam;
mod convlstm;
mod gradcheck;
mod lstm;
mod network;
mod train;

pub use adam::{adam_step, AdamState};
pub use convlstm::{
    convlstm_backward_flat, convlstm_forward_flat, convlstm_param_count, ConvLstmCache, ConvLstmWeights,
};
pub use gradcheck::{gradient_check, FD_STEP};
pub use lstm::{
    lstm_backward_flat, lstm_forward, lstm_forward_flat, lstm_param_count, CellOutput, LstmCache, LstmParams,
    LstmStates, LstmWeights,
};
pub use network::{LayerSpec, Network, NetworkSpec};
pub use train::{dataset_mse, train, TrainConfig, TrainedNetwork, TrainingMeta};
