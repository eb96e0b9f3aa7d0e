//! A small convolutional classifier for pair tensors, with hand-written
//! backpropagation, Adam, dropout and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod layers;
mod model;
mod train;

pub use adam::{adam_step, adam_update, AdamHyper, AdamState};
pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, Checkpoint, MAGIC};
pub use config::CnnConfig;
pub use model::{
    argmax, backward, cross_entropy, forward, loss_and_grads, param_lens, predict_probs, CnnParams,
    ForwardCache, ForwardOutput, Mode, PARAM_NAMES,
};
pub use train::{
    accuracy, predict, stack_inputs, stratified_split, train, train_with_progress, EpochStats,
    StepResult, TrainReport, Trainer,
};

#[cfg(test)]
mod tests;
