//! Multi-rate training of the neural decoder: cross-entropy loss, reverse-mode
//! gradients, Adam and the greedy layer-wise schedule.

mod adam;
mod config;
mod dataset;
mod loss;
mod tape;
mod trainer;

pub use adam::{adam_step, read_optimizer_state, write_optimizer_state, OptimizerState, DEFAULT_LR};
pub use config::TrainConfig;
pub use dataset::{generate_dataset, DatasetSpec, TrainFrame, TrainingBatch};
pub use loss::{bce_loss, head_loss_and_seed, PROB_CLAMP};
pub use tape::{backward, backward_into, GradientTape};
pub use trainer::{evaluate_loss, frame_gradient, greedy_train, mtl_accumulate, BatchGradient, Progress, TrainOutcome};
