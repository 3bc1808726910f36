//! Loss kernels, optimizer and the two-phase teacher → student protocol.

mod adam;
mod loss;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{
    angular_frequency, distill_loss, distill_loss_grad, finite_diff1, finite_diff2, spectral_penalty,
    spectral_penalty_grad, teacher_loss, teacher_loss_grad, total_variation, LossBreakdown, LossWeights,
};
pub use train::{
    student_loss_and_grad, teacher_loss_and_grad, train, HistoryRow, LrDecay, Phase, TrainConfig, TrainOutcome, TrainingSample,
};
