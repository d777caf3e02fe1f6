//! Joint objective, gradients, Adam, and the epoch loop.

mod adam;
mod fit;
mod gradcheck;
mod loss;

pub use adam::{adam_step, AdamState};
pub use fit::{fit, EpochLog, FitResult, NoObserver, TrainObserver};
pub use gradcheck::{check_gradients, GradProbe};
pub use loss::{
    base_loss, bce, compute_gradients, contrastive_gradients, contrastive_loss, total_loss, ContrastiveBatch,
    GradientSet, LossBreakdown, PREDICTION_EPS,
};
