//! Losses and gradient-free parameter fitting.

pub mod bayes_opt;
pub mod fit;
pub mod gp;
pub mod lhs;
pub mod loss;

pub use bayes_opt::{bayes_opt, BoResult, Evaluation};
pub use fit::{
    evaluate_loss, fit, predict_items, shrink_bounds, FitConfig, FitResult, FitSchedule, TraceEntry,
    TrainingItem,
};
pub use lhs::latin_hypercube;
pub use loss::{loss, loss_l1, loss_l2, variance_regularizer, LossKind};
