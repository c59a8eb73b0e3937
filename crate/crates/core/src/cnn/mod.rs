//! A small, dependency-free 1D CNN: tanh convolutions, max/global-average
//! pooling and a softmax head, trained with Adam at 64-bit precision.

mod checkpoint;
mod eval;
mod model;
mod spec;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use eval::{evaluate, predict_all, EvaluationReport};
pub use model::{build_model, gradient_of_loss, FeatureMap, Forward, LossGradient, Model};
pub use spec::{
    ArchitectureConfig, ArchitectureKind, ArchitectureSpec, LayerPlan, LayerSpec, Padding, Shape,
};
pub use train::{
    cross_validate, fine_tune, train, Adam, AdamParams, CrossValidationReport, TrainedModel,
    TrainingConfig,
};

