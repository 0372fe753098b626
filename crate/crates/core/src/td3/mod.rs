//! TD3 from scratch: dense networks with manual reverse-mode gradients,
//! Adam, a ring replay buffer, the twin-critic learner and the training loop.

mod adam;
pub mod checkpoint;
mod learner;
mod linalg;
mod mlp;
mod replay;
mod train;

pub use adam::Adam;
pub use learner::{td3_targets, Td3Hyperparams, Td3Learner, UpdateDiagnostics};
pub use linalg::Scalar;
pub use mlp::{Activation, Gradients, Layer, Mlp, Tape};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{
    evaluate_policy, write_curve_csv, CheckpointSink, CurveRow, DirectorySink, EvalSummary, NullSink, TrainConfig,
    Trainer, CURVE_HEADER,
};

/// Hidden widths of the actor and critics.
pub const HIDDEN_LAYERS: [usize; 4] = [512, 512, 256, 128];
