//! Feed-forward networks trained by backpropagation, and the two learned
//! components built on them: the parameter predictor and the misalignment
//! estimator.

mod estimator;
mod io;
mod mlp;
mod predictor;
mod train;

pub use estimator::{CalibEstimator, EstimatorConfig, MisalignmentEstimate, ESTIMATOR_MAGIC};
pub use io::{load_model, model_from_text, model_to_text, save_model, FORMAT_VERSION, MLP_MAGIC};
pub use mlp::{Activation, Gradients, Layer, MlpModel};
pub use predictor::{ParamPredictor, PredictorConfig, PREDICTOR_MAGIC};
pub use train::{train, TrainConfig, TrainReport};
