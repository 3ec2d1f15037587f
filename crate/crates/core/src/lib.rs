//! Counterfactual explanations for sequence-to-structure predictors.
//!
//! The numeric core (tape, structures, predictor, optimizer) is generic over a
//! [`Scalar`] (`f32` or `f64`); the aliases below fix it to `f64`, which is what
//! the command-line tool uses.

pub mod cfengine;
pub mod evalkit;
pub mod exchange;
pub mod foldmetrics;
pub mod gradkit;
pub mod predictor;
pub mod scalar;
pub mod seqcore;
pub mod tensor;

pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor64 = tensor::Tensor<f64>;
pub type Tape64 = gradkit::Tape<f64>;
pub type SequenceEmbedding64 = seqcore::SequenceEmbedding<f64>;
pub type Structure64 = foldmetrics::Structure<f64>;
pub type Superposition64 = foldmetrics::Superposition<f64>;
pub type Surrogate64 = predictor::ToySurrogate<f64>;
pub type PerturbationState64 = cfengine::PerturbationState<f64>;

pub type Tensor32 = tensor::Tensor<f32>;
pub type Structure32 = foldmetrics::Structure<f32>;
pub type Surrogate32 = predictor::ToySurrogate<f32>;
