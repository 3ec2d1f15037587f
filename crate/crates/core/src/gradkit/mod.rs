//! Minimal reverse-mode automatic differentiation over dense tensors, plus Adam.

mod adam;
mod tape;

use thiserror::Error;

use crate::tensor::ShapeMismatch;

pub use adam::{Adam, AdamState};
pub use tape::{Gradients, Tape, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradError {
    #[error("{op}: {source}")]
    Shape {
        op: &'static str,
        #[source]
        source: ShapeMismatch,
    },
    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("backward requires a scalar loss, got shape {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("non-finite gradient flowing into {op}")]
    NonFiniteGradient { op: &'static str },
}

impl std::error::Error for ShapeMismatch {}
