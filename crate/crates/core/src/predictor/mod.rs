//! The structure-predictor abstraction, a deterministic differentiable toy
//! surrogate, context (MSA) refresh policies and an external-process adapter.

mod context;
mod external;
mod surrogate;

use thiserror::Error;

use crate::foldmetrics::{FoldError, Structure};
use crate::gradkit::{GradError, Var};
use crate::scalar::Scalar;
use crate::seqcore::{MsaEmbedding, SeqError, SequenceEmbedding};

pub use context::{ContextProvider, RecordMsaRefresh, SurrogateRefresh};
pub use external::{ExternalConfig, ExternalPredictor, PredictRequest};
pub use surrogate::{SurrogateConfig, ToySurrogate};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("predictor returned {found} residues, expected {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("external predictor needs a one-hot embedding")]
    NotOneHot,
    #[error("failed to launch external predictor: {0}")]
    Spawn(String),
    #[error("external predictor exited with code {code:?}: {stderr}")]
    CommandFailed { code: Option<i32>, stderr: String },
    #[error("external predictor timed out after {secs} s")]
    Timeout { secs: f64 },
    #[error("malformed predictor response: {0}")]
    MalformedResponse(String),
    #[error("i/o error in predictor workdir: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Grad(#[from] GradError),
}

/// `S = f(P, M(P))`: maps a residue embedding and an alignment to coordinates.
/// Implementations must be deterministic.
pub trait StructurePredictor<T: Scalar> {
    fn predict(
        &self,
        seq: &SequenceEmbedding<T>,
        msa: &MsaEmbedding,
    ) -> Result<Structure<T>, PredictError>;

    /// Short self-description recorded in reports.
    fn describe(&self) -> String;
}

/// A predictor whose forward pass can be recorded on a tape. `seq` is a
/// `21 x l` variable; the result is a `3 x l` coordinate variable.
pub trait DifferentiablePredictor<T: Scalar>: StructurePredictor<T> {
    fn predict_var<'t>(
        &self,
        seq: Var<'t, T>,
        msa: &MsaEmbedding,
    ) -> Result<Var<'t, T>, PredictError>;
}

impl<T: Scalar, P: StructurePredictor<T> + ?Sized> StructurePredictor<T> for &P {
    fn predict(
        &self,
        seq: &SequenceEmbedding<T>,
        msa: &MsaEmbedding,
    ) -> Result<Structure<T>, PredictError> {
        (**self).predict(seq, msa)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<T: Scalar, P: DifferentiablePredictor<T> + ?Sized> DifferentiablePredictor<T> for &P {
    fn predict_var<'t>(
        &self,
        seq: Var<'t, T>,
        msa: &MsaEmbedding,
    ) -> Result<Var<'t, T>, PredictError> {
        (**self).predict_var(seq, msa)
    }
}
