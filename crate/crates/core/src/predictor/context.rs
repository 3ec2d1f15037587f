use crate::scalar::Scalar;
use crate::seqcore::{MsaEmbedding, ProteinRecord, SequenceEmbedding};

/// Re-alignment hook: recomputes the alignment for a (possibly continuous)
/// counterfactual embedding. Must be deterministic.
pub trait ContextProvider<T: Scalar> {
    fn refresh(&self, record: &ProteinRecord, counterfactual: &SequenceEmbedding<T>) -> MsaEmbedding;

    fn describe(&self) -> String;
}

impl<T: Scalar, C: ContextProvider<T> + ?Sized> ContextProvider<T> for &C {
    fn refresh(&self, record: &ProteinRecord, counterfactual: &SequenceEmbedding<T>) -> MsaEmbedding {
        (**self).refresh(record, counterfactual)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Single-row alignment holding the per-column argmax of the counterfactual.
#[derive(Debug, Clone, Copy, Default)]
pub struct SurrogateRefresh;

impl<T: Scalar> ContextProvider<T> for SurrogateRefresh {
    fn refresh(&self, _record: &ProteinRecord, counterfactual: &SequenceEmbedding<T>) -> MsaEmbedding {
        MsaEmbedding::single(counterfactual.argmax(false))
    }

    fn describe(&self) -> String {
        "surrogate-refresh".into()
    }
}

/// Keeps the record's ingested alignment and replaces its query row with the
/// argmax of the counterfactual. Falls back to [`SurrogateRefresh`] when the
/// record carries no alignment.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordMsaRefresh;

impl<T: Scalar> ContextProvider<T> for RecordMsaRefresh {
    fn refresh(&self, record: &ProteinRecord, counterfactual: &SequenceEmbedding<T>) -> MsaEmbedding {
        let query = counterfactual.argmax(false);
        match record.msa() {
            Some(msa) if msa.len() == query.len() && !msa.is_empty() => {
                let mut rows = msa.rows().to_vec();
                rows[0] = query;
                MsaEmbedding::from_rows(msa.len(), rows).expect("rows keep the alignment length")
            }
            _ => MsaEmbedding::single(query),
        }
    }

    fn describe(&self) -> String {
        "record-msa-refresh".into()
    }
}
