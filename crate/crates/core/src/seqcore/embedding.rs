use serde::{Deserialize, Serialize};

use crate::scalar::{sigmoid, Scalar};
use crate::tensor::Tensor;

use super::{AminoAcid, ProteinRecord, SeqError, ALPHABET_SIZE, STANDARD_COUNT, UNKNOWN_INDEX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingForm {
    OneHot,
    Continuous,
}

/// `21 x l` residue embedding, either one-hot or a continuous relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEmbedding<T> {
    matrix: Tensor<T>,
    form: EmbeddingForm,
}

impl<T: Scalar> SequenceEmbedding<T> {
    pub fn from_residues(residues: &[AminoAcid]) -> Self {
        let mut matrix = Tensor::zeros(ALPHABET_SIZE, residues.len());
        for (c, aa) in residues.iter().enumerate() {
            matrix.set(aa.index(), c, T::one());
        }
        Self {
            matrix,
            form: EmbeddingForm::OneHot,
        }
    }

    /// Validates a binary matrix whose columns each hold a single one.
    pub fn one_hot(matrix: Tensor<T>) -> Result<Self, SeqError> {
        check_rows(&matrix)?;
        for c in 0..matrix.cols() {
            let col = matrix.column(c);
            if col.iter().any(|&x| x != T::zero() && x != T::one())
                || col.iter().filter(|&&x| x == T::one()).count() != 1
            {
                return Err(SeqError::FormViolation("one-hot"));
            }
        }
        Ok(Self {
            matrix,
            form: EmbeddingForm::OneHot,
        })
    }

    /// Validates a matrix with entries in `[0, 1]`.
    pub fn continuous(matrix: Tensor<T>) -> Result<Self, SeqError> {
        check_rows(&matrix)?;
        if matrix
            .data()
            .iter()
            .any(|&x| !(x >= T::zero() && x <= T::one()))
        {
            return Err(SeqError::FormViolation("continuous"));
        }
        Ok(Self {
            matrix,
            form: EmbeddingForm::Continuous,
        })
    }

    pub fn matrix(&self) -> &Tensor<T> {
        &self.matrix
    }

    pub fn form(&self) -> EmbeddingForm {
        self.form
    }

    pub fn len(&self) -> usize {
        self.matrix.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.cols() == 0
    }

    /// Per-column argmax; ties go to the lowest row. With `standard_only` the
    /// Unknown row is never selected.
    pub fn argmax(&self, standard_only: bool) -> Vec<AminoAcid> {
        let rows = if standard_only {
            STANDARD_COUNT
        } else {
            ALPHABET_SIZE
        };
        (0..self.len())
            .map(|c| {
                let mut best = 0;
                for r in 1..rows {
                    if self.matrix.get(r, c) > self.matrix.get(best, c) {
                        best = r;
                    }
                }
                AminoAcid::from_index(best).expect("row index below 21")
            })
            .collect()
    }

    /// Hard one-hot embedding from the per-column argmax over all 21 rows.
    pub fn harden(&self) -> Self {
        Self::from_residues(&self.argmax(false))
    }
}

fn check_rows<T: Scalar>(m: &Tensor<T>) -> Result<(), SeqError> {
    if m.rows() != ALPHABET_SIZE {
        return Err(SeqError::BadEmbeddingShape {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(())
}

pub fn encode_onehot<T: Scalar>(record: &ProteinRecord) -> SequenceEmbedding<T> {
    SequenceEmbedding::from_residues(record.residues())
}

/// The all-Unknown matrix: zeros except the last row, which is all ones.
pub fn unknown_matrix<T: Scalar>(len: usize) -> Tensor<T> {
    Tensor::from_fn(ALPHABET_SIZE, len, |r, _| {
        if r == UNKNOWN_INDEX {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// `P ⊙ (1 - gate) + U ⊙ gate`, with each gate value broadcast down its column.
pub fn apply_deletion_mask<T: Scalar>(
    p: &SequenceEmbedding<T>,
    gate: &[T],
) -> Result<SequenceEmbedding<T>, SeqError> {
    if p.form() != EmbeddingForm::OneHot {
        return Err(SeqError::FormViolation("one-hot"));
    }
    if gate.len() != p.len() {
        return Err(SeqError::GateLength {
            found: gate.len(),
            expected: p.len(),
        });
    }
    if let Some((index, &g)) = gate
        .iter()
        .enumerate()
        .find(|(_, &g)| !(g >= T::zero() && g <= T::one()))
    {
        return Err(SeqError::GateOutOfRange {
            index,
            value: g.as_f64(),
        });
    }
    let src = p.matrix();
    let matrix = Tensor::from_fn(ALPHABET_SIZE, p.len(), |r, c| {
        let u = if r == UNKNOWN_INDEX { T::one() } else { T::zero() };
        src.get(r, c) * (T::one() - gate[c]) + u * gate[c]
    });
    Ok(SequenceEmbedding {
        matrix,
        form: EmbeddingForm::Continuous,
    })
}

/// Entrywise sigmoid of substitution logits (no column normalization).
pub fn relax_substitution<T: Scalar>(logits: &Tensor<T>) -> Result<SequenceEmbedding<T>, SeqError> {
    check_rows(logits)?;
    Ok(SequenceEmbedding {
        matrix: logits.map(sigmoid),
        form: EmbeddingForm::Continuous,
    })
}
