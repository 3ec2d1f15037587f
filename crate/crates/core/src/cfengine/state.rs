use crate::gradkit::AdamState;
use crate::scalar::{sigmoid, Scalar};
use crate::seqcore::{
    apply_deletion_mask, relax_substitution, AminoAcid, SeqError, SequenceEmbedding,
    ALPHABET_SIZE,
};
use crate::tensor::Tensor;

use super::report::{Edit, ExplanationResidue};
use super::ObjectiveMode;

/// Initial deletion logit; `sigmoid(-4) ~ 0.018`.
pub const DELETION_INIT_LOGIT: f64 = -4.0;
/// Initial substitution logit magnitude; `sigmoid(2.2) ~ 0.90`.
pub const SUBSTITUTION_INIT_LOGIT: f64 = 2.2;

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation<T> {
    /// `1 x l` deletion logits.
    Deletion { delta_logits: Tensor<T> },
    /// `21 x l` substitution logits.
    Substitution { sub_logits: Tensor<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState<T> {
    pub mode: ObjectiveMode,
    pub perturbation: Perturbation<T>,
    pub adam: AdamState<T>,
}

impl<T: Scalar> PerturbationState<T> {
    pub fn params(&self) -> &Tensor<T> {
        match &self.perturbation {
            Perturbation::Deletion { delta_logits } => delta_logits,
            Perturbation::Substitution { sub_logits } => sub_logits,
        }
    }

    pub fn params_mut(&mut self) -> &mut Tensor<T> {
        match &mut self.perturbation {
            Perturbation::Deletion { delta_logits } => delta_logits,
            Perturbation::Substitution { sub_logits } => sub_logits,
        }
    }

    pub(crate) fn split_mut(&mut self) -> (&mut Tensor<T>, &mut AdamState<T>) {
        let params = match &mut self.perturbation {
            Perturbation::Deletion { delta_logits } => delta_logits,
            Perturbation::Substitution { sub_logits } => sub_logits,
        };
        (params, &mut self.adam)
    }

    /// Current relaxed counterfactual embedding.
    pub fn counterfactual(&self, p: &SequenceEmbedding<T>) -> Result<SequenceEmbedding<T>, SeqError> {
        match &self.perturbation {
            Perturbation::Deletion { delta_logits } => {
                let gate: Vec<T> = delta_logits.data().iter().map(|&x| sigmoid(x)).collect();
                apply_deletion_mask(p, &gate)
            }
            Perturbation::Substitution { sub_logits } => relax_substitution(sub_logits),
        }
    }
}

pub fn init_state<T: Scalar>(mode: ObjectiveMode, p: &SequenceEmbedding<T>) -> PerturbationState<T> {
    let l = p.len();
    let perturbation = if mode.is_deletion() {
        Perturbation::Deletion {
            delta_logits: Tensor::filled(1, l, T::lit(DELETION_INIT_LOGIT)),
        }
    } else {
        let k = T::lit(SUBSTITUTION_INIT_LOGIT);
        Perturbation::Substitution {
            sub_logits: p.matrix().map(|x| if x == T::one() { k } else { -k }),
        }
    };
    let adam = match &perturbation {
        Perturbation::Deletion { delta_logits } => AdamState::like(delta_logits),
        Perturbation::Substitution { sub_logits } => AdamState::like(sub_logits),
    };
    PerturbationState {
        mode,
        perturbation,
        adam,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binarized<T> {
    pub explanation: Vec<ExplanationResidue>,
    /// Positions replaced by Unknown in the hard embedding (deletion modes).
    pub deleted: Vec<usize>,
    pub hard: SequenceEmbedding<T>,
}

/// Hard explanation from a relaxed state. Threshold comparisons are strict;
/// substitution argmax ignores the Unknown row.
pub fn binarize<T: Scalar>(
    state: &PerturbationState<T>,
    p: &SequenceEmbedding<T>,
    threshold: f64,
) -> Binarized<T> {
    let original = p.argmax(false);
    match &state.perturbation {
        Perturbation::Deletion { delta_logits } => {
            let t = T::lit(threshold);
            let deleted: Vec<usize> = (0..original.len())
                .filter(|&i| sigmoid(delta_logits.get(0, i)) > t)
                .collect();
            let mut residues = original.clone();
            for &i in &deleted {
                residues[i] = AminoAcid::Unknown;
            }
            let explanation = match state.mode {
                ObjectiveMode::DeletionSufficient => (0..original.len())
                    .filter(|i| deleted.binary_search(i).is_err())
                    .map(|i| ExplanationResidue {
                        position: i,
                        original: original[i].letter(),
                        edit: Edit::Kept,
                    })
                    .collect(),
                _ => deleted
                    .iter()
                    .map(|&i| ExplanationResidue {
                        position: i,
                        original: original[i].letter(),
                        edit: Edit::Deleted,
                    })
                    .collect(),
            };
            Binarized {
                explanation,
                deleted,
                hard: SequenceEmbedding::from_residues(&residues),
            }
        }
        Perturbation::Substitution { sub_logits } => {
            debug_assert_eq!(sub_logits.rows(), ALPHABET_SIZE);
            let relaxed = SequenceEmbedding::continuous(sub_logits.map(sigmoid))
                .expect("sigmoid lies in [0, 1]");
            let chosen = relaxed.argmax(true);
            let explanation = original
                .iter()
                .zip(&chosen)
                .enumerate()
                .filter(|(_, (o, c))| o != c)
                .map(|(i, (o, c))| ExplanationResidue {
                    position: i,
                    original: o.letter(),
                    edit: Edit::Substituted { to: c.letter() },
                })
                .collect();
            Binarized {
                explanation,
                deleted: Vec::new(),
                hard: SequenceEmbedding::from_residues(&chosen),
            }
        }
    }
}
