use crate::foldmetrics::{tm_score_var, Structure, Superposition};
use crate::gradkit::Var;
use crate::predictor::DifferentiablePredictor;
use crate::scalar::Scalar;
use crate::seqcore::{unknown_matrix, MsaEmbedding, SequenceEmbedding, ALPHABET_SIZE};
use crate::tensor::Tensor;

use super::{CfConfig, CfError, ObjectiveMode, FOLD_THRESHOLD};

/// Relaxed counterfactual embedding as a tape node.
///
/// Deletion: `P + (U - P) ⊙ (1 σ(Δ))`; substitution: `σ(P')`.
pub fn counterfactual_var<'t, T: Scalar>(
    mode: ObjectiveMode,
    p: &SequenceEmbedding<T>,
    params: Var<'t, T>,
) -> Result<Var<'t, T>, CfError> {
    let tape = params.tape();
    if mode.is_deletion() {
        let l = p.len();
        let diff = unknown_matrix::<T>(l).zip_map(p.matrix(), |u, q| u - q).expect("same shape");
        let gate = tape
            .constant(Tensor::ones(ALPHABET_SIZE, 1))?
            .matmul(params.sigmoid()?)?;
        Ok(tape
            .constant(p.matrix().clone())?
            .add(tape.constant(diff)?.mul(gate)?)?)
    } else {
        Ok(params.sigmoid()?)
    }
}

/// `‖σ(Δ)‖₁` for deletion modes, `‖P − σ(P')‖₁` over all 21 rows otherwise.
pub fn l1_term<'t, T: Scalar>(
    mode: ObjectiveMode,
    p: &SequenceEmbedding<T>,
    params: Var<'t, T>,
) -> Result<Var<'t, T>, CfError> {
    let s = params.sigmoid()?;
    let v = if mode.is_deletion() {
        s.abs()?.sum()?
    } else {
        params.tape().constant(p.matrix().clone())?.sub(s)?.abs()?.sum()?
    };
    Ok(v)
}

/// Combines a TM-score node and an L1 node into the mode's loss.
pub fn loss_from_terms<'t, T: Scalar>(
    mode: ObjectiveMode,
    tm: Var<'t, T>,
    l1: Var<'t, T>,
    cfg: &CfConfig,
) -> Result<Var<'t, T>, CfError> {
    let slope = T::lit(cfg.negative_slope);
    let lambda = T::lit(cfg.lambda);
    let margin = T::lit(cfg.alpha - FOLD_THRESHOLD);
    let penalty = l1.scale(lambda)?;
    let loss = if mode.seeks_fold_change() {
        tm.offset(margin)?.leaky_relu(slope)?.add(penalty)?
    } else {
        tm.neg()?.offset(T::lit(FOLD_THRESHOLD + cfg.alpha))?.leaky_relu(slope)?.sub(penalty)?
    };
    Ok(loss)
}

/// Loss node with its parts.
#[derive(Clone)]
pub struct Objective<'t, T> {
    pub loss: Var<'t, T>,
    pub tm: Var<'t, T>,
    pub l1: Var<'t, T>,
    pub superposition: Superposition<T>,
}

fn mode_loss<'t, T: Scalar>(
    mode: ObjectiveMode,
    reference: &Structure<T>,
    mobile: Var<'t, T>,
    l1: Var<'t, T>,
    cfg: &CfConfig,
    frozen: Option<&Superposition<T>>,
) -> Result<Objective<'t, T>, CfError> {
    let (tm, superposition) = tm_score_var(reference, mobile, frozen)?;
    let loss = loss_from_terms(mode, tm, l1, cfg)?;
    Ok(Objective {
        loss,
        tm,
        l1,
        superposition,
    })
}

/// `LeakyReLU(TM − 0.5 + α) + λ‖σ(Δ)‖₁`.
pub fn loss_deletion_necessary<'t, T: Scalar>(
    reference: &Structure<T>,
    s_star: Var<'t, T>,
    delta_logits: Var<'t, T>,
    cfg: &CfConfig,
    frozen: Option<&Superposition<T>>,
) -> Result<Objective<'t, T>, CfError> {
    let l1 = delta_logits.sigmoid()?.abs()?.sum()?;
    mode_loss(ObjectiveMode::DeletionNecessary, reference, s_star, l1, cfg, frozen)
}

/// `LeakyReLU(0.5 − TM + α) − λ‖σ(Δ)‖₁`.
pub fn loss_deletion_sufficient<'t, T: Scalar>(
    reference: &Structure<T>,
    s_star: Var<'t, T>,
    delta_logits: Var<'t, T>,
    cfg: &CfConfig,
    frozen: Option<&Superposition<T>>,
) -> Result<Objective<'t, T>, CfError> {
    let l1 = delta_logits.sigmoid()?.abs()?.sum()?;
    mode_loss(ObjectiveMode::DeletionSufficient, reference, s_star, l1, cfg, frozen)
}

/// `LeakyReLU(TM − 0.5 + α) + λ‖P − σ(P')‖₁`.
pub fn loss_substitution_radical<'t, T: Scalar>(
    reference: &Structure<T>,
    s_prime: Var<'t, T>,
    p: &SequenceEmbedding<T>,
    sub_logits: Var<'t, T>,
    cfg: &CfConfig,
    frozen: Option<&Superposition<T>>,
) -> Result<Objective<'t, T>, CfError> {
    let l1 = l1_term(ObjectiveMode::SubstitutionRadical, p, sub_logits)?;
    mode_loss(ObjectiveMode::SubstitutionRadical, reference, s_prime, l1, cfg, frozen)
}

/// `LeakyReLU(0.5 − TM + α) − λ‖P − σ(P')‖₁`.
pub fn loss_substitution_conservative<'t, T: Scalar>(
    reference: &Structure<T>,
    s_prime: Var<'t, T>,
    p: &SequenceEmbedding<T>,
    sub_logits: Var<'t, T>,
    cfg: &CfConfig,
    frozen: Option<&Superposition<T>>,
) -> Result<Objective<'t, T>, CfError> {
    let l1 = l1_term(ObjectiveMode::SubstitutionConservative, p, sub_logits)?;
    mode_loss(ObjectiveMode::SubstitutionConservative, reference, s_prime, l1, cfg, frozen)
}

/// Full objective for a perturbation: counterfactual embedding, prediction
/// under `msa`, TM-score against `reference`, and the mode's loss.
#[allow(clippy::too_many_arguments)]
pub fn objective<'t, T: Scalar, D: DifferentiablePredictor<T> + ?Sized>(
    mode: ObjectiveMode,
    reference: &Structure<T>,
    p: &SequenceEmbedding<T>,
    params: Var<'t, T>,
    predictor: &D,
    msa: &MsaEmbedding,
    cfg: &CfConfig,
    frozen: Option<&Superposition<T>>,
) -> Result<Objective<'t, T>, CfError> {
    let x = counterfactual_var(mode, p, params)?;
    let mobile = predictor.predict_var(x, msa)?;
    let l1 = l1_term(mode, p, params)?;
    mode_loss(mode, reference, mobile, l1, cfg, frozen)
}
