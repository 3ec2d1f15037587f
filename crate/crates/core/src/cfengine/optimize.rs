use crate::foldmetrics::tm_score;
use crate::gradkit::{Adam, Tape};
use crate::predictor::{ContextProvider, DifferentiablePredictor};
use crate::scalar::Scalar;
use crate::seqcore::{encode_onehot, residues_to_string, ProteinRecord};

use super::loss::objective;
use super::report::{merge_reports, ExplanationReport, TraceRecord};
use super::state::{binarize, init_state};
use super::{CfConfig, CfError, ObjectiveMode};

/// Runs `cfg.phases` phases of `cfg.steps_per_phase` Adam steps on the mode's
/// loss, refreshing the alignment at the start of each phase, then binarizes
/// and checks the hard counterfactual with one more forward pass.
pub fn optimize<T, D, C>(
    record: &ProteinRecord,
    predictor: &D,
    context: &C,
    mode: ObjectiveMode,
    cfg: &CfConfig,
) -> Result<ExplanationReport, CfError>
where
    T: Scalar,
    D: DifferentiablePredictor<T> + ?Sized,
    C: ContextProvider<T> + ?Sized,
{
    cfg.validate()?;
    if record.len() > cfg.chunk_len {
        return Err(CfError::TooLong {
            len: record.len(),
            chunk_len: cfg.chunk_len,
        });
    }
    let p = encode_onehot::<T>(record);
    let reference = predictor.predict(&p, &context.refresh(record, &p))?;

    let adam = Adam {
        lr: cfg.lr,
        ..Adam::default()
    };
    let mut state = init_state(mode, &p);
    let mut trace = Vec::with_capacity(cfg.total_steps());
    for phase in 0..cfg.phases {
        let msa = context.refresh(record, &state.counterfactual(&p)?);
        for k in 0..cfg.steps_per_phase {
            let tape = Tape::new();
            let params = tape.param(state.params().clone())?;
            let obj = objective(mode, &reference, &p, params, predictor, &msa, cfg, None)?;
            let grads = tape.backward(obj.loss)?;
            trace.push(TraceRecord {
                chunk: 0,
                phase,
                step: phase * cfg.steps_per_phase + k,
                loss: obj.loss.item().expect("scalar loss").as_f64(),
                tm: obj.tm.item().expect("scalar tm").as_f64(),
                l1: obj.l1.item().expect("scalar l1").as_f64(),
            });
            let grad = grads.wrt(params).expect("parameter gradient").clone();
            let (params, moments) = state.split_mut();
            adam.step(params, &grad, moments)?;
        }
    }

    let hard = binarize(&state, &p, cfg.binarize_threshold);
    let final_structure = predictor.predict(&hard.hard, &context.refresh(record, &hard.hard))?;
    let final_tm = tm_score(&reference, &final_structure)?.as_f64();
    let size = hard.explanation.len();
    Ok(ExplanationReport {
        protein_id: record.id().to_string(),
        mode,
        length: record.len(),
        explanation_size: size,
        complexity: size as f64 / record.len() as f64,
        explanation: hard.explanation,
        final_tm,
        feasible: mode.is_feasible(final_tm),
        sequence: record.letters(),
        counterfactual_sequence: residues_to_string(&hard.hard.argmax(false)),
        predictor: predictor.describe(),
        context: context.describe(),
        chunks: Vec::new(),
        config: cfg.clone(),
        trace,
    })
}

/// Chunks `record` by `cfg.chunk_len`, explains each chunk independently and
/// merges the results.
pub fn explain_record<T, D, C>(
    record: &ProteinRecord,
    predictor: &D,
    context: &C,
    mode: ObjectiveMode,
    cfg: &CfConfig,
) -> Result<ExplanationReport, CfError>
where
    T: Scalar,
    D: DifferentiablePredictor<T> + ?Sized,
    C: ContextProvider<T> + ?Sized,
{
    cfg.validate()?;
    let parts = record
        .chunk(cfg.chunk_len)
        .iter()
        .map(|chunk| optimize(chunk, predictor, context, mode, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_reports(record.id(), parts))
}
