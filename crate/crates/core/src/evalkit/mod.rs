//! Explanation evaluation (PN, PS, complexity) and the random and
//! conservation baselines.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfengine::FOLD_THRESHOLD;
use crate::foldmetrics::{tm_score, FoldError};
use crate::predictor::{ContextProvider, PredictError, StructurePredictor};
use crate::scalar::Scalar;
use crate::seqcore::{encode_onehot, AminoAcid, ProteinRecord, SequenceEmbedding};

/// Baseline fraction matched to the complexity of necessary explanations.
pub const PN_BASELINE_FRACTION: f64 = 0.33;
/// Baseline fraction matched to the complexity of sufficient explanations.
pub const PS_BASELINE_FRACTION: f64 = 0.50;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("protein '{protein}': position {position} is outside 0..{len}")]
    PositionOutOfRange {
        protein: String,
        position: usize,
        len: usize,
    },
    #[error("protein '{protein}' has no alignment")]
    MissingMsa { protein: String },
    #[error("fraction {0} lies outside [0, 1]")]
    BadFraction(f64),
    #[error("{records} records but {explanations} explanations")]
    CountMismatch { records: usize, explanations: usize },
    #[error("nothing to summarize")]
    Empty,
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Fold(#[from] FoldError),
}

/// Which residues are masked before re-prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Criterion {
    /// Mask the explanation; success when the fold changes (`TM <= 0.5`).
    Pn,
    /// Mask everything else; success when the fold survives (`TM > 0.5`).
    Ps,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Pn => "PN",
            Criterion::Ps => "PS",
        }
    }

    pub fn indicator(self, tm: f64) -> bool {
        match self {
            Criterion::Pn => tm <= FOLD_THRESHOLD,
            Criterion::Ps => tm > FOLD_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub protein_id: String,
    pub method: String,
    pub criterion: Criterion,
    pub length: usize,
    pub explanation_size: usize,
    pub complexity: f64,
    pub tm: f64,
    /// `PN_k` or `PS_k`, depending on `criterion`.
    pub indicator: bool,
}

impl EvaluationRecord {
    pub fn new(
        protein_id: &str,
        method: &str,
        criterion: Criterion,
        length: usize,
        explanation_size: usize,
        tm: f64,
    ) -> Self {
        Self {
            protein_id: protein_id.to_string(),
            method: method.to_string(),
            criterion,
            length,
            explanation_size,
            complexity: explanation_size as f64 / length as f64,
            tm,
            indicator: criterion.indicator(tm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub method: String,
    pub criterion: Criterion,
    pub n: usize,
    pub avg_size: f64,
    pub avg_complexity: f64,
    pub avg_tm: f64,
    /// PN or PS: the fraction of records whose indicator is set.
    pub score: f64,
}

/// Residues of `record` with `masked` positions replaced by Unknown.
fn masked_residues(record: &ProteinRecord, masked: impl Iterator<Item = usize>) -> Vec<AminoAcid> {
    let mut residues = record.residues().to_vec();
    for i in masked {
        residues[i] = AminoAcid::Unknown;
    }
    residues
}

fn check_positions(record: &ProteinRecord, explanation: &[usize]) -> Result<(), EvalError> {
    match explanation.iter().find(|&&p| p >= record.len()) {
        Some(&position) => Err(EvalError::PositionOutOfRange {
            protein: record.id().to_string(),
            position,
            len: record.len(),
        }),
        None => Ok(()),
    }
}

/// Masks according to `criterion`, refreshes the context, re-predicts and
/// scores the result against the unmasked prediction.
pub fn evaluate_record<T, P, C>(
    criterion: Criterion,
    method: &str,
    record: &ProteinRecord,
    explanation: &[usize],
    predictor: &P,
    context: &C,
) -> Result<EvaluationRecord, EvalError>
where
    T: Scalar,
    P: StructurePredictor<T> + ?Sized,
    C: ContextProvider<T> + ?Sized,
{
    check_positions(record, explanation)?;
    let mut in_explanation = vec![false; record.len()];
    for &i in explanation {
        in_explanation[i] = true;
    }
    let size = in_explanation.iter().filter(|&&b| b).count();
    let masked = (0..record.len()).filter(|&i| match criterion {
        Criterion::Pn => in_explanation[i],
        Criterion::Ps => !in_explanation[i],
    });
    let original: SequenceEmbedding<T> = encode_onehot(record);
    let reference = predictor.predict(&original, &context.refresh(record, &original))?;
    let perturbed = SequenceEmbedding::from_residues(&masked_residues(record, masked));
    let structure = predictor.predict(&perturbed, &context.refresh(record, &perturbed))?;
    let tm = tm_score(&reference, &structure)?.as_f64();
    Ok(EvaluationRecord::new(record.id(), method, criterion, record.len(), size, tm))
}

/// Arithmetic means over `records` plus the indicator rate.
pub fn summarize(
    method: &str,
    criterion: Criterion,
    records: &[EvaluationRecord],
) -> Result<BenchmarkSummary, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = records.len() as f64;
    let mean = |f: &dyn Fn(&EvaluationRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(BenchmarkSummary {
        method: method.to_string(),
        criterion,
        n: records.len(),
        avg_size: mean(&|r| r.explanation_size as f64),
        avg_complexity: mean(&|r| r.complexity),
        avg_tm: mean(&|r| r.tm),
        score: records.iter().filter(|r| r.indicator).count() as f64 / n,
    })
}

fn evaluate_all<T, P, C>(
    criterion: Criterion,
    method: &str,
    records: &[ProteinRecord],
    explanations: &[Vec<usize>],
    predictor: &P,
    context: &C,
) -> Result<(Vec<EvaluationRecord>, BenchmarkSummary), EvalError>
where
    T: Scalar,
    P: StructurePredictor<T> + ?Sized,
    C: ContextProvider<T> + ?Sized,
{
    if records.len() != explanations.len() {
        return Err(EvalError::CountMismatch {
            records: records.len(),
            explanations: explanations.len(),
        });
    }
    let rows = records
        .iter()
        .zip(explanations)
        .map(|(r, e)| evaluate_record(criterion, method, r, e, predictor, context))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(method, criterion, &rows)?;
    Ok((rows, summary))
}

pub fn evaluate_pn<T, P, C>(
    method: &str,
    records: &[ProteinRecord],
    explanations: &[Vec<usize>],
    predictor: &P,
    context: &C,
) -> Result<(Vec<EvaluationRecord>, BenchmarkSummary), EvalError>
where
    T: Scalar,
    P: StructurePredictor<T> + ?Sized,
    C: ContextProvider<T> + ?Sized,
{
    evaluate_all(Criterion::Pn, method, records, explanations, predictor, context)
}

pub fn evaluate_ps<T, P, C>(
    method: &str,
    records: &[ProteinRecord],
    explanations: &[Vec<usize>],
    predictor: &P,
    context: &C,
) -> Result<(Vec<EvaluationRecord>, BenchmarkSummary), EvalError>
where
    T: Scalar,
    P: StructurePredictor<T> + ?Sized,
    C: ContextProvider<T> + ?Sized,
{
    evaluate_all(Criterion::Ps, method, records, explanations, predictor, context)
}

fn baseline_size(len: usize, fraction: f64) -> Result<usize, EvalError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(EvalError::BadFraction(fraction));
    }
    Ok(((fraction * len as f64).round() as usize).min(len))
}

/// `round(fraction * l)` distinct positions drawn uniformly, sorted.
pub fn baseline_random(record: &ProteinRecord, fraction: f64, seed: u64) -> Result<Vec<usize>, EvalError> {
    let k = baseline_size(record.len(), fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, record.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Number of alignment rows (query included) that agree with the query at
/// each position.
pub fn conservation(record: &ProteinRecord) -> Result<Vec<usize>, EvalError> {
    let msa = record.msa().ok_or_else(|| EvalError::MissingMsa {
        protein: record.id().to_string(),
    })?;
    Ok(record
        .residues()
        .iter()
        .enumerate()
        .map(|(i, &aa)| msa.rows().iter().filter(|row| row[i] == aa).count())
        .collect())
}

/// The `round(fraction * l)` most conserved positions, ties to the lower
/// index, sorted.
pub fn baseline_evolutionary(record: &ProteinRecord, fraction: f64) -> Result<Vec<usize>, EvalError> {
    let k = baseline_size(record.len(), fraction)?;
    let counts = conservation(record)?;
    let mut order: Vec<usize> = (0..record.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Summary table in benchmark layout, one row per method.
pub fn summary_table_csv(summaries: &[BenchmarkSummary]) -> String {
    let metric = summaries.first().map_or("score", |s| s.criterion.name());
    let mut out = format!("method,n,ave_explanation_size,ave_complexity,ave_tm,{metric}\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4}",
            s.method, s.n, s.avg_size, s.avg_complexity, s.avg_tm, s.score
        );
    }
    out
}
