use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CfConfig, ObjectiveMode};

/// What the explanation says about one residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Edit {
    /// Replaced by Unknown (necessary deletion).
    Deleted,
    /// Left in place while the rest was deleted (sufficient deletion).
    Kept,
    Substituted { to: char },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationResidue {
    pub position: usize,
    pub original: char,
    #[serde(flatten)]
    pub edit: Edit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub chunk: usize,
    pub phase: usize,
    pub step: usize,
    pub loss: f64,
    pub tm: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkSummary {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub explanation_size: usize,
    pub final_tm: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub protein_id: String,
    pub mode: ObjectiveMode,
    pub length: usize,
    pub explanation: Vec<ExplanationResidue>,
    pub explanation_size: usize,
    /// `explanation_size / length`.
    pub complexity: f64,
    /// TM-score of the binarized counterfactual against the original
    /// prediction; length-weighted over chunks.
    pub final_tm: f64,
    pub feasible: bool,
    pub sequence: String,
    /// Hard counterfactual; deleted residues are written as `X`.
    pub counterfactual_sequence: String,
    pub predictor: String,
    pub context: String,
    pub chunks: Vec<ChunkSummary>,
    pub config: CfConfig,
    pub trace: Vec<TraceRecord>,
}

impl ExplanationReport {
    pub fn positions(&self) -> Vec<usize> {
        self.explanation.iter().map(|e| e.position).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Joins per-chunk reports (in chunk order) into one report for the full
/// record. Positions are shifted to full-record coordinates.
///
/// # Panics
/// If `parts` is empty or the chunks disagree on mode.
pub fn merge_reports(protein_id: &str, parts: Vec<ExplanationReport>) -> ExplanationReport {
    assert!(!parts.is_empty(), "nothing to merge");
    if parts.len() == 1 {
        let mut only = parts.into_iter().next().expect("one part");
        only.protein_id = protein_id.to_string();
        return only;
    }
    let mode = parts[0].mode;
    let mut out = ExplanationReport {
        protein_id: protein_id.to_string(),
        mode,
        length: 0,
        explanation: Vec::new(),
        explanation_size: 0,
        complexity: 0.0,
        final_tm: 0.0,
        feasible: true,
        sequence: String::new(),
        counterfactual_sequence: String::new(),
        predictor: parts[0].predictor.clone(),
        context: parts[0].context.clone(),
        chunks: Vec::new(),
        config: parts[0].config.clone(),
        trace: Vec::new(),
    };
    let mut weighted_tm = 0.0;
    for (k, part) in parts.into_iter().enumerate() {
        assert_eq!(part.mode, mode, "chunks disagree on mode");
        let offset = out.length;
        out.explanation.extend(part.explanation.iter().map(|e| ExplanationResidue {
            position: e.position + offset,
            ..e.clone()
        }));
        out.trace.extend(part.trace.into_iter().map(|t| TraceRecord { chunk: k, ..t }));
        out.chunks.push(ChunkSummary {
            id: part.protein_id.clone(),
            start: offset,
            end: offset + part.length,
            explanation_size: part.explanation_size,
            final_tm: part.final_tm,
            feasible: part.feasible,
        });
        weighted_tm += part.final_tm * part.length as f64;
        out.feasible &= part.feasible;
        out.length += part.length;
        out.sequence.push_str(&part.sequence);
        out.counterfactual_sequence.push_str(&part.counterfactual_sequence);
    }
    out.explanation_size = out.explanation.len();
    out.complexity = out.explanation_size as f64 / out.length as f64;
    out.final_tm = weighted_tm / out.length as f64;
    out
}

pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::from("chunk,phase,step,loss,tm,l1\n");
    for t in trace {
        let _ = writeln!(s, "{},{},{},{},{},{}", t.chunk, t.phase, t.step, t.loss, t.tm, t.l1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(id: &str, len: usize, tm: f64, feasible: bool, positions: &[usize]) -> ExplanationReport {
        ExplanationReport {
            protein_id: id.into(),
            mode: ObjectiveMode::DeletionNecessary,
            length: len,
            explanation: positions
                .iter()
                .map(|&p| ExplanationResidue {
                    position: p,
                    original: 'A',
                    edit: Edit::Deleted,
                })
                .collect(),
            explanation_size: positions.len(),
            complexity: positions.len() as f64 / len as f64,
            final_tm: tm,
            feasible,
            sequence: "A".repeat(len),
            counterfactual_sequence: "A".repeat(len),
            predictor: "p".into(),
            context: "c".into(),
            chunks: Vec::new(),
            config: CfConfig::for_mode(ObjectiveMode::DeletionNecessary),
            trace: vec![TraceRecord {
                chunk: 0,
                phase: 0,
                step: 0,
                loss: 0.5,
                tm: 1.0,
                l1: 0.1,
            }],
        }
    }

    #[test]
    fn merge_offsets_and_weights() {
        let merged = merge_reports(
            "p",
            vec![part("p:0-3", 3, 0.4, true, &[1]), part("p:3-4", 1, 0.8, false, &[0])],
        );
        assert_eq!(merged.positions(), vec![1, 3]);
        assert_eq!(merged.length, 4);
        assert_eq!(merged.complexity, 0.5);
        assert!((merged.final_tm - (0.4 * 3.0 + 0.8) / 4.0).abs() < 1e-15);
        assert!(!merged.feasible);
        assert_eq!(merged.trace.iter().map(|t| t.chunk).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(merged.chunks[1].start, 3);
    }

    #[test]
    fn json_round_trip() {
        let mut r = part("x", 2, 0.3, true, &[0]);
        r.explanation.push(ExplanationResidue {
            position: 1,
            original: 'A',
            edit: Edit::Substituted { to: 'W' },
        });
        let text = r.to_json();
        assert!(text.contains("\"kind\": \"substituted\""));
        assert_eq!(ExplanationReport::from_json(&text).unwrap(), r);
    }

    #[test]
    fn trace_csv_layout() {
        let csv = trace_to_csv(&part("x", 1, 1.0, true, &[]).trace);
        assert_eq!(csv, "chunk,phase,step,loss,tm,l1\n0,0,0,0.5,1,0.1\n");
    }
}
