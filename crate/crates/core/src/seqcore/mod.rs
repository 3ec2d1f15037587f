//! Protein and MSA data model, file ingestion, one-hot encoding and the
//! construction of counterfactual embeddings from perturbation parameters.

mod amino;
mod embedding;
mod fasta;
mod msa;

use thiserror::Error;

pub use amino::{residues_to_string, AminoAcid, ALPHABET_SIZE, STANDARD_COUNT, UNKNOWN_INDEX};
pub use embedding::{
    apply_deletion_mask, encode_onehot, relax_substitution, unknown_matrix, EmbeddingForm,
    SequenceEmbedding,
};
pub use fasta::{parse_fasta, write_fasta};
pub use msa::{parse_msa, MsaEmbedding};

/// Minimum number of resolved residues for a record to enter a benchmark set.
pub const MIN_BENCHMARK_LENGTH: usize = 80;

/// Default chunk length for long chains.
pub const DEFAULT_CHUNK_LEN: usize = 384;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: sequence data before the first header")]
    MissingHeader { line: usize },
    #[error("line {line}: illegal residue letter '{letter}'")]
    IllegalResidue { line: usize, letter: char },
    #[error("line {line}: record '{id}' has an empty sequence")]
    EmptySequence { line: usize, id: String },
    #[error("line {line}: duplicate record id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("MSA line {line}: row length {found} does not match query length {expected}")]
    MsaRowLength {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("MSA line {line}: first row does not match the query sequence")]
    MsaQueryMismatch { line: usize },
    #[error("record '{id}' has no residues")]
    EmptyRecord { id: String },
    #[error("gate has length {found}, expected {expected}")]
    GateLength { found: usize, expected: usize },
    #[error("gate entry {index} = {value} lies outside [0, 1]")]
    GateOutOfRange { index: usize, value: f64 },
    #[error("embedding has shape {rows}x{cols}, expected 21 rows")]
    BadEmbeddingShape { rows: usize, cols: usize },
    #[error("embedding violates the {0} invariant")]
    FormViolation(&'static str),
}

/// Identifier, residue sequence and optional alignment: the unit of ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinRecord {
    id: String,
    residues: Vec<AminoAcid>,
    msa: Option<MsaEmbedding>,
}

impl ProteinRecord {
    pub fn new(id: impl Into<String>, residues: Vec<AminoAcid>) -> Result<Self, SeqError> {
        let id = id.into();
        if residues.is_empty() {
            return Err(SeqError::EmptyRecord { id });
        }
        Ok(Self {
            id,
            residues,
            msa: None,
        })
    }

    /// Parses a plain letter string (`X` for Unknown).
    pub fn from_letters(id: impl Into<String>, letters: &str) -> Result<Self, SeqError> {
        let residues = letters
            .chars()
            .map(|c| AminoAcid::from_letter(c).ok_or(SeqError::IllegalResidue { line: 1, letter: c }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(id, residues)
    }

    /// Attaches an alignment; every row must have the record's length.
    pub fn with_msa(mut self, msa: MsaEmbedding) -> Result<Self, SeqError> {
        if msa.len() != self.len() {
            return Err(SeqError::MsaRowLength {
                line: 0,
                found: msa.len(),
                expected: self.len(),
            });
        }
        self.msa = Some(msa);
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[AminoAcid] {
        &self.residues
    }

    pub fn msa(&self) -> Option<&MsaEmbedding> {
        self.msa.as_ref()
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    /// Always false: records hold at least one residue.
    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn letters(&self) -> String {
        residues_to_string(&self.residues)
    }

    /// Number of residues that are not Unknown.
    pub fn resolved_len(&self) -> usize {
        self.residues.iter().filter(|aa| aa.is_standard()).count()
    }

    /// Whether the record passes the benchmark length filter.
    pub fn passes_length_filter(&self) -> bool {
        self.resolved_len() >= MIN_BENCHMARK_LENGTH
    }

    /// Splits into consecutive non-overlapping chunks of at most `chunk_len`
    /// residues, slicing the MSA identically. A record that fits in one chunk
    /// keeps its id; otherwise chunk ids carry the `start-end` span.
    pub fn chunk(&self, chunk_len: usize) -> Vec<ProteinRecord> {
        assert!(chunk_len >= 1, "chunk_len must be at least 1");
        if self.len() <= chunk_len {
            return vec![self.clone()];
        }
        chunk_spans(self.len(), chunk_len)
            .into_iter()
            .map(|(start, end)| ProteinRecord {
                id: format!("{}:{}-{}", self.id, start, end),
                residues: self.residues[start..end].to_vec(),
                msa: self.msa.as_ref().map(|m| m.slice(start, end)),
            })
            .collect()
    }
}

/// `[start, end)` spans of consecutive chunks covering `0..len`.
pub fn chunk_spans(len: usize, chunk_len: usize) -> Vec<(usize, usize)> {
    assert!(chunk_len >= 1, "chunk_len must be at least 1");
    (0..len)
        .step_by(chunk_len)
        .map(|start| (start, (start + chunk_len).min(len)))
        .collect()
}

pub fn chunk_record(record: &ProteinRecord, chunk_len: usize) -> Vec<ProteinRecord> {
    record.chunk(chunk_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly_a(len: usize) -> ProteinRecord {
        ProteinRecord::new("p", vec![AminoAcid::A; len]).unwrap()
    }

    #[test]
    fn chunk_lengths() {
        let lens = |l: usize| -> Vec<usize> {
            chunk_record(&poly_a(l), DEFAULT_CHUNK_LEN)
                .iter()
                .map(|c| c.len())
                .collect()
        };
        assert_eq!(lens(900), vec![384, 384, 132]);
        assert_eq!(lens(100), vec![100]);
        assert_eq!(lens(384), vec![384]);
    }

    #[test]
    fn chunking_slices_msa() {
        let rec = ProteinRecord::from_letters("q", "ARNDC").unwrap();
        let msa = parse_msa("ARNDC\nA-ND-\n", &rec).unwrap();
        let rec = rec.with_msa(msa).unwrap();
        let chunks = rec.chunk(2);
        assert_eq!(chunks.len(), 3);
        assert_eq!(chunks[1].id(), "q:2-4");
        let m = chunks[2].msa().unwrap();
        assert_eq!(m.rows()[1], vec![AminoAcid::Unknown]);
    }

    #[test]
    fn empty_record_rejected() {
        assert!(ProteinRecord::new("e", vec![]).is_err());
    }

    #[test]
    fn length_filter_counts_resolved() {
        let mut residues = vec![AminoAcid::G; 79];
        residues.push(AminoAcid::Unknown);
        assert!(!ProteinRecord::new("s", residues.clone()).unwrap().passes_length_filter());
        residues.push(AminoAcid::K);
        assert!(ProteinRecord::new("s", residues).unwrap().passes_length_filter());
    }

    proptest! {
        #[test]
        fn chunk_concatenation_identity(len in 1usize..=2000, chunk_len in 1usize..=500, seed in any::<u64>()) {
            let residues: Vec<AminoAcid> = (0..len)
                .map(|i| AminoAcid::from_index(((seed >> (i % 48)) as usize + i * 7) % 21).unwrap())
                .collect();
            let rec = ProteinRecord::new("r", residues.clone()).unwrap();
            let chunks = rec.chunk(chunk_len);
            prop_assert!(chunks.iter().all(|c| c.len() <= chunk_len && !c.is_empty()));
            let joined: Vec<AminoAcid> = chunks.iter().flat_map(|c| c.residues().to_vec()).collect();
            prop_assert_eq!(joined, residues);
        }
    }
}
