use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::{AminoAcid, ProteinRecord, SeqError, ALPHABET_SIZE};

/// Binary `m x 21 x l` alignment tensor, stored as residue rows so that every
/// (row, column) slice is one-hot by construction. Gaps are Unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsaEmbedding {
    len: usize,
    rows: Vec<Vec<AminoAcid>>,
}

impl MsaEmbedding {
    /// An alignment with no rows.
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            rows: Vec::new(),
        }
    }

    pub fn single(row: Vec<AminoAcid>) -> Self {
        Self {
            len: row.len(),
            rows: vec![row],
        }
    }

    pub fn from_rows(len: usize, rows: Vec<Vec<AminoAcid>>) -> Result<Self, SeqError> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != len) {
            return Err(SeqError::MsaRowLength {
                line: i + 1,
                found: r.len(),
                expected: len,
            });
        }
        Ok(Self { len, rows })
    }

    /// Sequence length `l`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row count `m`.
    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<AminoAcid>] {
        &self.rows
    }

    /// Tensor entry `(row, aa, col)`.
    pub fn entry(&self, row: usize, aa: usize, col: usize) -> bool {
        self.rows[row][col].index() == aa
    }

    /// `21 x l` column frequencies averaged over rows; zeros when `m = 0`.
    pub fn profile<T: Scalar>(&self) -> Tensor<T> {
        let mut out = Tensor::zeros(ALPHABET_SIZE, self.len);
        if self.rows.is_empty() {
            return out;
        }
        let w = T::one() / T::lit(self.rows.len() as f64);
        for row in &self.rows {
            for (c, aa) in row.iter().enumerate() {
                let r = aa.index();
                out.set(r, c, out.get(r, c) + w);
            }
        }
        out
    }

    /// Columns `[start, end)` of every row.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            len: end - start,
            rows: self.rows.iter().map(|r| r[start..end].to_vec()).collect(),
        }
    }

    /// Rows as text, gaps written as `-`.
    pub fn to_text_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|aa| if aa.is_standard() { aa.letter() } else { '-' })
                    .collect()
            })
            .collect()
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<Vec<AminoAcid>, SeqError> {
    line.chars()
        .map(|c| match c {
            '-' => Ok(AminoAcid::Unknown),
            c => AminoAcid::from_letter(c).ok_or(SeqError::IllegalResidue {
                line: line_no,
                letter: c,
            }),
        })
        .collect()
}

/// Parses a plain aligned-rows file (one row per line, `-` for gaps). The first
/// row must equal the query; empty text yields a one-row alignment of the query.
pub fn parse_msa(text: &str, query: &ProteinRecord) -> Result<MsaEmbedding, SeqError> {
    let l = query.len();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let row = parse_row(line, line_no)?;
        if row.len() != l {
            return Err(SeqError::MsaRowLength {
                line: line_no,
                found: row.len(),
                expected: l,
            });
        }
        if rows.is_empty() && row != query.residues() {
            return Err(SeqError::MsaQueryMismatch { line: line_no });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        rows.push(query.residues().to_vec());
    }
    Ok(MsaEmbedding { len: l, rows })
}
