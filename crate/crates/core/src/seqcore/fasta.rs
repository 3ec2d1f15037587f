use std::collections::HashSet;

use super::{AminoAcid, ProteinRecord, SeqError};

const LINE_WIDTH: usize = 60;

/// Parses FASTA text. Letters are restricted to the 20 standard codes plus `X`;
/// errors carry 1-based line numbers.
pub fn parse_fasta(text: &str) -> Result<Vec<ProteinRecord>, SeqError> {
    struct Pending {
        id: String,
        line: usize,
        residues: Vec<AminoAcid>,
    }

    fn finish(p: Pending, out: &mut Vec<ProteinRecord>) -> Result<(), SeqError> {
        if p.residues.is_empty() {
            return Err(SeqError::EmptySequence {
                line: p.line,
                id: p.id,
            });
        }
        out.push(ProteinRecord::new(p.id, p.residues)?);
        Ok(())
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<Pending> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some(p) = current.take() {
                finish(p, &mut out)?;
            }
            let id = header.split_whitespace().next().ok_or_else(|| SeqError::MalformedHeader {
                line: line_no,
                reason: "missing identifier".into(),
            })?;
            if !seen.insert(id.to_string()) {
                return Err(SeqError::DuplicateId {
                    line: line_no,
                    id: id.to_string(),
                });
            }
            current = Some(Pending {
                id: id.to_string(),
                line: line_no,
                residues: Vec::new(),
            });
            continue;
        }
        let pending = current
            .as_mut()
            .ok_or(SeqError::MissingHeader { line: line_no })?;
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            let aa = AminoAcid::from_letter(c).ok_or(SeqError::IllegalResidue {
                line: line_no,
                letter: c,
            })?;
            pending.residues.push(aa);
        }
    }
    if let Some(p) = current.take() {
        finish(p, &mut out)?;
    }
    Ok(out)
}

/// Serializes records as FASTA with 60-column sequence lines.
pub fn write_fasta(records: &[ProteinRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push('>');
        out.push_str(rec.id());
        out.push('\n');
        let letters = rec.letters();
        for chunk in letters.as_bytes().chunks(LINE_WIDTH) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii letters"));
            out.push('\n');
        }
    }
    out
}
