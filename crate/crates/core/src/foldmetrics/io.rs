use std::fmt::Write;

use crate::scalar::Scalar;
use crate::seqcore::AminoAcid;

use super::{FoldError, Structure};

/// Parses `index,x,y,z` rows (header optional). Indices must be 0-based and contiguous.
pub fn read_structure_csv<T: Scalar>(text: &str) -> Result<Structure<T>, FoldError> {
    let mut coords = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if coords.is_empty() && fields.first().is_some_and(|f| f.eq_ignore_ascii_case("index")) {
            continue;
        }
        if fields.len() != 4 {
            return Err(FoldError::Parse {
                line: line_no,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let index: usize = fields[0].parse().map_err(|_| FoldError::Parse {
            line: line_no,
            reason: format!("bad index '{}'", fields[0]),
        })?;
        if index != coords.len() {
            return Err(FoldError::Parse {
                line: line_no,
                reason: format!("index {index} out of order, expected {}", coords.len()),
            });
        }
        let mut p = [T::zero(); 3];
        for k in 0..3 {
            let v: f64 = fields[k + 1].parse().map_err(|_| FoldError::Parse {
                line: line_no,
                reason: format!("bad coordinate '{}'", fields[k + 1]),
            })?;
            p[k] = T::lit(v);
        }
        coords.push(p);
    }
    Structure::new(coords)
}

pub fn structure_to_csv<T: Scalar>(s: &Structure<T>) -> String {
    let mut out = String::from("index,x,y,z\n");
    for (i, p) in s.coords().iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i, p[0].as_f64(), p[1].as_f64(), p[2].as_f64());
    }
    out
}

fn three_letter(aa: AminoAcid) -> &'static str {
    const NAMES: [&str; 21] = [
        "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
        "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "UNK",
    ];
    NAMES[aa.index()]
}

/// Minimal PDB text with one CA `ATOM` record per residue, chain A.
pub fn structure_to_pdb<T: Scalar>(s: &Structure<T>, residues: Option<&[AminoAcid]>) -> String {
    let mut out = String::new();
    for (i, p) in s.coords().iter().enumerate() {
        let name = residues
            .and_then(|r| r.get(i).copied())
            .map_or("UNK", three_letter);
        let _ = writeln!(
            out,
            "ATOM  {:>5}  CA  {} A{:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C",
            i + 1,
            name,
            i + 1,
            p[0].as_f64(),
            p[1].as_f64(),
            p[2].as_f64()
        );
    }
    out.push_str("END\n");
    out
}
