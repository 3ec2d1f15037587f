//! Structure comparison: Kabsch superposition and TM-score, plain and on the tape.

mod io;
mod kabsch;
mod structure;
mod tm;

use thiserror::Error;

use crate::gradkit::GradError;

pub use io::{read_structure_csv, structure_to_csv, structure_to_pdb};
pub use kabsch::{kabsch_superpose, kabsch_superpose_subset, Superposition};
pub use structure::Structure;
pub use tm::{d0, tm_score, tm_score_detailed, tm_score_var, tm_with_superposition, TmAlignment};

/// Lower clamp on the TM-score distance scale.
pub const D0_MIN: f64 = 0.5;

/// Residues closer than this multiple of `d0` join the refinement subset.
pub const REFINE_CUTOFF: f64 = 8.0;

/// Maximum number of refinement rounds after the all-residue fit.
pub const REFINE_ROUNDS: usize = 3;

/// Smallest subset the refinement will fit on.
pub const REFINE_MIN_RESIDUES: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoldError {
    #[error("structure lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("structure has no residues")]
    Empty,
    #[error("structure has a non-finite coordinate at residue {index}")]
    NonFinite { index: usize },
    #[error("coordinate tensor must be 3 x l, got {rows} x {cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Grad(#[from] GradError),
}
