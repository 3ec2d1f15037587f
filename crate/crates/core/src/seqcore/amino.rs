use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of rows in a residue embedding: 20 standard amino acids plus Unknown.
pub const ALPHABET_SIZE: usize = 21;

/// Number of standard amino acids.
pub const STANDARD_COUNT: usize = 20;

/// Row index of the Unknown residue.
pub const UNKNOWN_INDEX: usize = 20;

/// One residue type. The discriminant is the embedding row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum AminoAcid {
    A = 0,
    R,
    N,
    D,
    C,
    Q,
    E,
    G,
    H,
    I,
    L,
    K,
    M,
    F,
    P,
    S,
    T,
    W,
    Y,
    V,
    Unknown,
}

const LETTERS: [u8; STANDARD_COUNT] = *b"ARNDCQEGHILKMFPSTWYV";

impl AminoAcid {
    /// The 20 standard residues in embedding order.
    pub const STANDARD: [AminoAcid; STANDARD_COUNT] = [
        AminoAcid::A,
        AminoAcid::R,
        AminoAcid::N,
        AminoAcid::D,
        AminoAcid::C,
        AminoAcid::Q,
        AminoAcid::E,
        AminoAcid::G,
        AminoAcid::H,
        AminoAcid::I,
        AminoAcid::L,
        AminoAcid::K,
        AminoAcid::M,
        AminoAcid::F,
        AminoAcid::P,
        AminoAcid::S,
        AminoAcid::T,
        AminoAcid::W,
        AminoAcid::Y,
        AminoAcid::V,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            i if i < STANDARD_COUNT => Some(Self::STANDARD[i]),
            UNKNOWN_INDEX => Some(AminoAcid::Unknown),
            _ => None,
        }
    }

    /// Parses a sequence letter. `X` (either case) is Unknown; gaps are not accepted here.
    pub fn from_letter(letter: char) -> Option<Self> {
        let upper = letter.to_ascii_uppercase();
        if upper == 'X' {
            return Some(AminoAcid::Unknown);
        }
        LETTERS
            .iter()
            .position(|&b| b as char == upper)
            .map(|i| Self::STANDARD[i])
    }

    /// Sequence letter; Unknown renders as `X`.
    pub fn letter(self) -> char {
        match self {
            AminoAcid::Unknown => 'X',
            aa => LETTERS[aa.index()] as char,
        }
    }

    pub fn is_standard(self) -> bool {
        self != AminoAcid::Unknown
    }
}

impl fmt::Display for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Renders residues as a letter string (Unknown as `X`).
pub fn residues_to_string(residues: &[AminoAcid]) -> String {
    residues.iter().map(|aa| aa.letter()).collect()
}
