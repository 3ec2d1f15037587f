//! Amino-acid exchangeability from substitution explanations, and its
//! correlation with external indicator matrices.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfengine::{Edit, ExplanationReport};
use crate::seqcore::{AminoAcid, ProteinRecord, STANDARD_COUNT};

const N: usize = STANDARD_COUNT;

/// Offset added to distances before taking reciprocals.
pub const DISTANCE_EPS: f64 = 1e-6;

static CONSERVATIVE_COUNTS: &str = include_str!("../../data/conservative_counts.csv");
static RADICAL_COUNTS: &str = include_str!("../../data/radical_counts.csv");
static RESIDUE_TOTALS: &str = include_str!("../../data/residue_totals.csv");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExchangeError {
    #[error("line {line}, column {column}: {reason}")]
    Cell {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("matrix layout: {0}")]
    Layout(String),
    #[error("report for '{protein}' is a {mode} explanation, not a substitution")]
    NotSubstitution { protein: String, mode: String },
    #[error("report for '{0}' has no matching record")]
    MissingRecord(String),
    #[error("residue '{0}' occurs in a substitution but has a zero total")]
    ZeroTotal(char),
    #[error("correlation needs at least 3 paired values, got {0}")]
    TooFewPairs(usize),
    #[error("paired lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation is undefined for a constant input")]
    ConstantInput,
}

pub type Counts = [[u64; N]; N];
pub type Matrix = [[Option<f64>; N]; N];

/// Substitution counts `X -> Y` and per-residue totals, in standard order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionStats {
    pub counts: Counts,
    pub totals: [u64; N],
}

impl SubstitutionStats {
    pub fn zero() -> Self {
        Self {
            counts: [[0; N]; N],
            totals: [0; N],
        }
    }

    pub fn count(&self, from: AminoAcid, to: AminoAcid) -> u64 {
        self.counts[from.index()][to.index()]
    }

    pub fn total(&self, aa: AminoAcid) -> u64 {
        self.totals[aa.index()]
    }
}

/// Which side of the substitution data a matrix was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExchangeMode {
    /// `|X -> Y| / |X|`
    Conservative,
    /// `|X| / |X -> Y|`, absent where the count is zero.
    Radical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeabilityMatrix {
    pub mode: ExchangeMode,
    /// Diagonal always `None`.
    pub values: Matrix,
}

impl ExchangeabilityMatrix {
    pub fn get(&self, from: AminoAcid, to: AminoAcid) -> Option<f64> {
        self.values[from.index()][to.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorKind {
    Distance,
    Exchangeability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    pub name: String,
    pub kind: IndicatorKind,
    pub values: Matrix,
}

/// How distances become exchangeabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inversion {
    /// `1 / (d + eps)`
    #[default]
    Reciprocal,
    /// `-d`
    Negate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Every ordered pair `(X, Y)`, `X != Y`.
    #[default]
    Ordered,
    /// Unordered pairs, each value the mean of the defined directions.
    Symmetrized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorrelationOptions {
    pub inversion: Inversion,
    pub pairing: Pairing,
}

/// Counts every `X -> Y` substitution in `reports` and totals the standard
/// residues of `records`.
pub fn accumulate_stats(
    reports: &[ExplanationReport],
    records: &[ProteinRecord],
) -> Result<SubstitutionStats, ExchangeError> {
    let mut stats = SubstitutionStats::zero();
    for report in reports {
        if report.mode.is_deletion() {
            return Err(ExchangeError::NotSubstitution {
                protein: report.protein_id.clone(),
                mode: report.mode.to_string(),
            });
        }
        for e in &report.explanation {
            if let Edit::Substituted { to } = e.edit {
                let (Some(from), Some(to)) = (AminoAcid::from_letter(e.original), AminoAcid::from_letter(to)) else {
                    continue;
                };
                if from.is_standard() && to.is_standard() && from != to {
                    stats.counts[from.index()][to.index()] += 1;
                }
            }
        }
    }
    for r in records {
        for aa in r.residues().iter().filter(|a| a.is_standard()) {
            stats.totals[aa.index()] += 1;
        }
    }
    Ok(stats)
}

pub fn exchangeability(stats: &SubstitutionStats, mode: ExchangeMode) -> Result<ExchangeabilityMatrix, ExchangeError> {
    let mut values = [[None; N]; N];
    for x in 0..N {
        let total = stats.totals[x];
        let used = (0..N).any(|y| y != x && stats.counts[x][y] > 0);
        if total == 0 && used {
            return Err(ExchangeError::ZeroTotal(AminoAcid::STANDARD[x].letter()));
        }
        for y in (0..N).filter(|&y| y != x) {
            let c = stats.counts[x][y];
            values[x][y] = match mode {
                ExchangeMode::Conservative if total > 0 => Some(c as f64 / total as f64),
                ExchangeMode::Radical if c > 0 => Some(total as f64 / c as f64),
                _ => None,
            };
        }
    }
    Ok(ExchangeabilityMatrix { mode, values })
}

fn header_line() -> String {
    let mut s = String::new();
    for aa in AminoAcid::STANDARD {
        s.push(',');
        s.push(aa.letter());
    }
    s
}

/// Splits a 21 x 21 letter-labelled CSV into its 20 x 20 cell strings.
fn parse_cells(text: &str) -> Result<Vec<Vec<String>>, ExchangeError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| ExchangeError::Layout("empty matrix file".into()))?;
    if header.trim() != header_line() {
        return Err(ExchangeError::Layout(format!(
            "header must be '{}'",
            header_line()
        )));
    }
    let mut rows = Vec::with_capacity(N);
    for (k, (i, line)) in lines.enumerate() {
        let line_no = i + 1;
        if k >= N {
            return Err(ExchangeError::Layout(format!("line {line_no}: more than {N} rows")));
        }
        let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        let expected = AminoAcid::STANDARD[k].letter();
        if fields[0].trim() != expected.to_string() {
            return Err(ExchangeError::Cell {
                line: line_no,
                column: 1,
                reason: format!("row label must be '{expected}'"),
            });
        }
        if fields.len() != N + 1 {
            return Err(ExchangeError::Layout(format!(
                "line {line_no}: {} cells, expected {}",
                fields.len(),
                N + 1
            )));
        }
        rows.push(fields[1..].iter().map(|f| f.trim().to_string()).collect());
    }
    if rows.len() != N {
        return Err(ExchangeError::Layout(format!("{} rows, expected {N}", rows.len())));
    }
    Ok(rows)
}

fn cell_error(row: usize, col: usize, reason: String) -> ExchangeError {
    // +2: header line and 1-based numbering; +2: label column and 1-based.
    ExchangeError::Cell {
        line: row + 2,
        column: col + 2,
        reason,
    }
}

/// Reads a real-valued matrix; empty cells are absent.
pub fn parse_matrix_csv(text: &str) -> Result<Matrix, ExchangeError> {
    let cells = parse_cells(text)?;
    let mut m = [[None; N]; N];
    for (r, row) in cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| cell_error(r, c, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(cell_error(r, c, format!("'{cell}' is not finite")));
            }
            m[r][c] = Some(v);
        }
    }
    Ok(m)
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut s = header_line();
    s.push('\n');
    for (r, row) in m.iter().enumerate() {
        s.push(AminoAcid::STANDARD[r].letter());
        for v in row {
            s.push(',');
            if let Some(v) = v {
                let _ = write!(s, "{v}");
            }
        }
        s.push('\n');
    }
    s
}

pub fn parse_counts_csv(text: &str) -> Result<Counts, ExchangeError> {
    let cells = parse_cells(text)?;
    let mut m = [[0; N]; N];
    for (r, row) in cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            m[r][c] = cell
                .parse()
                .map_err(|_| cell_error(r, c, format!("'{cell}' is not a count")))?;
        }
    }
    Ok(m)
}

pub fn counts_to_csv(m: &Counts) -> String {
    let mut s = header_line();
    s.push('\n');
    for (r, row) in m.iter().enumerate() {
        s.push(AminoAcid::STANDARD[r].letter());
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_totals_csv(text: &str) -> Result<[u64; N], ExchangeError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "amino_acid,total" => {}
        _ => return Err(ExchangeError::Layout("header must be 'amino_acid,total'".into())),
    }
    let mut totals = [0; N];
    let mut seen = 0;
    for (k, (i, line)) in lines.enumerate() {
        let bad = |column: usize, reason: String| ExchangeError::Cell {
            line: i + 1,
            column,
            reason,
        };
        let Some((label, value)) = line.trim().split_once(',') else {
            return Err(bad(1, "expected 'letter,total'".into()));
        };
        let expected = AminoAcid::STANDARD.get(k).map(|a| a.letter());
        if Some(label.chars().next().unwrap_or(' ')) != expected || label.len() != 1 {
            return Err(bad(1, format!("unexpected label '{label}'")));
        }
        totals[k] = value
            .parse()
            .map_err(|_| bad(2, format!("'{value}' is not a count")))?;
        seen += 1;
    }
    if seen != N {
        return Err(ExchangeError::Layout(format!("{seen} totals, expected {N}")));
    }
    Ok(totals)
}

pub fn totals_to_csv(totals: &[u64; N]) -> String {
    let mut s = String::from("amino_acid,total\n");
    for (aa, t) in AminoAcid::STANDARD.iter().zip(totals) {
        let _ = writeln!(s, "{},{t}", aa.letter());
    }
    s
}

/// Aggregate substitution statistics shipped with the crate: per-residue
/// totals and the conservative and radical substitution counts of a
/// published benchmark run.
pub mod builtin {
    use super::*;

    pub fn conservative_counts_csv() -> &'static str {
        CONSERVATIVE_COUNTS
    }

    pub fn radical_counts_csv() -> &'static str {
        RADICAL_COUNTS
    }

    pub fn totals_csv() -> &'static str {
        RESIDUE_TOTALS
    }

    pub fn stats(mode: ExchangeMode) -> SubstitutionStats {
        let counts = match mode {
            ExchangeMode::Conservative => CONSERVATIVE_COUNTS,
            ExchangeMode::Radical => RADICAL_COUNTS,
        };
        SubstitutionStats {
            counts: parse_counts_csv(counts).expect("bundled counts parse"),
            totals: parse_totals_csv(RESIDUE_TOTALS).expect("bundled totals parse"),
        }
    }
}

/// Sample Pearson correlation.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, ExchangeError> {
    if x.len() != y.len() {
        return Err(ExchangeError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(ExchangeError::TooFewPairs(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ExchangeError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn indicator_as_exchangeability(ind: &IndicatorMatrix, inversion: Inversion) -> Matrix {
    let mut m = ind.values;
    if ind.kind == IndicatorKind::Distance {
        for v in m.iter_mut().flatten() {
            *v = v.map(|d| match inversion {
                Inversion::Reciprocal => 1.0 / (d + DISTANCE_EPS),
                Inversion::Negate => -d,
            });
        }
    }
    m
}

fn symmetrize(m: &Matrix, x: usize, y: usize) -> Option<f64> {
    match (m[x][y], m[y][x]) {
        (Some(a), Some(b)) => Some(0.5 * (a + b)),
        (a, b) => a.or(b),
    }
}

/// Paired off-diagonal values defined in both matrices.
pub fn paired_values(
    ex: &ExchangeabilityMatrix,
    ind: &IndicatorMatrix,
    options: CorrelationOptions,
) -> (Vec<f64>, Vec<f64>) {
    let other = indicator_as_exchangeability(ind, options.inversion);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for x in 0..N {
        for y in 0..N {
            let pair = match options.pairing {
                Pairing::Ordered if x != y => (ex.values[x][y], other[x][y]),
                Pairing::Symmetrized if x < y => (symmetrize(&ex.values, x, y), symmetrize(&other, x, y)),
                _ => continue,
            };
            if let (Some(a), Some(b)) = pair {
                xs.push(a);
                ys.push(b);
            }
        }
    }
    (xs, ys)
}

pub fn correlate_with_indicator(
    ex: &ExchangeabilityMatrix,
    ind: &IndicatorMatrix,
    options: CorrelationOptions,
) -> Result<f64, ExchangeError> {
    let (xs, ys) = paired_values(ex, ind, options);
    pearson_correlation(&xs, &ys)
}
