use std::fs;
use std::path::{Path, PathBuf};

use foldcf::cfengine::ExplanationReport;
use foldcf::seqcore::{parse_fasta, parse_msa, ProteinRecord};

use crate::error::{CliError, CliResult};
use crate::InputArgs;

pub const REPORT_SUFFIX: &str = ".report.json";
pub const TRACE_SUFFIX: &str = ".trace.csv";
pub const INCOMPLETE_SUFFIX: &str = ".incomplete";
const MSA_EXTENSIONS: [&str; 3] = ["a3m", "aln", "msa"];

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))
}

/// File-name-safe form of a protein id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn find_msa(dir: &Path, id: &str) -> Option<PathBuf> {
    let stem = file_stem(id);
    MSA_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

/// Records from a FASTA file, with alignments attached from `msa_dir` when a
/// `<id>.a3m`, `<id>.aln` or `<id>.msa` file exists there. With the length
/// filter on, short records are dropped first.
pub fn load_records(input: &InputArgs) -> CliResult<Vec<ProteinRecord>> {
    let fasta = input.fasta.as_path();
    let mut records = parse_fasta(&read_text(fasta)?)
        .map_err(|e| CliError::user(format!("{}: {e}", fasta.display())))?;
    if input.length_filter {
        records.retain(|r| {
            let keep = r.passes_length_filter();
            if !keep {
                eprintln!("skipping '{}': {} resolved residues", r.id(), r.resolved_len());
            }
            keep
        });
    }
    if records.is_empty() {
        return Err(CliError::user(format!("{}: no records to process", fasta.display())));
    }
    let msa_dir = input.msa_dir.as_deref();
    let Some(dir) = msa_dir else {
        return Ok(records);
    };
    if !dir.is_dir() {
        return Err(CliError::user(format!("{}: not a directory", dir.display())));
    }
    records
        .into_iter()
        .map(|r| match find_msa(dir, r.id()) {
            None => Ok(r),
            Some(path) => {
                let msa = parse_msa(&read_text(&path)?, &r)
                    .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
                r.with_msa(msa).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
            }
        })
        .collect()
}

/// Every `*.report.json` in `dir`, sorted by file name.
pub fn load_reports(dir: &Path) -> CliResult<Vec<ExplanationReport>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::user(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(REPORT_SUFFIX)))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            ExplanationReport::from_json(&read_text(p)?)
                .map_err(|e| CliError::user(format!("{}: {e}", p.display())))
        })
        .collect()
}
