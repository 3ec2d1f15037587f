use std::collections::BTreeMap;
use std::fmt::Write as _;

use foldcf::cfengine::{ExplanationReport, ObjectiveMode};
use foldcf::exchange::{
    accumulate_stats, builtin, correlate_with_indicator, counts_to_csv, exchangeability, matrix_to_csv,
    paired_values, parse_matrix_csv, totals_to_csv, CorrelationOptions, ExchangeMode, IndicatorMatrix,
    SubstitutionStats,
};
use foldcf::seqcore::ProteinRecord;

use crate::error::{CliError, CliResult};
use crate::io;
use crate::ExchangeArgs;

fn mode_name(mode: ExchangeMode) -> &'static str {
    match mode {
        ExchangeMode::Conservative => "conservative",
        ExchangeMode::Radical => "radical",
    }
}

/// Stats per exchange mode from a directory of substitution reports.
fn stats_from_reports(reports: &[ExplanationReport]) -> CliResult<Vec<(ExchangeMode, SubstitutionStats)>> {
    // One record per protein, whichever mode its reports came from.
    let mut proteins: BTreeMap<&str, &str> = BTreeMap::new();
    for r in reports {
        if r.mode.is_deletion() {
            eprintln!("skipping {} report for '{}'", r.mode, r.protein_id);
            continue;
        }
        proteins.entry(&r.protein_id).or_insert(&r.sequence);
    }
    let records = proteins
        .iter()
        .map(|(id, seq)| ProteinRecord::from_letters(*id, seq))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::user)?;
    let mut out = Vec::new();
    for (mode, wanted) in [
        (ExchangeMode::Conservative, ObjectiveMode::SubstitutionConservative),
        (ExchangeMode::Radical, ObjectiveMode::SubstitutionRadical),
    ] {
        let subset: Vec<ExplanationReport> = reports.iter().filter(|r| r.mode == wanted).cloned().collect();
        if subset.is_empty() {
            eprintln!("no {wanted} reports; skipping the {} matrix", mode_name(mode));
            continue;
        }
        out.push((mode, accumulate_stats(&subset, &records).map_err(CliError::user)?));
    }
    if out.is_empty() {
        return Err(CliError::user("no substitution reports found"));
    }
    Ok(out)
}

pub fn run(args: &ExchangeArgs) -> CliResult<()> {
    let stats = match (&args.reports, args.fixture) {
        (Some(dir), _) => stats_from_reports(&io::load_reports(dir)?)?,
        (None, Some(_)) => vec![
            (ExchangeMode::Conservative, builtin::stats(ExchangeMode::Conservative)),
            (ExchangeMode::Radical, builtin::stats(ExchangeMode::Radical)),
        ],
        (None, None) => {
            return Err(CliError::user("pass --reports <dir> or --fixture builtin"));
        }
    };
    let indicators = args
        .indicator
        .iter()
        .map(|path| {
            let values = parse_matrix_csv(&io::read_text(path)?)
                .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("indicator").to_string();
            Ok(IndicatorMatrix { name, kind: args.indicator_kind.into(), values })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let out = &args.out.out;
    io::ensure_dir(out)?;
    io::write_atomic(&out.join("residue_totals.csv"), &totals_to_csv(&stats[0].1.totals))?;
    let options = CorrelationOptions {
        inversion: args.inversion.into(),
        pairing: args.pairing.into(),
    };
    let mut table = String::from("indicator,matrix,pairs,pearson\n");
    for (mode, s) in &stats {
        let name = mode_name(*mode);
        io::write_atomic(&out.join(format!("{name}_counts.csv")), &counts_to_csv(&s.counts))?;
        let ex = exchangeability(s, *mode).map_err(CliError::user)?;
        io::write_atomic(&out.join(format!("{name}_exchangeability.csv")), &matrix_to_csv(&ex.values))?;
        for ind in &indicators {
            let pairs = paired_values(&ex, ind, options).0.len();
            let r = correlate_with_indicator(&ex, ind, options)
                .map(|r| r.to_string())
                .unwrap_or_else(|e| {
                    eprintln!("{} vs {name}: {e}", ind.name);
                    String::new()
                });
            let _ = writeln!(table, "{},{name},{pairs},{r}", ind.name);
        }
    }
    if !indicators.is_empty() {
        io::write_atomic(&out.join("correlations.csv"), &table)?;
        print!("{table}");
    }
    Ok(())
}
