use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use foldcf::cfengine::{explain_record, trace_to_csv, CfConfig, ExplanationReport, ObjectiveMode};
use foldcf::predictor::{RecordMsaRefresh, StructurePredictor, ToySurrogate};
use foldcf::seqcore::ProteinRecord;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::io::{self, file_stem, INCOMPLETE_SUFFIX, REPORT_SUFFIX, TRACE_SUFFIX};
use crate::{ExplainArgs, PredictorKind};

pub fn run(args: &ExplainArgs) -> CliResult<()> {
    if args.predictor == PredictorKind::External {
        return Err(CliError::user(
            "external predictor is forward-only; optimisation needs the surrogate (use it with `evaluate`)",
        ));
    }
    let cfg = args.config();
    cfg.validate().map_err(CliError::user)?;
    let records = io::load_records(&args.input)?;
    let out = &args.out.out;
    io::ensure_dir(&out.join("logs"))?;
    let surrogate = ToySurrogate::<f64>::with_seed(args.seed);

    let pool = crate::thread_pool(args.jobs)?;
    let outcomes: Vec<(String, Result<ExplanationReport, String>)> = pool.install(|| {
        records
            .par_iter()
            .map(|r| (r.id().to_string(), explain_one(r, &surrogate, args.mode, &cfg, out)))
            .collect()
    });

    let mut failed = 0;
    for (id, outcome) in &outcomes {
        match outcome {
            Ok(r) => println!(
                "{id}\tsize={}\tcomplexity={:.4}\ttm={:.4}\tfeasible={}",
                r.explanation_size, r.complexity, r.final_tm, r.feasible
            ),
            Err(e) => {
                failed += 1;
                eprintln!("{id}: {e}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::user(format!("{failed} of {} records failed", outcomes.len())));
    }
    Ok(())
}

/// Explains one record and writes its report, trace and log. On failure the
/// report is replaced by an `.incomplete` marker holding the error.
fn explain_one(
    record: &ProteinRecord,
    surrogate: &ToySurrogate<f64>,
    mode: ObjectiveMode,
    cfg: &CfConfig,
    out: &Path,
) -> Result<ExplanationReport, String> {
    let stem = format!("{}.{mode}", file_stem(record.id()));
    let report_path = out.join(format!("{stem}{REPORT_SUFFIX}"));
    let incomplete = out.join(format!("{stem}{INCOMPLETE_SUFFIX}"));
    let mut log = String::new();
    let _ = writeln!(log, "record {} length {}", record.id(), record.len());
    let _ = writeln!(log, "mode {mode} predictor {}", surrogate.describe());
    let _ = writeln!(log, "config {}", serde_json::to_string(cfg).unwrap_or_default());

    let result = explain_record(record, surrogate, &RecordMsaRefresh, mode, cfg)
        .map_err(|e| e.to_string())
        .and_then(|report| {
            io::write_atomic(&report_path, &report.to_json()).map_err(|e| e.to_string())?;
            io::write_atomic(&out.join(format!("{stem}{TRACE_SUFFIX}")), &trace_to_csv(&report.trace))
                .map_err(|e| e.to_string())?;
            Ok(report)
        });
    match &result {
        Ok(r) => {
            for c in &r.chunks {
                let _ = writeln!(
                    log,
                    "chunk {} [{}, {}) size {} tm {:.6} feasible {}",
                    c.id, c.start, c.end, c.explanation_size, c.final_tm, c.feasible
                );
            }
            let _ = writeln!(log, "done size {} tm {:.6} feasible {}", r.explanation_size, r.final_tm, r.feasible);
            let _ = fs::remove_file(&incomplete);
        }
        Err(e) => {
            let _ = writeln!(log, "failed: {e}");
            let _ = fs::remove_file(&report_path);
            let _ = fs::write(&incomplete, format!("{e}\n"));
        }
    }
    let _ = fs::write(out.join("logs").join(format!("{stem}.log")), log);
    result
}
