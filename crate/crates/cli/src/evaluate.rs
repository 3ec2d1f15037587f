use std::collections::HashMap;
use std::fmt::Write as _;

use foldcf::cfengine::ObjectiveMode;
use foldcf::evalkit::{
    baseline_evolutionary, baseline_random, evaluate_record, summarize, summary_table_csv, Criterion,
    EvaluationRecord, PN_BASELINE_FRACTION, PS_BASELINE_FRACTION,
};
use foldcf::predictor::{ExternalConfig, ExternalPredictor, RecordMsaRefresh, StructurePredictor, ToySurrogate};
use foldcf::seqcore::ProteinRecord;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::io::{self, file_stem};
use crate::{BaselineKind, CriterionArg, EvaluateArgs, PredictorKind};

/// One scored (method, protein) pair, or the reason it could not be scored.
type Row = (String, String, Result<EvaluationRecord, String>);

/// A method's explanation for one record, or why it has none.
type Explanation = Result<Vec<usize>, String>;
type Explanations = Vec<Explanation>;

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let criterion = match args.criterion {
        CriterionArg::Pn => Criterion::Pn,
        CriterionArg::Ps => Criterion::Ps,
    };
    let fraction = args.fraction.unwrap_or(match criterion {
        Criterion::Pn => PN_BASELINE_FRACTION,
        Criterion::Ps => PS_BASELINE_FRACTION,
    });
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::user(format!("--fraction {fraction} is outside [0, 1]")));
    }
    if args.reports.is_none() && args.baseline.is_empty() {
        return Err(CliError::user("nothing to evaluate: pass --reports and/or --baseline"));
    }
    let external = match args.predictor {
        PredictorKind::Surrogate => None,
        PredictorKind::External => Some(ExternalConfig {
            command: args
                .external
                .external_command
                .clone()
                .ok_or_else(|| CliError::user("--predictor external needs --external-command"))?,
            timeout_secs: args.external.timeout,
        }),
    };
    let records = io::load_records(&args.input)?;
    let out = &args.out.out;
    io::ensure_dir(out)?;

    let mut methods: Vec<(String, Explanations)> = Vec::new();
    if let Some(dir) = &args.reports {
        let wanted = args.report_mode.unwrap_or(match criterion {
            Criterion::Pn => ObjectiveMode::DeletionNecessary,
            Criterion::Ps => ObjectiveMode::DeletionSufficient,
        });
        let by_id: HashMap<String, Vec<usize>> = io::load_reports(dir)?
            .into_iter()
            .filter(|r| r.mode == wanted)
            .map(|r| (r.protein_id.clone(), r.positions()))
            .collect();
        let explanations = records
            .iter()
            .map(|r| {
                by_id
                    .get(r.id())
                    .cloned()
                    .ok_or_else(|| CliError::user(format!("no {wanted} report for '{}' in {}", r.id(), dir.display())))
            })
            .collect::<CliResult<Vec<_>>>()?;
        methods.push(("ours".into(), explanations.into_iter().map(Ok).collect()));
    }
    let mut baselines = args.baseline.clone();
    baselines.sort();
    baselines.dedup();
    for b in baselines {
        let (name, e): (&str, Vec<_>) = match b {
            BaselineKind::Random => (
                "random",
                records
                    .iter()
                    .map(|r| baseline_random(r, fraction, args.seed).map_err(|e| e.to_string()))
                    .collect(),
            ),
            BaselineKind::Evolutionary => (
                "evolutionary",
                records
                    .iter()
                    .map(|r| baseline_evolutionary(r, fraction).map_err(|e| e.to_string()))
                    .collect(),
            ),
        };
        methods.push((name.into(), e));
    }

    let surrogate = ToySurrogate::<f64>::with_seed(args.surrogate_seed);
    let jobs: Vec<(&str, &ProteinRecord, &Explanation)> = methods
        .iter()
        .flat_map(|(m, es)| records.iter().zip(es).map(move |(r, e)| (m.as_str(), r, e)))
        .collect();
    let pool = crate::thread_pool(args.jobs)?;
    let rows: Vec<Row> = pool.install(|| {
        jobs.par_iter()
            .map(|&(method, record, explanation)| {
                let scored = explanation.clone().and_then(|e| {
                    let outcome = match &external {
                        None => evaluate_record(criterion, method, record, &e, &surrogate, &RecordMsaRefresh),
                        Some(cfg) => {
                            let dir = out.join("external").join(method).join(file_stem(record.id()));
                            let p = ExternalPredictor::new(cfg.clone(), dir).with_id(record.id());
                            evaluate_record(criterion, method, record, &e, &p as &dyn StructurePredictor<f64>, &RecordMsaRefresh)
                        }
                    };
                    outcome.map_err(|e| e.to_string())
                });
                (method.to_string(), record.id().to_string(), scored)
            })
            .collect()
    });

    let name = criterion.name().to_ascii_lowercase();
    io::write_atomic(&out.join(format!("{name}_records.csv")), &rows_csv(criterion, &rows))?;
    let mut summaries = Vec::new();
    for (method, _) in &methods {
        let ok: Vec<EvaluationRecord> = rows
            .iter()
            .filter(|(m, _, _)| m == method)
            .filter_map(|(_, _, r)| r.as_ref().ok().cloned())
            .collect();
        for (_, id, r) in rows.iter().filter(|(m, _, _)| m == method) {
            if let Err(e) = r {
                eprintln!("{method}/{id}: {e}");
            }
        }
        match summarize(method, criterion, &ok) {
            Ok(s) => summaries.push(s),
            Err(_) => eprintln!("{method}: no record could be scored"),
        }
    }
    let table = summary_table_csv(&summaries);
    io::write_atomic(&out.join(format!("{name}_summary.csv")), &table)?;
    print!("{table}");
    Ok(())
}

fn rows_csv(criterion: Criterion, rows: &[Row]) -> String {
    let mut s = format!(
        "method,protein_id,length,explanation_size,complexity,tm,{},error\n",
        criterion.name()
    );
    for (method, id, r) in rows {
        match r {
            Ok(e) => {
                let _ = writeln!(
                    s,
                    "{method},{id},{},{},{},{},{},",
                    e.length, e.explanation_size, e.complexity, e.tm, u8::from(e.indicator)
                );
            }
            Err(err) => {
                let _ = writeln!(s, "{method},{id},,,,,,\"{}\"", err.replace('"', "'"));
            }
        }
    }
    s
}
