use foldcf::cfengine::{
    explain_record, optimize, CfConfig, Edit, ExplanationReport, ObjectiveMode, DELETION_INIT_LOGIT,
};
use foldcf::evalkit::{baseline_random, evaluate_record, Criterion};
use foldcf::exchange::{accumulate_stats, exchangeability, ExchangeMode};
use foldcf::foldmetrics::tm_score;
use foldcf::predictor::{ContextProvider, StructurePredictor, SurrogateRefresh, ToySurrogate};
use foldcf::seqcore::{encode_onehot, AminoAcid, ProteinRecord, SequenceEmbedding};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(seed: u64, l: usize) -> ProteinRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let residues = (0..l).map(|_| AminoAcid::STANDARD[rng.random_range(0..20)]).collect();
    ProteinRecord::new(format!("r{seed}"), residues).unwrap()
}

/// TM of the report's counterfactual sequence against the original, with the
/// context refreshed on the hard embedding.
fn recomputed_tm(surrogate: &ToySurrogate<f64>, rec: &ProteinRecord, report: &ExplanationReport) -> f64 {
    let predict = |residues: &[AminoAcid]| {
        let e: SequenceEmbedding<f64> = SequenceEmbedding::from_residues(residues);
        let msa = SurrogateRefresh.refresh(rec, &e);
        surrogate.predict(&e, &msa).unwrap()
    };
    let cf = ProteinRecord::from_letters("cf", &report.counterfactual_sequence).unwrap();
    tm_score(&predict(rec.residues()), &predict(cf.residues())).unwrap()
}

#[test]
fn unconstrained_necessary_descends_below_margin() {
    let rec = record(1000, 32);
    let mode = ObjectiveMode::DeletionNecessary;
    let cfg = CfConfig { lambda: 0.0, ..CfConfig::for_mode(mode) };
    let r = optimize(&rec, &ToySurrogate::<f64>::default(), &SurrogateRefresh, mode, &cfg).unwrap();
    let reached = r.trace.iter().map(|t| t.tm).fold(f64::MAX, f64::min);
    assert!(reached <= 0.5 - cfg.alpha + 0.05, "{reached}");
}

#[test]
fn sufficient_without_reward_keeps_everything() {
    let rec = record(4, 20);
    let mode = ObjectiveMode::DeletionSufficient;
    let cfg = CfConfig { lambda: 0.0, ..CfConfig::for_mode(mode) };
    let r = optimize(&rec, &ToySurrogate::<f64>::default(), &SurrogateRefresh, mode, &cfg).unwrap();
    assert_eq!(r.explanation_size, 20);
    assert!(r.explanation.iter().all(|e| e.edit == Edit::Kept));
    assert!(r.final_tm > 0.999);
    assert!(r.feasible);
}

#[test]
fn no_steps_leaves_the_initial_state() {
    let rec = record(5, 12);
    let mode = ObjectiveMode::DeletionNecessary;
    let cfg = CfConfig { phases: 1, steps_per_phase: 0, ..CfConfig::for_mode(mode) };
    let r = optimize(&rec, &ToySurrogate::<f64>::default(), &SurrogateRefresh, mode, &cfg).unwrap();
    const { assert!(DELETION_INIT_LOGIT < 0.0) };
    assert_eq!(r.explanation_size, 0);
    assert!(r.trace.is_empty());
    assert!((r.final_tm - 1.0).abs() < 1e-12);
    assert!(!r.feasible);
}

#[test]
fn feasibility_flag_matches_recomputed_tm() {
    let surrogate = ToySurrogate::<f64>::default();
    for (k, mode) in ObjectiveMode::ALL.into_iter().enumerate() {
        let rec = record(40 + k as u64, 18);
        let r = optimize(&rec, &surrogate, &SurrogateRefresh, mode, &CfConfig::for_mode(mode)).unwrap();
        let tm = recomputed_tm(&surrogate, &rec, &r);
        assert!((tm - r.final_tm).abs() < 1e-9, "{mode}: {tm} vs {}", r.final_tm);
        assert_eq!(r.feasible, mode.is_feasible(tm));
        assert_eq!(ExplanationReport::from_json(&r.to_json()).unwrap(), r);
    }
}

#[test]
fn long_records_are_chunked_and_merged() {
    let rec = record(9, 50);
    let mode = ObjectiveMode::DeletionNecessary;
    let cfg = CfConfig { chunk_len: 20, steps_per_phase: 10, ..CfConfig::for_mode(mode) };
    let r = explain_record(&rec, &ToySurrogate::<f64>::default(), &SurrogateRefresh, mode, &cfg).unwrap();
    assert_eq!(r.length, 50);
    assert_eq!(r.chunks.len(), 3);
    assert_eq!(r.chunks.iter().map(|c| c.end - c.start).sum::<usize>(), 50);
    assert!(r.positions().iter().all(|&p| p < 50));
    assert_eq!(r.sequence, rec.letters());
}

#[test]
fn substitution_reports_feed_exchangeability() {
    let surrogate = ToySurrogate::<f64>::default();
    let mode = ObjectiveMode::SubstitutionRadical;
    let records: Vec<ProteinRecord> = (0..3).map(|k| record(60 + k, 16)).collect();
    let reports: Vec<ExplanationReport> = records
        .iter()
        .map(|r| optimize(r, &surrogate, &SurrogateRefresh, mode, &CfConfig::for_mode(mode)).unwrap())
        .collect();
    let substitutions: usize = reports
        .iter()
        .flat_map(|r| &r.explanation)
        .filter(|e| matches!(e.edit, Edit::Substituted { .. }))
        .count();
    let stats = accumulate_stats(&reports, &records).unwrap();
    assert_eq!(stats.counts.iter().flatten().sum::<u64>() as usize, substitutions);
    assert_eq!(stats.totals.iter().sum::<u64>(), 48);
    let ex = exchangeability(&stats, ExchangeMode::Conservative).unwrap();
    assert!(ex.values.iter().flatten().flatten().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn evaluating_an_explanation_reproduces_its_tm() {
    let surrogate = ToySurrogate::<f64>::default();
    let rec = record(77, 24);
    let mode = ObjectiveMode::DeletionNecessary;
    let r = optimize(&rec, &surrogate, &SurrogateRefresh, mode, &CfConfig::for_mode(mode)).unwrap();
    let row = evaluate_record(Criterion::Pn, "ours", &rec, &r.positions(), &surrogate, &SurrogateRefresh).unwrap();
    assert!((row.tm - r.final_tm).abs() < 1e-12);
    assert_eq!(row.indicator, r.feasible);
    let random = baseline_random(&rec, 0.33, 7).unwrap();
    assert_eq!(random.len(), 8);
    assert_eq!(random, baseline_random(&rec, 0.33, 7).unwrap());
}

#[test]
fn single_precision_pipeline_runs() {
    let rec = record(3, 12);
    let mode = ObjectiveMode::DeletionNecessary;
    let cfg = CfConfig { steps_per_phase: 20, ..CfConfig::for_mode(mode) };
    let r = optimize(&rec, &ToySurrogate::<f32>::default(), &SurrogateRefresh, mode, &cfg).unwrap();
    assert_eq!(r.trace.len(), 60);
    assert!(r.final_tm.is_finite());
    let p: SequenceEmbedding<f32> = encode_onehot(&rec);
    assert_eq!(p.len(), 12);
}
