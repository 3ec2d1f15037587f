use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TOY_FASTA: &str = ">p1\nMKTAYIAKQRQISFVKSHFSRQ\n>p2 second\nGSHMLEDPVDAFQ\n";

fn foldcf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foldcf"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FOLDCF_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.fa"), TOY_FASTA).unwrap();
    dir
}

fn explain(dir: &Path, mode: &str, out: &str) {
    let o = foldcf(
        &["explain", "--mode", mode, "--fasta", "toy.fa", "--steps", "30", "--out", out],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn explain_writes_one_report_per_record_and_is_repeatable() {
    let dir = setup();
    let d = dir.path();
    explain(d, "deletion-necessary", "a");
    let o = foldcf(
        &["explain", "--mode", "deletion-necessary", "--fasta", "toy.fa", "--steps", "30", "--jobs", "2", "--out", "b"],
        d,
    );
    assert!(o.status.success());
    for id in ["p1", "p2"] {
        let name = format!("{id}.deletion-necessary.report.json");
        let a = fs::read(d.join("a").join(&name)).unwrap();
        assert_eq!(a, fs::read(d.join("b").join(&name)).unwrap());
        let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(report["protein_id"], id);
        assert_eq!(report["config"]["steps_per_phase"], 30);
        assert!(d.join("a").join(format!("{id}.deletion-necessary.trace.csv")).is_file());
        assert!(d.join("a/logs").join(format!("{id}.deletion-necessary.log")).is_file());
    }
}

#[test]
fn output_dir_defaults_from_environment() {
    let dir = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_foldcf"))
        .args(["explain", "--mode", "deletion-sufficient", "--fasta", "toy.fa", "--steps", "2"])
        .current_dir(dir.path())
        .env("FOLDCF_OUT", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from-env/p1.deletion-sufficient.report.json").is_file());
}

#[test]
fn external_predictor_rejected_for_optimisation() {
    let dir = setup();
    let o = foldcf(
        &["explain", "--mode", "substitution-radical", "--fasta", "toy.fa", "--predictor", "external", "--external-command", "true"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("external predictor is forward-only"));
}

#[test]
fn bad_flags_and_inputs_exit_with_one() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(foldcf(&["explain", "--mode", "sideways", "--fasta", "toy.fa"], d).status.code(), Some(1));
    assert_eq!(foldcf(&["explain", "--mode", "deletion-necessary", "--fasta", "nope.fa"], d).status.code(), Some(1));
    let o = foldcf(&["explain", "--mode", "deletion-necessary", "--fasta", "toy.fa", "--alpha", "0.7"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"));
    assert_eq!(foldcf(&["--help"], d).status.code(), Some(0));
}

#[test]
fn evaluate_reports_and_baselines() {
    let dir = setup();
    let d = dir.path();
    explain(d, "deletion-necessary", "runs");
    let args = [
        "evaluate", "--criterion", "pn", "--fasta", "toy.fa", "--reports", "runs", "--baseline", "random",
        "--baseline", "evolutionary", "--fraction", "0.33", "--seed", "7",
    ];
    let mut first = args.to_vec();
    first.extend(["--out", "e1"]);
    let o = foldcf(&first, d);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut second = args.to_vec();
    second.extend(["--out", "e2"]);
    assert!(foldcf(&second, d).status.success());
    let summary = fs::read_to_string(d.join("e1/pn_summary.csv")).unwrap();
    assert_eq!(summary, fs::read_to_string(d.join("e2/pn_summary.csv")).unwrap());
    assert!(summary.starts_with("method,n,ave_explanation_size,ave_complexity,ave_tm,PN\n"));
    assert!(summary.contains("\nours,2,"));
    assert!(summary.contains("\nrandom,2,"));
    // No alignments: the evolutionary baseline yields error rows, not a summary.
    assert!(!summary.contains("evolutionary"));
    let rows = fs::read_to_string(d.join("e1/pn_records.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| l.starts_with("evolutionary,")).count(), 2);
    assert!(rows.contains("no alignment"));
}

#[test]
fn evaluate_evolutionary_with_alignments() {
    let dir = setup();
    let d = dir.path();
    fs::create_dir(d.join("msa")).unwrap();
    fs::write(d.join("msa/p1.a3m"), "MKTAYIAKQRQISFVKSHFSRQ\nMKTAYLAKQRQ-SFVKAHFSRE\nMRTAYIAKQKQISWVKSHFSRQ\n").unwrap();
    fs::write(d.join("msa/p2.aln"), "GSHMLEDPVDAFQ\nGSHMIEDPVDAFQ\n").unwrap();
    let o = foldcf(
        &["evaluate", "--criterion", "ps", "--fasta", "toy.fa", "--msa-dir", "msa", "--baseline", "evolutionary", "--out", "e"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(d.join("e/ps_summary.csv")).unwrap();
    assert!(summary.contains("\nevolutionary,2,"), "{summary}");
}

#[test]
fn evaluate_missing_reports_is_an_error() {
    let dir = setup();
    let d = dir.path();
    fs::create_dir(d.join("empty")).unwrap();
    let o = foldcf(&["evaluate", "--criterion", "pn", "--fasta", "toy.fa", "--reports", "empty", "--out", "e"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no deletion-necessary report for 'p1'"));
}

#[test]
fn evaluate_with_external_predictor() {
    let dir = setup();
    let d = dir.path();
    // Straight chain that turns at every masked residue.
    let script = r#"seq=$(tr -d '\n' < "$1/request.json" | sed 's/.*"sequence": *"\([A-Z]*\)".*/\1/')
echo "$seq" | awk '{ x=0; y=0; dx=1; dy=0; print "index,x,y,z";
  for (i = 1; i <= length($0); i++) { if (substr($0, i, 1) == "X") { t = dx; dx = -dy; dy = t }
    x += dx; y += dy; printf "%d,%d,%d,0\n", i - 1, x, y } }' > "$1/response.csv""#;
    fs::write(d.join("fold.sh"), script).unwrap();
    let o = foldcf(
        &[
            "evaluate", "--criterion", "pn", "--fasta", "toy.fa", "--baseline", "random", "--fraction", "0.5",
            "--predictor", "external", "--external-command", "sh fold.sh {workdir}", "--out", "e",
        ],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(d.join("e/pn_records.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3, "{rows}");
    assert!(d.join("e/external/random/p1/request.json").is_file());
}

#[test]
fn exchangeability_from_builtin_fixture() {
    let dir = setup();
    let d = dir.path();
    let o = foldcf(&["exchangeability", "--fixture", "builtin", "--out", "x"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let cons = fs::read_to_string(d.join("x/conservative_exchangeability.csv")).unwrap();
    let row_a: Vec<&str> = cons.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row_a[0], "A");
    assert_eq!(row_a[1], "");
    assert!((row_a[2].parse::<f64>().unwrap() - 19.0 / 782.0).abs() < 1e-12);
    let rad = fs::read_to_string(d.join("x/radical_exchangeability.csv")).unwrap();
    let row_a: Vec<&str> = rad.lines().nth(1).unwrap().split(',').collect();
    assert!((row_a[2].parse::<f64>().unwrap() - 782.0 / 28.0).abs() < 1e-12);
    assert!(d.join("x/conservative_counts.csv").is_file());
    assert!(d.join("x/residue_totals.csv").is_file());
}

fn indicator_csv(f: impl Fn(usize, usize) -> String) -> String {
    let letters: Vec<char> = "ARNDCQEGHILKMFPSTWYV".chars().collect();
    let mut s: String = letters.iter().map(|c| format!(",{c}")).collect();
    s.push('\n');
    for (i, c) in letters.iter().enumerate() {
        s.push(*c);
        for j in 0..20 {
            s.push(',');
            s.push_str(&f(i, j));
        }
        s.push('\n');
    }
    s
}

#[test]
fn exchangeability_correlates_each_indicator() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("dist.csv"), indicator_csv(|i, j| if i == j { "0".into() } else { format!("{}", 1 + (i * 7 + j * 3) % 11) })).unwrap();
    fs::write(d.join("other.csv"), indicator_csv(|i, j| format!("{}", (i + 2 * j) % 5))).unwrap();
    let o = foldcf(
        &["exchangeability", "--fixture", "builtin", "--indicator", "dist.csv", "--indicator", "other.csv", "--out", "x"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(d.join("x/correlations.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "indicator,matrix,pairs,pearson");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines.iter().any(|l| l.starts_with("dist,conservative,380,")));
    for l in &lines[1..] {
        let r: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((-1.0..=1.0).contains(&r));
    }
}

#[test]
fn malformed_indicator_names_the_cell() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.csv"), indicator_csv(|i, j| if (i, j) == (1, 1) { "abc".into() } else { "1".into() })).unwrap();
    let o = foldcf(&["exchangeability", "--fixture", "builtin", "--indicator", "bad.csv", "--out", "x"], d);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 3, column 3") && err.contains("abc"), "{err}");
}

#[test]
fn exchangeability_needs_a_source() {
    let dir = setup();
    let o = foldcf(&["exchangeability", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exchangeability_from_substitution_reports() {
    let dir = setup();
    let d = dir.path();
    explain(d, "substitution-conservative", "subs");
    explain(d, "substitution-radical", "subs");
    let o = foldcf(&["exchangeability", "--reports", "subs", "--out", "x"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let totals = fs::read_to_string(d.join("x/residue_totals.csv")).unwrap();
    // p1 and p2 together: three alanines, counted once per protein.
    assert!(totals.contains("\nA,3\n"), "{totals}");
    assert!(d.join("x/radical_exchangeability.csv").is_file());
}

fn write_trace(path: &Path, phases: usize, steps: usize) {
    let mut s = String::from("chunk,phase,step,loss,tm,l1\n");
    for i in 0..phases * steps {
        s.push_str(&format!("0,{},{},{},{},{}\n", i / steps, i, 0.7 - i as f64 * 0.002, 1.0 - i as f64 * 0.002, 0.01 * i as f64));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn plot_marks_phase_boundaries() {
    let dir = setup();
    let d = dir.path();
    write_trace(&d.join("t.csv"), 3, 100);
    assert!(foldcf(&["plot", "--trace", "t.csv", "--out", "a.svg"], d).status.success());
    assert!(foldcf(&["plot", "--trace", "t.csv", "--out", "b.svg"], d).status.success());
    let a = fs::read_to_string(d.join("a.svg")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.svg")).unwrap());
    assert!(a.starts_with("<svg"));
    // Markers are drawn once per panel (loss, TM, L1).
    assert_eq!(a.matches("class=\"phase-boundary\"").count(), 2 * 3);
    assert!(foldcf(&["plot", "--trace", "t.csv"], d).status.success());
    assert!(d.join("t.svg").is_file());
}

#[test]
fn plot_rejects_empty_or_missing_trace() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("empty.csv"), "chunk,phase,step,loss,tm,l1\n").unwrap();
    assert_eq!(foldcf(&["plot", "--trace", "empty.csv"], d).status.code(), Some(1));
    assert_eq!(foldcf(&["plot", "--trace", "missing.csv"], d).status.code(), Some(1));
}

#[test]
fn length_filter_drops_short_records() {
    let dir = setup();
    let d = dir.path();
    let long = "ACDEFGHIKLMNPQRSTVWY".repeat(4);
    fs::write(d.join("mixed.fa"), format!(">long\n{long}\n>short\nMKTAYIAKQ\n")).unwrap();
    let o = foldcf(
        &["explain", "--mode", "deletion-necessary", "--fasta", "mixed.fa", "--length-filter", "--steps", "1", "--out", "f"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("f/long.deletion-necessary.report.json").is_file());
    assert!(!d.join("f/short.deletion-necessary.report.json").exists());
    assert!(stderr(&o).contains("skipping 'short'"));
}
