use std::fmt::Write as _;
use std::path::Path;

use foldcf::cfengine::TraceRecord;

use crate::error::{CliError, CliResult};
use crate::io;
use crate::PlotArgs;

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 170.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 40.0;

/// Label, value accessor and stroke colour of one chart.
type Panel = (&'static str, fn(&TraceRecord) -> f64, &'static str);

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "chunk,phase,step,loss,tm,l1" => {}
        _ => return Err("header must be 'chunk,phase,step,loss,tm,l1'".into()),
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.trim().split(',').collect();
            let bad = |what: &str| format!("line {}: bad {what}", i + 1);
            if f.len() != 6 {
                return Err(bad("field count"));
            }
            let real = |k: usize, what: &str| f[k].parse::<f64>().map_err(|_| bad(what));
            Ok(TraceRecord {
                chunk: f[0].parse().map_err(|_| bad("chunk"))?,
                phase: f[1].parse().map_err(|_| bad("phase"))?,
                step: f[2].parse().map_err(|_| bad("step"))?,
                loss: real(3, "loss")?,
                tm: real(4, "tm")?,
                l1: real(5, "l1")?,
            })
        })
        .collect()
}

/// Indices where a new phase (or chunk) starts, excluding the first row.
pub fn phase_boundaries(trace: &[TraceRecord]) -> Vec<usize> {
    (1..trace.len())
        .filter(|&i| (trace[i].chunk, trace[i].phase) != (trace[i - 1].chunk, trace[i - 1].phase))
        .collect()
}

fn range(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Stacked loss / TM / L1 line charts against the step index, with dashed
/// markers at phase boundaries.
pub fn render_svg(trace: &[TraceRecord], title: &str) -> String {
    let n = trace.len();
    let height = TOP + 3.0 * PANEL_H + 2.0 * GAP + 40.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let x_of = |i: f64| LEFT + if n > 1 { plot_w * i / (n - 1) as f64 } else { plot_w / 2.0 };
    let boundaries = phase_boundaries(trace);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));

    let panels: [Panel; 3] = [
        ("loss", |t| t.loss, "#1f77b4"),
        ("TM-score", |t| t.tm, "#d62728"),
        ("L1", |t| t.l1, "#2ca02c"),
    ];
    for (k, (label, get, colour)) in panels.iter().enumerate() {
        let top = TOP + k as f64 * (PANEL_H + GAP);
        let bottom = top + PANEL_H;
        let (mut lo, mut hi) = range(trace.iter().map(get));
        if *label == "TM-score" {
            lo = lo.min(0.45);
            hi = hi.max(0.55);
        }
        let y_of = |v: f64| bottom - PANEL_H * (v - lo) / (hi - lo);
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{label}</text>"#,
            top + PANEL_H / 2.0,
            top + PANEL_H / 2.0
        );
        for v in [lo, hi] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 4.0,
                y_of(v) + 4.0,
                tick(v)
            );
        }
        for &b in &boundaries {
            let x = x_of(b as f64 - 0.5);
            let _ = writeln!(
                s,
                r##"<line class="phase-boundary" x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bottom}" stroke="#888" stroke-dasharray="4 3"/>"##
            );
        }
        if *label == "TM-score" {
            let y = y_of(0.5);
            let _ = writeln!(
                s,
                r##"<line class="threshold" x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999" stroke-dasharray="1 3"/>"##,
                LEFT + plot_w
            );
        }
        let points: Vec<String> = trace
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{:.2},{:.2}", x_of(i as f64), y_of(get(t))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step (0 to {})</text>"#,
        LEFT + plot_w / 2.0,
        height - 12.0,
        n.saturating_sub(1)
    );
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 0.01 || v == 0.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn run(args: &PlotArgs) -> CliResult<()> {
    if !args.trace.is_file() {
        return Err(CliError::user(format!("{}: trace not found", args.trace.display())));
    }
    let trace = parse_trace_csv(&io::read_text(&args.trace)?)
        .map_err(|e| CliError::user(format!("{}: {e}", args.trace.display())))?;
    if trace.is_empty() {
        return Err(CliError::user(format!("{}: trace has no steps", args.trace.display())));
    }
    let out = args.out.clone().unwrap_or_else(|| args.trace.with_extension("svg"));
    let title = args.title.clone().unwrap_or_else(|| default_title(&args.trace));
    io::write_atomic(&out, &render_svg(&trace, &title))?;
    println!("{}", out.display());
    Ok(())
}

fn default_title(path: &Path) -> String {
    path.file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches(".csv").to_string())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(phases: usize, steps: usize) -> Vec<TraceRecord> {
        (0..phases * steps)
            .map(|i| TraceRecord {
                chunk: 0,
                phase: i / steps,
                step: i,
                loss: 1.0 / (1.0 + i as f64),
                tm: 1.0 - i as f64 / (phases * steps) as f64,
                l1: i as f64 * 0.01,
            })
            .collect()
    }

    #[test]
    fn three_phases_two_markers() {
        let svg = render_svg(&trace(3, 100), "t");
        // Each of the three panels draws every boundary.
        assert_eq!(svg.matches("class=\"phase-boundary\"").count(), 2 * 3);
        assert_eq!(phase_boundaries(&trace(3, 100)), vec![100, 200]);
        assert_eq!(svg, render_svg(&trace(3, 100), "t"));
    }

    #[test]
    fn csv_round_trip() {
        let t = trace(2, 5);
        let text = foldcf::cfengine::trace_to_csv(&t);
        assert_eq!(parse_trace_csv(&text).unwrap(), t);
        assert!(parse_trace_csv("chunk,phase\n").is_err());
        assert!(parse_trace_csv("chunk,phase,step,loss,tm,l1\n0,0,x,1,1,1\n").unwrap_err().contains("line 2"));
    }
}
