//! Report files: budget.csv, curves.csv, trace.csv, plot.svg and
//! manifest.txt. All five are staged in a hidden directory next to the
//! targets and renamed into place once every one of them is complete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qnet_core::scenarios::{LossBudget, Report};

use crate::error::CliError;

pub const BUDGET_HEADER: &str = "component,db";
pub const CURVES_HEADER: &str = "abscissa,value,tag";
pub const TRACE_HEADER: &str = "hop,cum_db";
pub const FILES: [&str; 5] = [
    "budget.csv",
    "curves.csv",
    "trace.csv",
    "plot.svg",
    "manifest.txt",
];

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn budget_csv(report: &Report) -> String {
    let mut s = format!("{BUDGET_HEADER}\n");
    if let Some(b) = report.budgets.first() {
        for (name, v) in b.budget.components() {
            let _ = writeln!(s, "{name},{v}");
        }
        let _ = writeln!(s, "total,{}", b.total);
    }
    s
}

pub fn curves_csv(report: &Report) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for c in &report.curves {
        for (x, y) in c.x.iter().zip(&c.rate) {
            let _ = writeln!(s, "{x},{y},{}", c.protocol);
        }
    }
    for c in &report.series {
        for (x, y) in c.x.iter().zip(&c.y) {
            let _ = writeln!(s, "{x},{y},{}", c.tag);
        }
    }
    s
}

pub fn trace_csv(report: &Report) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for t in &report.trace {
        let _ = writeln!(s, "{},{}", t.hop, t.cum_db);
    }
    s
}

pub fn manifest(report: &Report, mode: &str) -> String {
    let p = &report.provenance;
    let mut s = String::new();
    let _ = writeln!(s, "program = qnet");
    let _ = writeln!(s, "version = {}", p.version);
    let _ = writeln!(s, "mode = {mode}");
    let _ = writeln!(s, "scenario = {}", report.scenario.name());
    let _ = writeln!(s, "config_hash = {}", p.config_hash);
    let _ = writeln!(s, "seed = {}", p.seed);
    if let Some(path) = &report.sweep {
        let _ = writeln!(s, "sweep = {path}");
    }
    let _ = writeln!(s, "files = {}", FILES.join(" "));
    for b in &report.budgets {
        let _ = writeln!(s, "budget.{}.total_db = {}", b.name, b.total);
    }
    for r in &report.results {
        let _ = writeln!(s, "result.{} = {} {}", r.name, r.value, r.unit);
    }
    for e in &report.ensemble {
        let _ = writeln!(
            s,
            "ensemble.{} = trials {} mean {} std {} p10 {} p90 {}",
            e.quantity, e.trials, e.mean, e.std, e.p10, e.p90
        );
    }
    for n in &report.notes {
        let _ = writeln!(s, "note = {n}");
    }
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 70.0;
const MR: f64 = 150.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;
const COLOURS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Static SVG: the report's curves on shared axes, or a bar chart of the
/// first budget when there are no curves.
pub fn plot_svg(report: &Report) -> String {
    let lines: Vec<(&str, &[f64], &[f64])> = report
        .curves
        .iter()
        .map(|c| (c.protocol.as_str(), c.x.as_slice(), c.rate.as_slice()))
        .chain(
            report
                .series
                .iter()
                .map(|c| (c.tag.as_str(), c.x.as_slice(), c.y.as_slice())),
        )
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(report.scenario.name())
    );
    if lines.iter().any(|l| !l.1.is_empty()) {
        line_plot(&mut s, &lines);
    } else if let Some(b) = report.budgets.first() {
        bar_chart(&mut s, &b.budget);
    }
    s.push_str("</svg>\n");
    s
}

fn line_plot(s: &mut String, lines: &[(&str, &[f64], &[f64])]) {
    let finite = |v: &&f64| v.is_finite();
    let xs: Vec<f64> = lines
        .iter()
        .flat_map(|l| l.1.iter())
        .filter(finite)
        .copied()
        .collect();
    let ys: Vec<f64> = lines
        .iter()
        .flat_map(|l| l.2.iter())
        .filter(finite)
        .copied()
        .collect();
    let (x0, x1) = bounds(&xs);
    let pos: Vec<f64> = ys.iter().copied().filter(|&y| y > 0.0).collect();
    let (pmin, pmax) = bounds(&pos);
    let log = !pos.is_empty() && pmax / pmin > 100.0;
    let ty = |y: f64| if log { y.max(pmin).log10() } else { y };
    let (y0, y1) = if log {
        (pmin.log10().floor(), pmax.log10().ceil())
    } else {
        bounds(&ys)
    };
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (ty(y) - y0) / (y1 - y0) * (H - MT - MB);
    let _ = writeln!(
        s,
        r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - ML - MR,
        H - MT - MB
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            px(fx),
            H - MB + 14.0,
            tick(fx)
        );
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let label = if log {
            format!("1e{}", tick(fy))
        } else {
            tick(fy)
        };
        let yy = H - MB - (fy - y0) / (y1 - y0) * (H - MT - MB);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            ML - 4.0,
            yy + 3.0,
            label
        );
    }
    for (i, (tag, x, y)) in lines.iter().enumerate() {
        let c = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(y.iter())
            .filter(|(a, b)| a.is_finite() && b.is_finite() && (!log || **b > 0.0))
            .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = MT + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
            W - MR + 8.0,
            escape(tag)
        );
    }
}

fn bar_chart(s: &mut String, b: &LossBudget) {
    let comps = b.components();
    let max = comps.iter().map(|c| c.1).fold(0.0, f64::max).max(1e-12);
    let row = (H - MT - MB) / comps.len() as f64;
    let left = 130.0;
    let width = W - left - 90.0;
    for (i, (name, v)) in comps.iter().enumerate() {
        let y = MT + i as f64 * row;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + row * 0.65,
            name
        );
        let _ = writeln!(
            s,
            r##"<rect x="{left}" y="{:.1}" width="{:.2}" height="{:.1}" fill="#1f77b4"/>"##,
            y + row * 0.15,
            v / max * width,
            row * 0.7
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{v:.2} dB</text>"#,
            left + v / max * width + 4.0,
            y + row * 0.65
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">total {:.2} dB</text>"#,
        W / 2.0,
        H - 15.0,
        b.total()
    );
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Writes the five report files into `outdir`, creating it if needed.
pub fn emit_outputs(report: &Report, outdir: &Path, mode: &str) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(outdir).map_err(|e| io(outdir, e))?;
    let stage = tempfile::Builder::new()
        .prefix(".qnet-stage-")
        .tempdir_in(outdir)
        .map_err(|e| io(outdir, e))?;
    let contents = [
        budget_csv(report),
        curves_csv(report),
        trace_csv(report),
        plot_svg(report),
        manifest(report, mode),
    ];
    for (name, body) in FILES.iter().zip(&contents) {
        let p = stage.path().join(name);
        fs::write(&p, body).map_err(|e| io(&p, e))?;
    }
    let mut written = Vec::new();
    for name in FILES {
        let target = outdir.join(name);
        fs::rename(stage.path().join(name), &target).map_err(|e| io(&target, e))?;
        written.push(target);
    }
    Ok(written)
}
