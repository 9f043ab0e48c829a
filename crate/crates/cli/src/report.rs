//! `axilab report`: tables and a log-log plot from stored diagnostics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::artifacts::{timestamp, RunDir, DIAGNOSTICS_FILE, VERIFIER_FILE};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|_| CliError::MissingArtifact(format!("{} not found", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))
}

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(String::new, |x| format!("{x:e}"))
}

fn runs(diag: &Value) -> &[Value] {
    diag.get("runs").and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

fn name_of(run: &Value) -> &str {
    run.get("name").and_then(Value::as_str).unwrap_or("")
}

fn scales_csv(diag: &Value) -> String {
    let mut s = String::from("run,R,m,M,J,samples\n");
    for run in runs(diag) {
        for e in run.get("per_scale").and_then(Value::as_array).into_iter().flatten() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                name_of(run),
                num(&e["R"]),
                num(&e["m"]),
                num(&e["M"]),
                num(&e["J"]),
                e["samples"].as_u64().unwrap_or(0)
            );
        }
    }
    s
}

fn norms_csv(diag: &Value) -> String {
    let mut s = String::from("run,hse,bmo,sup_rb3,e_norm,alpha\n");
    for run in runs(diag) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            name_of(run),
            num(&run["hse"]),
            num(&run["bmo"]),
            num(&run["sup_rb3"]),
            num(&run["e_norm"]),
            num(&run["alpha"])
        );
    }
    s
}

fn verifier_csv(ver: &Value) -> String {
    let mut s = String::from("member,name,lhs,rhs,verdict,scale\n");
    for m in ver.get("members").and_then(Value::as_array).into_iter().flatten() {
        let member = m.get("name").and_then(Value::as_str).unwrap_or("");
        for e in m["report"]["entries"].as_array().into_iter().flatten() {
            let _ = writeln!(
                s,
                "{member},{},{},{},{},{}",
                e["name"].as_str().unwrap_or(""),
                num(&e["lhs"]),
                num(&e["rhs"]),
                e["verdict"].as_str().unwrap_or(""),
                num(&e["scale"])
            );
        }
    }
    s
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// Log-log plot of `J` against `R`, one polyline per run with positive oscillations.
pub fn oscillation_svg(diag: &Value, stamp: Option<u64>) -> String {
    let series: Vec<(String, Vec<(f64, f64)>, Option<f64>)> = runs(diag)
        .iter()
        .map(|run| {
            let pts = run
                .get("per_scale")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .filter_map(|e| Some((e["R"].as_f64()?, e["J"].as_f64()?)))
                .filter(|&(r, j)| r > 0.0 && j > 0.0)
                .map(|(r, j)| (r.log10(), j.log10()))
                .collect();
            (name_of(run).to_string(), pts, run["alpha"].as_f64())
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo - 0.5, lo + 0.5)
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    if let Some(t) = stamp {
        let _ = writeln!(s, "<!-- generated at {t} -->");
    }
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">log10 R</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">log10 J</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for (k, (name, pts, alpha)) in series.iter().enumerate() {
        let colour = palette[k % palette.len()];
        if pts.len() > 1 {
            let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}"/>"#, d.join(" "));
        }
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(x), py(y));
        }
        let label = match alpha {
            Some(a) => format!("{name}: alpha = {a:.3}"),
            None => format!("{name}: alpha undefined"),
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{colour}">{label}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (k as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the requested report files and returns their relative paths.
pub fn cmd_report(dir_path: &Path, format: ReportFormat, reproducible: bool) -> Result<Vec<String>, CliError> {
    let (mut dir, cfg) = RunDir::open(dir_path)?;
    let diag = read_json(&dir.path(DIAGNOSTICS_FILE))?;
    let verifier = dir.path(VERIFIER_FILE);
    let verifier = verifier.is_file().then(|| read_json(&verifier)).transpose()?;
    let mut written = Vec::new();
    let mut emit = |dir: &mut RunDir, rel: &str, text: String| -> Result<(), CliError> {
        dir.write(rel, text.as_bytes())?;
        written.push(rel.to_string());
        Ok(())
    };
    match format {
        ReportFormat::Csv => {
            emit(&mut dir, "report_scales.csv", scales_csv(&diag))?;
            emit(&mut dir, "report_norms.csv", norms_csv(&diag))?;
            if let Some(v) = &verifier {
                emit(&mut dir, "report_verifier.csv", verifier_csv(v))?;
            }
        }
        ReportFormat::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("diagnostics".into(), diag);
            obj.insert("verifier".into(), verifier.unwrap_or(Value::Null));
            let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(CliError::solver)?;
            text.push('\n');
            emit(&mut dir, "report.json", text)?;
        }
        ReportFormat::Svg => {
            let stamp = (!reproducible).then(|| timestamp(false));
            emit(&mut dir, "report.svg", oscillation_svg(&diag, stamp))?;
        }
    }
    dir.finish(&cfg, reproducible)?;
    Ok(written)
}
