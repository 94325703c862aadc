//! `report`: per-model score tables and a box/strip SVG from `skill.csv`.
//!
//! Reads the validation output, writes `report.csv` (median and quartiles
//! per model and metric) and `report.svg` (ranked probability score and
//! Heidke panels, one box-with-points column per model). Deterministic:
//! same input bytes, same output bytes.

use super::write_text;
use crate::error::{data_err, CliError};
use crate::manifest::{sha256_file, Manifest};
use resp_core::assess::empirical_quantile;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

struct SkillRow {
    model: String,
    heidke: f64,
    rps: f64,
    rps_relative: f64,
}

fn read_skill(path: &Path) -> Result<Vec<SkillRow>, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| data_err(format!("{}: {e}; run `resp validate` first", path.display())))?;
    let headers = rdr.headers().map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let expect = ["year", "model", "heidke", "rps", "rps_relative"];
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(data_err(format!(
            "{}: header must be `{}`",
            path.display(),
            expect.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 5 {
            return Err(data_err(format!(
                "{}:{line}: expected 5 fields, got {}",
                path.display(),
                rec.len()
            )));
        }
        let num = |idx: usize| -> Result<f64, CliError> {
            rec[idx]
                .parse()
                .map_err(|_| data_err(format!("{}:{line}: bad value `{}`", path.display(), &rec[idx])))
        };
        rows.push(SkillRow {
            model: rec[1].to_string(),
            heidke: num(2)?,
            rps: num(3)?,
            rps_relative: num(4)?,
        });
    }
    if rows.is_empty() {
        return Err(data_err(format!("{}: no scored rows", path.display())));
    }
    Ok(rows)
}

struct Stats {
    n: usize,
    median: f64,
    q25: f64,
    q75: f64,
    min: f64,
    max: f64,
}

fn summarize(values: &[f64]) -> Stats {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    Stats {
        n: sorted.len(),
        median: empirical_quantile(&sorted, 0.5),
        q25: empirical_quantile(&sorted, 0.25),
        q75: empirical_quantile(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    }
}

fn model_color(model: &str) -> &'static str {
    match model {
        "resp" => "#2b6cb0",
        "climatology" => "#718096",
        _ => "#805ad5",
    }
}

fn panel(svg: &mut String, x0: f64, y0: f64, pw: f64, ph: f64, title: &str, series: &[(&str, &[f64])]) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, vals) in series {
        for &v in *vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.5 };
    lo -= pad;
    hi += pad;
    let y = |v: f64| y0 + ph - (v - lo) / (hi - lo) * ph;

    let _ = write!(
        svg,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="15" font-weight="bold" fill="#1a202c">{title}</text>"##,
        x0 + pw / 2.0,
        y0 - 16.0
    );
    for i in 0..5 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let ty = y(v);
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#e2e8f0" stroke-width="1"/>"##,
            x0,
            x0 + pw
        );
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11" fill="#4a5568">{v:.2}</text>"##,
            x0 - 8.0,
            ty + 4.0
        );
    }
    let _ = write!(
        svg,
        r##"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{:.1}" stroke="#718096" stroke-width="1"/>"##,
        y0 + ph
    );

    let n = series.len() as f64;
    for (idx, (name, vals)) in series.iter().enumerate() {
        let cx = x0 + (idx as f64 + 1.0) * pw / (n + 1.0);
        let st = summarize(vals);
        let color = model_color(name);
        let _ = write!(
            svg,
            r##"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}" stroke-width="1"/>"##,
            y(st.min),
            y(st.max)
        );
        let _ = write!(
            svg,
            r##"<rect x="{:.1}" y="{:.1}" width="50" height="{:.1}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1.5"/>"##,
            cx - 25.0,
            y(st.q75),
            (y(st.q25) - y(st.q75)).max(0.5)
        );
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2.5"/>"##,
            cx - 25.0,
            y(st.median),
            cx + 25.0,
            y(st.median)
        );
        for (j, &v) in vals.iter().enumerate() {
            let dx = ((j % 7) as f64 - 3.0) * 5.0;
            let _ = write!(
                svg,
                r##"<circle cx="{:.1}" cy="{:.1}" r="2.2" fill="{color}" fill-opacity="0.55"/>"##,
                cx + dx,
                y(v)
            );
        }
        let _ = write!(
            svg,
            r##"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" font-size="13" fill="#1a202c">{name}</text>"##,
            y0 + ph + 20.0
        );
    }
}

fn svg_report(per_model: &BTreeMap<String, (Vec<f64>, Vec<f64>)>) -> String {
    let mut svg = String::from(
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 840 420" font-family="sans-serif">"##,
    );
    svg.push_str(r##"<rect x="0" y="0" width="840" height="420" fill="#ffffff"/>"##);
    let rps: Vec<(&str, &[f64])> =
        per_model.iter().map(|(m, (r, _))| (m.as_str(), r.as_slice())).collect();
    let heidke: Vec<(&str, &[f64])> =
        per_model.iter().map(|(m, (_, h))| (m.as_str(), h.as_slice())).collect();
    panel(&mut svg, 70.0, 50.0, 310.0, 300.0, "Ranked probability score", &rps);
    panel(&mut svg, 490.0, 50.0, 310.0, 300.0, "Heidke skill score", &heidke);
    svg.push_str("</svg>\n");
    svg
}

pub fn run(out: &Path, from: Option<PathBuf>) -> Result<(), CliError> {
    let from_dir = from.unwrap_or_else(|| out.to_path_buf());
    let skill_path = from_dir.join("skill.csv");
    let rows = read_skill(&skill_path)?;

    // model → (rps values, heidke values, rps_relative values)
    let mut per_model: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut relative: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &rows {
        let entry = per_model.entry(row.model.clone()).or_default();
        entry.0.push(row.rps);
        entry.1.push(row.heidke);
        relative.entry(row.model.clone()).or_default().push(row.rps_relative);
    }

    let mut table = String::from("model,metric,n,median,q25,q75,min,max\n");
    for (model, (rps, heidke)) in &per_model {
        for (metric, vals) in [
            ("heidke", heidke),
            ("rps", rps),
            ("rps_relative", &relative[model]),
        ] {
            let st = summarize(vals);
            let _ = writeln!(
                table,
                "{model},{metric},{},{},{},{},{},{}",
                st.n, st.median, st.q25, st.q75, st.min, st.max
            );
        }
    }
    write_text(&out.join("report.csv"), &table)?;
    write_text(&out.join("report.svg"), &svg_report(&per_model))?;

    let mut m = Manifest::new("report", None);
    m.input_paths.insert("skill".into(), skill_path.display().to_string());
    m.details = serde_json::json!({
        "skill_sha256": sha256_file(&skill_path)?,
        "models": per_model.keys().collect::<Vec<_>>(),
        "years": rows.len() / per_model.len().max(1),
    });
    m.record_output(out, "report_csv", "report.csv")?;
    m.record_output(out, "report_svg", "report.svg")?;
    m.write(out)?;
    println!(
        "report: {} models over {} rows -> {} and report.svg",
        per_model.len(),
        rows.len(),
        out.join("report.csv").display()
    );
    Ok(())
}
