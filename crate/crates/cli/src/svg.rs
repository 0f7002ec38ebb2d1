//! Bare-bones SVG line and bar charts.

use std::fmt::Write;

use bohmctx_core::scenarios::{OverlapSeries, ScenarioReport};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
/// Overlaps are drawn as log10, clipped here.
const LOG_FLOOR: f64 = -30.0;

fn frame(title: &str, y_label: &str, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi == lo {
        return out_lo;
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

pub fn overlaps(s: &OverlapSeries) -> String {
    let (t0, t1) = (s.t.first().copied().unwrap_or(0.0), s.t.last().copied().unwrap_or(1.0));
    let mut series = vec![("system", &s.system)];
    if let Some(a) = &s.apparatus {
        series.push(("apparatus", a));
    }
    if let Some(a) = &s.ancilla {
        series.push(("ancilla", a));
    }
    let mut body = String::new();
    for (k, (name, values)) in series.iter().enumerate() {
        let points: Vec<String> =
            s.t.iter()
                .zip(values.iter())
                .map(|(&t, &v)| {
                    let y = if v > 0.0 { v.log10().max(LOG_FLOOR) } else { LOG_FLOOR };
                    format!(
                        "{:.2},{:.2}",
                        scale(t, t0, t1, PAD, W - PAD),
                        scale(y, LOG_FLOOR, 0.0, H - PAD, PAD)
                    )
                })
                .collect();
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(
            body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            W - PAD - 90.0,
            PAD + 16.0 * (k as f64 + 1.0)
        );
    }
    let _ = writeln!(
        body,
        r#"<text x="{}" y="{}" text-anchor="middle">t = {t0} … {t1}</text>"#,
        W / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        body,
        r#"<text x="{}" y="{}" text-anchor="end">0</text><text x="{}" y="{}" text-anchor="end">{LOG_FLOOR}</text>"#,
        PAD - 4.0,
        PAD + 4.0,
        PAD - 4.0,
        H - PAD
    );
    frame("branch overlaps", "log10 overlap", &body)
}

pub fn accuracies(report: &ScenarioReport) -> String {
    let mut predictors: Vec<&str> = report
        .ensembles
        .iter()
        .flat_map(|e| e.accuracies.keys().map(String::as_str))
        .collect();
    predictors.sort_unstable();
    predictors.dedup();
    let groups = report.ensembles.len().max(1) as f64;
    let group_w = (W - 2.0 * PAD) / groups;
    let bar_w = group_w / (predictors.len() as f64 + 1.0);
    let mut body = String::new();
    for (g, e) in report.ensembles.iter().enumerate() {
        let x0 = PAD + g as f64 * group_w;
        for (k, p) in predictors.iter().enumerate() {
            let Some(Some(a)) = e.accuracies.get(*p) else { continue };
            let top = scale(a.fraction, 0.0, 1.0, H - PAD, PAD);
            let _ = writeln!(
                body,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} {p}: {:.4} ± {:.4}</title></rect>"#,
                x0 + bar_w * (k as f64 + 0.5),
                bar_w * 0.9,
                H - PAD - top,
                COLORS[k % COLORS.len()],
                e.label,
                a.fraction,
                a.radius
            );
        }
        if report.ensembles.len() <= 8 {
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
                x0 + group_w / 2.0,
                H - PAD + 14.0,
                e.label
            );
        }
    }
    for (k, p) in predictors.iter().enumerate() {
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" fill="{}">{p}</text>"#,
            W - PAD - 90.0,
            PAD + 16.0 * (k as f64 + 1.0),
            COLORS[k % COLORS.len()]
        );
    }
    frame("predictor accuracy", "fraction correct", &body)
}
