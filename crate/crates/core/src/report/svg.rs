//! Grouped bar charts of errors on a logarithmic axis.

use std::fmt::Write as _;

use super::{ExperimentRecord, Method};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 80.0;
const COLORS: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Errors of `problem` at `size`, one group per region and one bar per
/// method. Failed records leave a gap.
pub fn error_chart(records: &[ExperimentRecord], problem: u32, size: usize) -> String {
    let rows: Vec<&ExperimentRecord> = records
        .iter()
        .filter(|r| r.problem == problem && r.size == size)
        .collect();
    let mut regions: Vec<&str> = Vec::new();
    for r in &rows {
        if !regions.contains(&r.region.as_str()) {
            regions.push(&r.region);
        }
    }
    let errors: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| m.error))
        .filter(|e| *e > 0.0)
        .collect();
    let (lo, hi) = if errors.is_empty() {
        (-3.0, 0.0)
    } else {
        let lo = errors.iter().fold(f64::INFINITY, |a, b| a.min(*b)).log10().floor();
        let hi = errors.iter().fold(0.0f64, |a, b| a.max(*b)).log10().ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let plot_h = HEIGHT - TOP - BOTTOM;
    let plot_w = WIDTH - LEFT - RIGHT;
    let y_of = |e: f64| TOP + plot_h * (hi - e.log10()) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">Problem {problem}: quadratic error at size {size}</text>"#,
        WIDTH / 2.0
    );
    for k in (lo as i32)..=(hi as i32) {
        let y = y_of(10f64.powi(k));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h
    );
    let group_w = plot_w / regions.len().max(1) as f64;
    let bar_w = group_w * 0.8 / Method::ALL.len() as f64;
    for (g, region) in regions.iter().enumerate() {
        let x0 = LEFT + g as f64 * group_w + group_w * 0.1;
        for r in rows.iter().filter(|r| r.region == *region) {
            let Ok(m) = &r.outcome else { continue };
            if !(m.error > 0.0) {
                continue;
            }
            let slot = Method::ALL.iter().position(|x| *x == r.method).unwrap_or(0);
            let y = y_of(m.error);
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{y:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"><title>{} {} {:.3e}</title></rect>"#,
                x0 + slot as f64 * bar_w,
                TOP + plot_h - y,
                COLORS[slot],
                escape(region),
                r.method.name(),
                m.error
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + group_w * 0.4,
            TOP + plot_h + 18.0,
            escape(region)
        );
    }
    for (k, m) in Method::ALL.iter().enumerate() {
        let x = LEFT + k as f64 * 180.0;
        let y = HEIGHT - 25.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{y:.1}">{}</text>"#,
            y - 10.0,
            COLORS[k],
            x + 18.0,
            m.name()
        );
    }
    s.push_str("</svg>\n");
    s
}
