//! Minimal deterministic SVG line plots. CSV remains the data contract;
//! these renderings are a convenience for eyeballing runs.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

pub fn line_plot(series: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if series.len() >= 2 {
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in series {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
        let mut points = String::new();
        for &(x, y) in series {
            let _ = write!(points, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"#,
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
            m = MARGIN,
            b = H - MARGIN,
            r = W - MARGIN,
            t = MARGIN
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{:.4}</text>"#,
            MARGIN - 4.0,
            H - MARGIN,
            y0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{:.4}</text>"#,
            MARGIN - 4.0,
            MARGIN + 4.0,
            y1
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11">{:.2}</text>"#,
            MARGIN,
            H - MARGIN + 14.0,
            x0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{:.2}</text>"#,
            W - MARGIN,
            H - MARGIN + 14.0,
            x1
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="13" text-anchor="middle">{}</text>"#,
        W / 2.0,
        title
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 8.0,
        x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        y_label
    );
    svg.push_str("</svg>\n");
    svg
}
