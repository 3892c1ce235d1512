//! Minimal SVG line charts: axes, ticks, polylines. No dependencies.

use std::fmt::Write;

const W: f64 = 760.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 36.0;
const MB: f64 = 52.0;

const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Render one chart. Log axes take log10 of the data (non-positive points
/// are dropped).
pub fn line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series<'_>],
    logx: bool,
    logy: bool,
) -> String {
    let tx = |x: f64| if logx { x.log10() } else { x };
    let ty = |y: f64| if logy { y.log10() } else { y };
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::new();
    for s in series {
        pts.push(
            s.points
                .iter()
                .filter(|(x, y)| {
                    (!logx || *x > 0.0) && (!logy || *y > 0.0) && x.is_finite() && y.is_finite()
                })
                .map(|&(x, y)| (tx(x), ty(y)))
                .collect(),
        );
    }
    let all: Vec<(f64, f64)> = pts.iter().flatten().cloned().collect();
    let (mut x0, mut x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| (a.min(x), b.max(x)));
    let (mut y0, mut y1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, y)| (a.min(y), b.max(y)));
    if !x0.is_finite() || x0 == x1 {
        x0 -= 1.0;
        x1 = x0 + 2.0;
    }
    if !y0.is_finite() || y0 == y1 {
        y0 -= 1.0;
        y1 = y0 + 2.0;
    }
    let pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#,
        H - MB
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB
    );
    // ticks
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let (sx, sy) = (px(fx), py(fy));
        let _ = writeln!(
            s,
            r#"<line x1="{sx}" y1="{}" x2="{sx}" y2="{}" stroke="black"/>"#,
            H - MB,
            H - MB + 5.0
        );
        let xv = if logx { format!("1e{fx:.1}") } else { format!("{fx:.3}") };
        let _ = writeln!(
            s,
            r#"<text x="{sx}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{xv}</text>"#,
            H - MB + 18.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{sy}" x2="{ML}" y2="{sy}" stroke="black"/>"#,
            ML - 5.0
        );
        let yv = if logy { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{yv}</text>"#,
            ML - 8.0,
            sy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        (ML + W - MR) / 2.0,
        H - 14.0,
        xml_escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        xml_escape(ylabel)
    );
    // polylines + legend
    for (i, (serie, name)) in pts.iter().zip(series.iter().map(|s| s.name)).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for &(x, y) in serie {
            let _ = write!(d, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let ly = MT + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            W - MR - 130.0,
            W - MR - 108.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            W - MR - 102.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
