//! Hand-written SVG for bar charts, scatter plots and line plots. Output is
//! plain text with fixed number formatting so that it is byte-stable.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn range_of(values: impl Iterator<Item = f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    }
}

/// Vertical bars, one per label, around a zero baseline.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut s = header(title);
    let (lo, hi) = range_of(values.iter().copied(), true);
    let y = |v: f64| PAD + (hi - v) / (hi - lo) * (H - 2.0 * PAD);
    let n = values.len().max(1) as f64;
    let slot = (W - 2.0 * PAD) / n;
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        y(0.0),
        W - PAD,
        y(0.0)
    );
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let x = PAD + slot * i as f64 + 0.15 * slot;
        let (top, bottom) = if v >= 0.0 {
            (y(v), y(0.0))
        } else {
            (y(0.0), y(v))
        };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
            0.7 * slot,
            bottom - top,
            COLORS[0],
            escape(label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" transform="rotate(-45 {:.2} {:.2})">{}</text>"#,
            x + 0.35 * slot,
            H - PAD + 12.0,
            x + 0.35 * slot,
            H - PAD + 12.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

/// Named point series; `lines` joins consecutive points of each series.
pub fn xy_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<[f64; 2]>)],
    lines: bool,
) -> String {
    let mut s = header(title);
    axes(&mut s, x_label, y_label);
    let all = || series.iter().flat_map(|(_, p)| p.iter());
    let (x0, x1) = range_of(all().map(|p| p[0]), false);
    let (y0, y1) = range_of(all().map(|p| p[1]), false);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if lines && pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1])))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}"/>"#,
                path.join(" ")
            );
        }
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(p[0]),
                py(p[1])
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
