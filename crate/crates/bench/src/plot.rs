//! Minimal SVG scatter plot of estimate against cost, one colour per method.

use std::fmt::Write;

use crate::records::Record;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Cost on the horizontal axis, estimate on the vertical axis; `truth` draws
/// a dashed reference line.
pub fn scatter_svg(records: &[Record], title: &str, truth: Option<f64>) -> String {
    let ok: Vec<&Record> = records.iter().filter(|r| r.estimate.is_some()).collect();
    let (x_lo, x_hi) = span(ok.iter().map(|r| r.cost as f64));
    let (y_lo, y_hi) = span(ok.iter().map(|r| r.estimate.unwrap()).chain(truth));
    let sx = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * PAD);

    let mut methods: Vec<&str> = Vec::new();
    for r in &ok {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(svg, r#"<path d="M{PAD},{PAD} V{b} H{r}" fill="none" stroke="black"/>"#, b = H - PAD, r = W - PAD);
    for (v, anchor_x, anchor_y, align) in
        [(format!("{x_lo}"), PAD, H - PAD + 16.0, "start"), (format!("{x_hi}"), W - PAD, H - PAD + 16.0, "end")]
    {
        let _ = writeln!(svg, r#"<text x="{anchor_x}" y="{anchor_y}" text-anchor="{align}">{v}</text>"#);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">cost</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, PAD - 4.0, H - PAD, y_lo);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, PAD - 4.0, PAD + 4.0, y_hi);
    if let Some(t) = truth {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{PAD}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            W - PAD
        );
    }
    for (i, m) in methods.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        for r in ok.iter().filter(|r| r.method == *m) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}" fill-opacity="0.6"/>"#,
                sx(r.cost as f64),
                sy(r.estimate.unwrap())
            );
        }
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<circle cx="{}" cy="{ly}" r="4" fill="{colour}"/>"#, W - PAD - 90.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, W - PAD - 80.0, ly + 4.0, escape(m));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_marker_per_point_plus_legend() {
        let rows = vec![
            Record::ok("a", 0, 1.0, 1, 3, 0),
            Record::ok("a", 1, 2.0, 1, 5, 0),
            Record::ok("b<x>", 0, 1.5, 1, 4, 0),
            Record::failed("b<x>", 1, 0, "e"),
        ];
        let svg = scatter_svg(&rows, "t", Some(1.2));
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 3 + 2);
        assert!(svg.contains("b&lt;x&gt;"));
        assert!(svg.contains("stroke-dasharray"));
    }
}
