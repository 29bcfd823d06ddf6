// SPDX-License-Identifier: Apache-2.0

//! Static SVG of logical fidelity versus rounds.

use std::fmt::Write as _;

pub struct Curve {
    pub label: String,
    /// `(n, F, stderr)`.
    pub points: Vec<(f64, f64, f64)>,
    /// Fitted per-round error; drawn as `0.5 (1 + (1 - 2 eps)^n)`.
    pub epsilon: Option<f64>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn fidelity_svg(curves: &[Curve]) -> String {
    let n_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);
    let f_min = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1 - p.2))
        .fold(1.0f64, f64::min)
        .clamp(0.5, 0.99);
    let y_lo = (f_min * 20.0).floor() / 20.0;
    let x = |n: f64| LEFT + (W - LEFT - RIGHT) * n / n_max;
    let y = |f: f64| TOP + (H - TOP - BOTTOM) * (1.0 - (f - y_lo) / (1.0 - y_lo));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (x(0.0), x(n_max), y(y_lo), y(1.0));
    let _ = writeln!(s, r#"<path d="M{x0},{y1} V{y0} H{x1}" stroke="black" fill="none"/>"#);
    let steps = ((1.0 - y_lo) / 0.05).round() as usize;
    for k in 0..=steps {
        let f = y_lo + 0.05 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{f:.2}</text>"#, x0 - 6.0, y(f) + 4.0);
    }
    let tick = (n_max / 10.0).ceil().max(1.0);
    let mut n = 0.0;
    while n <= n_max {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#, x(n), y0 + 18.0);
        n += tick;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">rounds n</text>"#, (x0 + x1) / 2.0, H - 8.0);
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">logical fidelity</text>"#,
        (y0 + y1) / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for &(n, f, e) in &c.points {
            let _ = writeln!(
                s,
                r#"<path d="M{0},{1} V{2}" stroke="{color}"/><circle cx="{0}" cy="{3}" r="3" fill="{color}"/>"#,
                x(n),
                y((f + e).min(1.0)),
                y((f - e).max(y_lo)),
                y(f)
            );
        }
        if let Some(eps) = c.epsilon {
            let path: Vec<String> = (0..=100)
                .map(|k| {
                    let n = n_max * k as f64 / 100.0;
                    let f = 0.5 * (1.0 + (1.0 - 2.0 * eps).powf(n));
                    format!("{:.2},{:.2}", x(n), y(f.max(y_lo)))
                })
                .collect();
            let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-dasharray="4 3" fill="none"/>"#, path.join(" "));
        }
        let ly = TOP + 8.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            x1 - 220.0,
            ly - 9.0,
            x1 - 205.0,
            ly,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
