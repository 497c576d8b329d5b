//! Static SVG of a signal with cut-point markers and shaded repetitions.

use std::fmt::Write;

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 300.0;
const PAD: f64 = 30.0;

pub fn svg_plot(
    signal: &[f64],
    cut_points: &[usize],
    repetitions: &[(usize, usize)],
    title: &str,
) -> String {
    let n = signal.len().max(2);
    let (lo, hi) = if signal.is_empty() {
        (0.0, 1.0)
    } else {
        crate::stats::min_max(signal)
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |i: usize| PAD + (WIDTH - 2.0 * PAD) * i as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - PAD - (HEIGHT - 2.0 * PAD) * (v - lo) / span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    );
    for &(a, b) in repetitions {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{PAD}" width="{:.2}" height="{:.2}" fill="#4a90d9" fill-opacity="0.15"/>"##,
            x(a),
            x(b) - x(a),
            HEIGHT - 2.0 * PAD
        );
    }
    if !signal.is_empty() {
        let _ = write!(s, r##"<polyline fill="none" stroke="#222" stroke-width="1" points=""##);
        for (i, v) in signal.iter().enumerate() {
            let _ = write!(s, "{:.2},{:.2} ", x(i), y(*v));
        }
        let _ = writeln!(s, r#""/>"#);
    }
    for &c in cut_points {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{PAD}" x2="{0:.2}" y2="{1:.2}" stroke="#d0021b" stroke-width="1.5"/>"##,
            x(c),
            HEIGHT - PAD
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_per_cut_point() {
        let sig: Vec<f64> = (0..100).map(|i| (i as f64 / 10.0).sin()).collect();
        let svg = svg_plot(&sig, &[10, 50, 90], &[(10, 50)], "a<b");
        assert_eq!(svg.matches("<line").count(), 3);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
