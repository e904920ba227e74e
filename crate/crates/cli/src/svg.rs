//! Minimal SVG line plot: two polylines sharing one x axis, each scaled to
//! its own y range so the shapes can be compared.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 40.0;

fn polyline(xs: &[f64], ys: &[f64], color: &str) -> String {
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut pts = String::new();
    for (x, y) in xs.iter().zip(ys) {
        let px = PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = H - PAD - (y - lo) / span * (H - 2.0 * PAD);
        let _ = write!(pts, "{px:.2},{py:.2} ");
    }
    format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", pts.trim_end())
}

/// `xs` must be increasing with at least two points; the series must match its length.
pub fn render_svg(xs: &[f64], loss: &[f64], neg_density: &[f64], title: &str) -> String {
    assert!(xs.len() >= 2 && loss.len() == xs.len() && neg_density.len() == xs.len());
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n");
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        s,
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>",
        y = H - PAD,
        x2 = W - PAD
    );
    let _ = writeln!(s, "<text x=\"{PAD}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}</text>", escape(title));
    let _ = writeln!(s, "<text x=\"{PAD}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.3}</text>", H - 20.0, xs[0]);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>",
        W - PAD,
        H - 20.0,
        xs[xs.len() - 1]
    );
    s.push_str(&polyline(xs, loss, "#1f77b4"));
    s.push_str(&polyline(xs, neg_density, "#d62728"));
    let _ = writeln!(s, "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">loss</text>", W - 160.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">negated density</text>", W - 120.0);
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_polylines_with_one_point_per_sample() {
        let xs = [0.0, 1.0, 2.0];
        let svg = render_svg(&xs, &[1.0, 0.0, 1.0], &[0.0, 0.0, 0.0], "a<b");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        let first = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(first.split(' ').count(), 3);
        assert!(first.starts_with("40.00,40.00"));
    }
}
