//! Self-contained SVG line plots and triangulation contour plots on a fixed
//! 800×600 canvas. Output depends only on the input values.

use std::fmt::Write;

use thiserror::Error;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvgError {
    #[error("nothing to plot")]
    Empty,
    #[error("logarithmic axis needs positive values")]
    NonPositive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="30" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

/// Polyline per series with axes, ticks and a legend.
pub fn render_line(plot: &LinePlot) -> Result<String, SvgError> {
    let pts = || plot.series.iter().flat_map(|s| s.points.iter().copied());
    if pts().next().is_none() {
        return Err(SvgError::Empty);
    }
    if plot.log_x && pts().any(|(x, _)| !(x > 0.0)) {
        return Err(SvgError::NonPositive);
    }
    let tx = |x: f64| if plot.log_x { x.log10() } else { x };
    let (x0, x1) = range(pts().map(|p| tx(p.0))).ok_or(SvgError::Empty)?;
    let (y0, y1) = range(pts().map(|p| p.1)).ok_or(SvgError::Empty)?;
    let (pw, ph) = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT, HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
    let sx = |x: f64| MARGIN_LEFT + (tx(x) - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    header(&mut out, &plot.title);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let px = MARGIN_LEFT + f * pw;
        let label = if plot.log_x { format!("1e{xv:.1}") } else { format!("{xv:.3}") };
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{label}</text>"#,
            MARGIN_TOP + ph,
            MARGIN_TOP + ph + 5.0,
            MARGIN_TOP + ph + 20.0
        );
        let yv = y0 + f * (y1 - y0);
        let py = MARGIN_TOP + (1.0 - f) * ph;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{yv:.4}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let finite: Vec<&(f64, f64)> = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        if finite.is_empty() {
            continue;
        }
        let coords: Vec<String> = finite.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for p in &finite {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(p.0), sy(p.1));
        }
        let ly = MARGIN_TOP + 20.0 * i as f64 + 10.0;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Isoline segments of a piecewise linear field at one level (marching triangles).
pub fn isoline_segments(vertices: &[[f64; 2]], triangles: &[[usize; 3]], values: &[f64], level: f64) -> Vec<([f64; 2], [f64; 2])> {
    let mut segs = Vec::new();
    for t in triangles {
        let mut cut = Vec::with_capacity(2);
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            let (fa, fb) = (values[a] - level, values[b] - level);
            if (fa < 0.0) != (fb < 0.0) {
                let s = fa / (fa - fb);
                let (pa, pb) = (vertices[a], vertices[b]);
                cut.push([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
            }
        }
        if cut.len() == 2 {
            segs.push((cut[0], cut[1]));
        }
    }
    segs
}

/// `n_levels` isolines evenly spaced strictly between the field's extremes,
/// drawn over the unit disk outline. A constant field yields no isolines.
pub fn render_contour(
    title: &str,
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
    values: &[f64],
    n_levels: usize,
) -> Result<String, SvgError> {
    if triangles.is_empty() || values.is_empty() {
        return Err(SvgError::Empty);
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let side = (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM).min(WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let scale = side / 2.0;
    let (cx, cy) = (MARGIN_LEFT + scale, MARGIN_TOP + scale);
    let px = |p: [f64; 2]| (cx + scale * p[0], cy - scale * p[1]);

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{scale:.2}" fill="none" stroke="black"/>"#
    );
    if hi > lo {
        for i in 1..=n_levels {
            let level = lo + (hi - lo) * i as f64 / (n_levels + 1) as f64;
            let segs = isoline_segments(vertices, triangles, values, level);
            if segs.is_empty() {
                continue;
            }
            let color = COLORS[(i - 1) % COLORS.len()];
            let mut d = String::new();
            for (a, b) in segs {
                let (ax, ay) = px(a);
                let (bx, by) = px(b);
                let _ = write!(d, "M{ax:.2},{ay:.2}L{bx:.2},{by:.2}");
            }
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1"/>"#);
            let ly = MARGIN_TOP + 18.0 * (i - 1) as f64 + 10.0;
            let lx = WIDTH - MARGIN_RIGHT + 15.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{level:.4}</text>"#,
                lx + 20.0,
                lx + 25.0,
                ly + 4.0
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> LinePlot {
        LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: true,
            series: vec![Series {
                label: "a<b".into(),
                points: vec![(1e-4, 0.1), (1e-2, 0.2)],
            }],
        }
    }

    #[test]
    fn single_series_gives_one_polyline() {
        let svg = render_line(&two_point()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(r#"width="800" height="600""#));
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(render_line(&two_point()).unwrap(), render_line(&two_point()).unwrap());
    }

    #[test]
    fn empty_and_invalid_inputs() {
        assert_eq!(render_line(&LinePlot::default()), Err(SvgError::Empty));
        let mut p = two_point();
        p.series[0].points[0].0 = 0.0;
        assert_eq!(render_line(&p), Err(SvgError::NonPositive));
    }

    #[test]
    fn constant_field_has_no_isolines() {
        let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let svg = render_contour("c", &v, &[[0, 1, 2]], &[2.0, 2.0, 2.0], 10).unwrap();
        assert_eq!(svg.matches("<path").count(), 0);
    }

    #[test]
    fn linear_field_isolines() {
        let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let f = [0.0, 1.0, 0.0, 1.0];
        let segs = isoline_segments(&v, &[[0, 1, 2], [1, 3, 2]], &f, 0.5);
        assert_eq!(segs.len(), 2);
        for (a, b) in segs {
            assert!((a[0] - 0.5).abs() < 1e-15 && (b[0] - 0.5).abs() < 1e-15);
        }
        let svg = render_contour("c", &v, &[[0, 1, 2], [1, 3, 2]], &f, 10).unwrap();
        assert_eq!(svg.matches("<path").count(), 10);
    }
}
