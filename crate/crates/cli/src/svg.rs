//! Minimal self-contained SVG line charts.
//!
//! Hand-rolled on purpose: the charts must embed no fonts, scripts, or
//! external references, and must serialize to identical bytes on every
//! platform, so all coordinates and labels use fixed-precision formatting.

use std::fmt::Write;

/// One polyline: `(x, y)` points in data coordinates.
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

/// Fixed palette, dark-on-light, colorblind-safe.
pub const PALETTE: [&str; 4] = ["#0060bf", "#c2271d", "#1d8a43", "#7a4bbf"];

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 86.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 52.0;

fn coord(x: f64) -> String {
    format!("{x:.2}")
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs();
    if (0.001..100_000.0).contains(&magnitude) {
        format!("{x:.4}")
    } else {
        format!("{x:.3e}")
    }
}

/// Renders a titled line chart of `series` with axes and a legend.
///
/// Every series supplies its own `(x, y)` points, so decimated series keep
/// their true positions. Non-finite points are skipped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
        y_min -= 1.0;
    }
    let y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + plot_w * (x - x_min) / (x_max - x_min),
            MARGIN_TOP + plot_h * (1.0 - (y - y_min) / (y_max - y_min)),
        )
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title),
    );

    // Horizontal grid lines and y tick labels.
    for t in 0..=4 {
        let y = y_min + (y_max - y_min) * t as f64 / 4.0;
        let (_, py) = to_px(x_min, y);
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#d8d8d8\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            coord(MARGIN_LEFT),
            coord(WIDTH - MARGIN_RIGHT),
            coord(MARGIN_LEFT - 8.0),
            coord(py + 4.0),
            tick_label(y),
            py = coord(py),
        );
    }
    // X tick labels at quarters.
    for t in 0..=4 {
        let x = x_min + (x_max - x_min) * t as f64 / 4.0;
        let (px, _) = to_px(x, y_min);
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            coord(px),
            coord(HEIGHT - MARGIN_BOTTOM + 20.0),
            tick_label(x),
        );
    }
    // Axes.
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444444\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        coord(MARGIN_LEFT),
        coord(MARGIN_TOP),
        coord(plot_w),
        coord(plot_h),
        coord(MARGIN_LEFT + plot_w / 2.0),
        coord(HEIGHT - 12.0),
        escape(x_label),
        coord(MARGIN_TOP + plot_h / 2.0),
        coord(MARGIN_TOP + plot_h / 2.0),
        escape(y_label),
    );
    // Series polylines.
    for s in series {
        let mut points = String::new();
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                let (px, py) = to_px(x, y);
                let _ = write!(points, "{},{} ", coord(px), coord(py));
            }
        }
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
            s.color,
            points.trim_end(),
        );
    }
    // Legend, top-right inside the plot.
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            coord(WIDTH - MARGIN_RIGHT - 170.0),
            coord(WIDTH - MARGIN_RIGHT - 140.0),
            s.color,
            coord(WIDTH - MARGIN_RIGHT - 132.0),
            coord(y + 4.0),
            escape(&s.label),
            y = coord(y),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Keeps at most `max_points` evenly strided points (always keeping the
/// last), preserving true x positions.
pub fn decimate(points: Vec<(f64, f64)>, max_points: usize) -> Vec<(f64, f64)> {
    if points.len() <= max_points.max(2) {
        return points;
    }
    let stride = points.len().div_ceil(max_points.max(2));
    let last = *points.last().expect("nonempty");
    let mut kept: Vec<(f64, f64)> = points.into_iter().step_by(stride).collect();
    if kept.last() != Some(&last) {
        kept.push(last);
    }
    kept
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_self_contained_and_deterministic() {
        let series = [Series {
            label: "wealth".to_string(),
            color: PALETTE[0],
            points: vec![(1.0, 0.0), (2.0, 0.5), (3.0, 0.25)],
        }];
        let a = line_chart("Wealth & regret <test>", "period", "log wealth", &series);
        let b = line_chart("Wealth & regret <test>", "period", "log wealth", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("&amp;") && a.contains("&lt;"));
        // The only URL is the SVG namespace: no external references.
        assert_eq!(a.matches("http").count(), 1);
        assert!(a.contains("xmlns=\"http://www.w3.org/2000/svg\""));
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let points: Vec<(f64, f64)> = (0..1000).map(|i| (i as f64, i as f64)).collect();
        let kept = decimate(points, 100);
        assert!(kept.len() <= 101);
        assert_eq!(kept[0], (0.0, 0.0));
        assert_eq!(*kept.last().unwrap(), (999.0, 999.0));
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let series = [Series {
            label: "flat".to_string(),
            color: PALETTE[1],
            points: vec![(1.0, 2.0)],
        }];
        let svg = line_chart("flat", "x", "y", &series);
        assert!(svg.contains("polyline"));
        assert!(!svg.contains("NaN"));
    }
}
