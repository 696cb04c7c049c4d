//! Minimal deterministic SVG line charts for the evaluation artifacts.
//! No external renderer: the output is a self-contained, fixed-size SVG
//! whose bytes depend only on the data.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 56.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
    pub dashed: bool,
    /// Draw a small circle at every point (for sparse series).
    pub markers: bool,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_domain: (f64, f64),
    pub y_domain: (f64, f64),
    /// Draw the y = x reference diagonal (ROC chance line / perfect
    /// calibration).
    pub diagonal: bool,
    pub series: Vec<Series<'a>>,
}

fn fmt_tick(v: f64, range: f64) -> String {
    if range >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Escapes the three characters that matter inside SVG text nodes.
fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render(chart: &Chart) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let (x_min, x_max) = chart.x_domain;
    let (y_min, y_max) = chart.y_domain;
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / y_span * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" fill=\"#222222\">{}</text>",
        WIDTH / 2.0,
        esc(chart.title)
    );

    // Gridlines and tick labels at quarters of each axis.
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let xv = x_min + f * x_span;
        let yv = y_min + f * y_span;
        let px = sx(xv);
        let py = sy(yv);
        let _ = writeln!(
            svg,
            "  <line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\" fill=\"#444444\">{}</text>",
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(xv, x_span)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" fill=\"#444444\">{}</text>",
            MARGIN_LEFT - 8.0,
            py + 4.0,
            fmt_tick(yv, y_span)
        );
    }

    if chart.diagonal {
        let _ = writeln!(
            svg,
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#bbbbbb\" stroke-dasharray=\"3,3\"/>",
            sx(x_min),
            sy(y_min),
            sx(x_max),
            sy(y_max)
        );
    }

    // Axis frame.
    let _ = writeln!(
        svg,
        "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" \
         fill=\"none\" stroke=\"#444444\"/>",
        MARGIN_LEFT, MARGIN_TOP
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#222222\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        esc(chart.x_label)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#222222\" \
         transform=\"rotate(-90 18 {:.2})\">{}</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        esc(chart.y_label)
    );

    for s in &chart.series {
        if s.points.len() >= 2 {
            let mut coords = String::new();
            for (x, y) in &s.points {
                let _ = write!(coords, "{:.2},{:.2} ", sx(*x), sy(*y));
            }
            let dash = if s.dashed {
                " stroke-dasharray=\"6,4\""
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{dash} points=\"{}\"/>",
                s.color,
                coords.trim_end()
            );
        }
        if s.markers || s.points.len() == 1 {
            for (x, y) in &s.points {
                let _ = writeln!(
                    svg,
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>",
                    sx(*x),
                    sy(*y),
                    s.color
                );
            }
        }
    }

    // Legend, bottom-right inside the plot area.
    let n = chart.series.len() as f64;
    let legend_y0 = MARGIN_TOP + plot_h - 12.0 - 18.0 * n;
    for (i, s) in chart.series.iter().enumerate() {
        let y = legend_y0 + 18.0 * (i as f64 + 1.0);
        let x1 = MARGIN_LEFT + plot_w - 170.0;
        let dash = if s.dashed {
            " stroke-dasharray=\"6,4\""
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            "  <line x1=\"{x1:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"2\"{dash}/>",
            x1 + 28.0,
            s.color
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#222222\">{}</text>",
            x1 + 36.0,
            y + 4.0,
            esc(s.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}
