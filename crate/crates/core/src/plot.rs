//! Deterministic SVG line plots.
//!
//! Self-contained renderer (no external tooling) producing byte-identical
//! output for identical input: fixed canvas size, fixed precision, no
//! timestamps. Suitable for golden-file comparison in tests.

use std::fmt::Write as _;

pub const WIDTH: u32 = 800;
pub const HEIGHT: u32 = 500;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 4] = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad"];

/// One polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn data_bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        // degenerate ranges get a symmetric pad so scaling stays finite
        if x_min == x_max {
            x_min -= 0.5;
            x_max += 0.5;
        }
        if y_min == y_max {
            y_min -= 0.5;
            y_max += 0.5;
        }
        (x_min, x_max, y_min, y_max)
    }
}

/// Render the plot as an SVG document string.
pub fn render(spec: &PlotSpec) -> String {
    let (x_min, x_max, y_min, y_max) = data_bounds(&spec.series);
    let plot_w = WIDTH as f64 - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT as f64 - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="monospace" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2,
        xml_escape(&spec.title)
    );

    // axes
    let x0 = MARGIN_LEFT;
    let y0 = HEIGHT as f64 - MARGIN_BOTTOM;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{MARGIN_TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#,
        WIDTH as f64 - MARGIN_RIGHT
    );
    // bounds labels
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{}" font-family="monospace" font-size="11">{x_min}</text>"#,
        y0 + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="end">{x_max}</text>"#,
        WIDTH as f64 - MARGIN_RIGHT,
        y0 + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{y0}" font-family="monospace" font-size="11" text-anchor="end">{y_min}</text>"#,
        x0 - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="end">{y_max}</text>"#,
        x0 - 6.0,
        MARGIN_TOP + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT as f64 - 12.0,
        xml_escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-family="monospace" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&spec.y_label)
    );

    for (si, s) in spec.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut points = String::with_capacity(s.points.len() * 14);
        for &(x, y) in &s.points {
            let _ = write!(points, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            points.trim_end()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{color}">{}</text>"#,
            WIDTH as f64 - MARGIN_RIGHT - 150.0,
            MARGIN_TOP + 16.0 * (si as f64 + 1.0),
            xml_escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plot kinds understood by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Tracking error against time.
    Error,
    /// Phase portrait (velocity against displacement).
    Phase,
    /// Active sigma values against time.
    Sigmas,
    /// Train/test RMSE against epoch.
    Rmse,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "error" => Some(Self::Error),
            "phase" => Some(Self::Phase),
            "sigmas" => Some(Self::Sigmas),
            "rmse" => Some(Self::Rmse),
            _ => None,
        }
    }
}

pub fn trajectory_error_plot(traj: &crate::dynamics::Trajectory) -> PlotSpec {
    PlotSpec {
        title: "tracking error".into(),
        x_label: "t (s)".into(),
        y_label: "e".into(),
        series: vec![Series {
            label: "e(t)".into(),
            points: traj.samples.iter().map(|s| (s.t, s.e)).collect(),
        }],
    }
}

pub fn trajectory_phase_plot(traj: &crate::dynamics::Trajectory) -> PlotSpec {
    PlotSpec {
        title: "phase portrait".into(),
        x_label: "x".into(),
        y_label: "v".into(),
        series: vec![Series {
            label: "(x, v)".into(),
            points: traj.samples.iter().map(|s| (s.x, s.v)).collect(),
        }],
    }
}

pub fn trajectory_sigma_plot(traj: &crate::dynamics::Trajectory) -> PlotSpec {
    PlotSpec {
        title: "active sigmas".into(),
        x_label: "t (s)".into(),
        y_label: "sigma".into(),
        series: vec![
            Series {
                label: "s1".into(),
                points: traj.samples.iter().map(|s| (s.t, s.s1)).collect(),
            },
            Series {
                label: "s2".into(),
                points: traj.samples.iter().map(|s| (s.t, s.s2)).collect(),
            },
        ],
    }
}

pub fn trainlog_rmse_plot(log: &crate::surrogate::TrainLog) -> PlotSpec {
    PlotSpec {
        title: "training rmse".into(),
        x_label: "epoch".into(),
        y_label: "rmse".into(),
        series: vec![
            Series {
                label: "train".into(),
                points: log.epochs.iter().map(|r| (r.epoch as f64, r.train_rmse)).collect(),
            },
            Series {
                label: "test".into(),
                points: log.epochs.iter().map(|r| (r.epoch as f64, r.test_rmse)).collect(),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_spec(n: usize) -> PlotSpec {
        PlotSpec {
            title: "demo".into(),
            x_label: "t".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "y(t)".into(),
                points: (0..n).map(|i| (i as f64, (i as f64 * 0.1).sin())).collect(),
            }],
        }
    }

    #[test]
    fn renders_one_polyline_with_all_points() {
        let svg = render(&sample_spec(2500));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let points_attr = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points_attr.split_whitespace().count(), 2500);
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render(&sample_spec(100));
        let b = render(&sample_spec(100));
        assert_eq!(a, b);
        assert!(!a.contains("date"), "no timestamps allowed");
    }

    #[test]
    fn empty_and_degenerate_inputs_render() {
        let empty = PlotSpec {
            title: "empty".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![],
        };
        assert!(render(&empty).starts_with("<svg"));
        let flat = PlotSpec {
            title: "flat".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series { label: "c".into(), points: vec![(1.0, 2.0), (1.0, 2.0)] }],
        };
        let svg = render(&flat);
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn two_series_get_two_polylines() {
        let mut spec = sample_spec(10);
        spec.series.push(Series {
            label: "z".into(),
            points: vec![(0.0, 1.0), (5.0, -1.0)],
        });
        let svg = render(&spec);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
