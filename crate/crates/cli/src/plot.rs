//! Minimal SVG line plots: energy against step, and paths in the θ plane.

use std::fmt::Write as _;

use crate::output::LoadedTrajectory;
use crate::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(series: &[Series]) -> Frame {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = (f64::INFINITY, f64::NEG_INFINITY);
        for (px, py) in series.iter().flat_map(|s| s.points.iter()) {
            if px.is_finite() && py.is_finite() {
                x = (x.0.min(*px), x.1.max(*px));
                y = (y.0.min(*py), y.1.max(*py));
            }
        }
        Frame {
            x: pad(x),
            y: pad(y),
        }
    }

    fn sx(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= f64::EPSILON * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo - 0.03 * span, hi + 0.03 * span)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], markers: bool) -> String {
    let frame = Frame::fit(series);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        escape(title)
    );

    // axes with five ticks each
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.sx(xv), frame.sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for &(px, py) in &s.points {
            if !(px.is_finite() && py.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(
                d,
                "{}{:.2} {:.2} ",
                if pen_down { "L" } else { "M" },
                frame.sx(px),
                frame.sy(py)
            );
            pen_down = true;
        }
        let _ = writeln!(
            svg,
            r#"<path class="series" data-label="{}" d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(s.label),
            d.trim_end()
        );
        if markers {
            if let (Some(first), Some(last)) = (s.points.first(), s.points.last()) {
                for (p, r) in [(first, 4.0), (last, 3.0)] {
                    if p.0.is_finite() && p.1.is_finite() {
                        let _ = writeln!(
                            svg,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{color}"/>"#,
                            frame.sx(p.0),
                            frame.sy(p.1)
                        );
                    }
                }
            }
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text class="legend" x="{}" y="{}">{}</text>"#,
            x1 + 12.0,
            x1 + 32.0,
            x1 + 38.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Energy against step for every trajectory, one labeled series each.
pub fn energy_plot(trajectories: &[LoadedTrajectory]) -> String {
    let series: Vec<Series> = trajectories
        .iter()
        .map(|t| Series {
            label: &t.label,
            points: t.steps.iter().map(|s| (s.k as f64, s.energy)).collect(),
        })
        .collect();
    render("Energy", "step", "energy", &series, false)
}

/// Paths in the (θ₁, θ₂) plane; every trajectory must have two parameters.
pub fn path_plot(trajectories: &[LoadedTrajectory]) -> Result<String, CliError> {
    if trajectories.iter().any(|t| t.n_params() != 2) {
        return Err(CliError::Config("path plot requires 2 parameters".into()));
    }
    let series: Vec<Series> = trajectories
        .iter()
        .map(|t| Series {
            label: &t.label,
            points: t.steps.iter().map(|s| (s.theta[0], s.theta[1])).collect(),
        })
        .collect();
    Ok(render(
        "Parameter path",
        "theta_1",
        "theta_2",
        &series,
        true,
    ))
}
