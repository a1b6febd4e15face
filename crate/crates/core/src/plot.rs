//! Delay-versus-packet-index scatter plots as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::{MetricsError, RunTrace};
use crate::priority::Priority;
use crate::time::SimTime;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    /// Horizontal reference line (the class threshold).
    pub bound: Option<SimTime>,
    /// Points above this delay are left out and counted in a note.
    pub cap: Option<SimTime>,
    pub title: Option<String>,
}

/// Picks a 1/2/5 x 10^n step giving roughly `target` intervals.
fn nice_step(range: f64, target: f64) -> f64 {
    let raw = (range / target).max(f64::MIN_POSITIVE);
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn fmt_num(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Renders the delays of `class`, in delivery order, as an SVG document.
pub fn render_svg(trace: &RunTrace, class: Priority, opts: &PlotOptions) -> Result<String, MetricsError> {
    let scale = trace.tick_scale.max(1) as f64;
    let delays: Vec<f64> = trace
        .deliveries_of(class)
        .map(|d| d.delay.ticks() as f64 / scale)
        .collect();
    if delays.is_empty() {
        return Err(MetricsError::EmptyClass(class));
    }
    let cap = opts.cap.map(|c| c.ticks() as f64 / scale);
    let bound = opts.bound.map(|b| b.ticks() as f64 / scale);
    let shown: Vec<(usize, f64)> = delays
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, d)| cap.is_none_or(|c| d <= c))
        .collect();
    let omitted = delays.len() - shown.len();

    let mut y_max = shown.iter().map(|&(_, d)| d).fold(0.0, f64::max);
    if let Some(b) = bound {
        y_max = y_max.max(b);
    }
    if let Some(c) = cap {
        y_max = y_max.min(c).max(bound.unwrap_or(0.0));
    }
    let y_step = nice_step(y_max.max(1.0), 5.0);
    let y_top = (y_max / y_step).ceil().max(1.0) * y_step;
    let n = delays.len() as f64;
    let x_step = nice_step(n.max(1.0), 8.0);
    let x_top = (n / x_step).ceil().max(1.0) * x_step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |i: f64| LEFT + plot_w * (i / x_top);
    let py = |d: f64| TOP + plot_h * (1.0 - d / y_top);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let title = opts
        .title
        .clone()
        .unwrap_or_else(|| format!("End-to-end delay of {class} priority packets"));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&title)
    );

    // axes and grid
    let mut y = 0.0;
    while y <= y_top + 1e-9 {
        let yy = py(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            yy + 4.0,
            fmt_num(y)
        );
        y += y_step;
    }
    let mut x = 0.0;
    while x <= x_top + 1e-9 {
        let xx = px(x);
        let _ = writeln!(
            s,
            r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 16.0,
            fmt_num(x)
        );
        x += x_step;
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/><line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - BOTTOM,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">packet index</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">delay (T.U)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if let Some(b) = bound {
        let yy = py(b);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#c62828" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" text-anchor="end" fill="#c62828">bound {}</text>"##,
            WIDTH - RIGHT,
            WIDTH - RIGHT - 4.0,
            yy - 6.0,
            fmt_num(b)
        );
    }

    let _ = writeln!(s, r##"<g fill="#1565c0">"##);
    for &(i, d) in &shown {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#, px(i as f64), py(d));
    }
    let _ = writeln!(s, "</g>");

    if omitted > 0 {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{omitted} packet(s) above {} not shown</text>"#,
            WIDTH - RIGHT - 4.0,
            TOP + 14.0,
            fmt_num(cap.unwrap_or_default())
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the scatter plot of `class` to `path`.
pub fn plot(trace: &RunTrace, class: Priority, opts: &PlotOptions, path: &Path) -> Result<(), MetricsError> {
    let svg = render_svg(trace, class, opts)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DeliveryRecord;

    fn trace(delays_tu: &[u64]) -> RunTrace {
        let mut t = RunTrace::new(String::new(), 1000, SimTime(1_000_000));
        for (i, &d) in delays_tu.iter().enumerate() {
            t.record(DeliveryRecord {
                packet_id: i as u64,
                flow_id: "hp".into(),
                class: Priority::HIGH,
                port: 0,
                created_at: SimTime(0),
                delivered_at: SimTime(d * 1000),
                delay: SimTime(d * 1000),
            });
        }
        t
    }

    #[test]
    fn one_marker_per_shown_packet() {
        let svg = render_svg(&trace(&[2, 4, 2, 4]), Priority::HIGH, &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn capped_points_are_counted() {
        let opts = PlotOptions {
            bound: Some(SimTime(80_000)),
            cap: Some(SimTime(80_000)),
            title: None,
        };
        let svg = render_svg(&trace(&[2, 4, 120, 4]), Priority::HIGH, &opts).unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("1 packet(s) above 80 not shown"));
        assert!(svg.contains("bound 80"));
    }

    #[test]
    fn empty_class_is_an_error() {
        let err = render_svg(&trace(&[2]), Priority::LOW, &PlotOptions::default()).unwrap_err();
        assert!(matches!(err, MetricsError::EmptyClass(Priority::LOW)));
    }

    #[test]
    fn steps_are_round() {
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(2000.0, 8.0), 500.0);
        assert_eq!(nice_step(4.0, 5.0), 1.0);
    }
}
