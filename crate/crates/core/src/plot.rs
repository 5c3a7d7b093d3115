//! Minimal text SVG charts for sweep columns and scaling fits.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::scaling::ScalingResult;
use crate::sweep::{column, sizes, Quantity, SweepRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Result<Self> {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            return Err(Error::InvalidArgument("nothing to plot".into()));
        }
        if f.x1 == f.x0 {
            f.x0 -= 0.5;
            f.x1 += 0.5;
        }
        if f.y1 == f.y0 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        let pad = 0.05 * (f.y1 - f.y0);
        f.y0 -= pad;
        f.y1 += pad;
        Ok(f)
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, t - 20.0, escape(title));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(xlabel));
        let _ = writeln!(
            svg,
            r#"<text x="15" y="{0}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {0})">{1}</text>"#,
            HEIGHT / 2.0,
            escape(ylabel)
        );
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, self.px(fx), b + 16.0, tick(fx));
            let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"#, l - 4.0, self.py(fy) + 4.0, tick(fy));
        }
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// One polyline per chain length.
pub fn sweep_svg(rows: &[SweepRow], quantity: Quantity) -> Result<String> {
    let series: Vec<(usize, Vec<(f64, f64)>)> = sizes(rows)
        .into_iter()
        .map(|l| (l, column(rows, l, quantity)))
        .filter(|(_, c)| !c.is_empty())
        .collect();
    let frame = Frame::fit(series.iter().flat_map(|(_, c)| c.iter().copied()))?;
    let mut svg = open();
    frame.axes(&mut svg, &format!("{quantity} vs lambda"), "lambda", quantity.name());
    for (i, (l, col)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = col
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>L={l}</title></polyline>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">L={l}</text>"#,
            WIDTH - MARGIN + 6.0,
            MARGIN + 16.0 * (i as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Peak positions against the scaling variable, the fitted line, and its intercept.
pub fn scaling_svg(fit: &ScalingResult) -> Result<String> {
    let pts: Vec<(f64, f64)> = fit
        .points
        .iter()
        .map(|p| (fit.variable.abscissa(p.sites), p.lambda_peak))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidArgument("scaling result has no points".into()));
    }
    let frame = Frame::fit(
        pts.iter()
            .copied()
            .chain(std::iter::once((0.0, fit.lambda_c))),
    )?;
    let mut svg = open();
    let xlabel = match fit.variable {
        crate::scaling::ScalingVariable::InvL => "1/L",
        crate::scaling::ScalingVariable::InvL2 => "1/L^2",
    };
    frame.axes(&mut svg, &format!("peak position, lambda_c = {:.4}", fit.lambda_c), xlabel, "lambda_peak");
    for &(x, y) in &pts {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#, frame.px(x), frame.py(y), COLORS[0]);
    }
    let x_end = frame.x1;
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"/>"#,
        frame.px(0.0),
        frame.py(fit.lambda_c),
        frame.px(x_end),
        frame.py(fit.lambda_c + fit.slope * x_end),
        COLORS[1]
    );
    let _ = writeln!(
        svg,
        r#"<path d="M {0:.2} {1:.2} l 6 -6 l -6 -6 l -6 6 z" transform="translate(0 6)" fill="{2}"><title>lambda_c = {3}</title></path>"#,
        frame.px(0.0),
        frame.py(fit.lambda_c),
        COLORS[2],
        fit.lambda_c
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
