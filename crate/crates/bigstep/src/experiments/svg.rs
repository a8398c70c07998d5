//! Self-contained SVG renderer for sweep results: one polyline per
//! dimension, log2 step-size x-axis, worst transition time on the y-axis.
//! Output is byte-deterministic given the input rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::SweepRow;
use crate::{Error, Result};

/// Canvas and labeling for [`emit_svg`].
#[derive(Debug, Clone)]
pub struct AxesSpec {
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for AxesSpec {
    fn default() -> Self {
        AxesSpec {
            width: 800,
            height: 500,
            title: "worst transition time vs step size".into(),
            x_label: "step size (log2)".into(),
            y_label: "worst transition time".into(),
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

fn c(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders the rows as a standalone SVG document.
///
/// Rows without a worst transition time (cells where some dataset never
/// transitioned) are dropped from their polyline.
pub fn emit_svg(rows: &[SweepRow], spec: &AxesSpec) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no sweep rows to plot".into()));
    }
    let mut series: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(tau) = r.worst_tau {
            series
                .entry(r.d)
                .or_default()
                .push((r.eta.log2(), tau as f64));
        }
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let xs: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    let ys: Vec<f64> = series.values().flatten().map(|p| p.1).collect();
    let (x_min, x_max) = match (
        xs.iter().copied().reduce(f64::min),
        xs.iter().copied().reduce(f64::max),
    ) {
        (Some(a), Some(b)) if a < b => (a, b),
        (Some(a), Some(_)) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let y_max = ys.iter().copied().fold(1.0, f64::max) * 1.1;

    let w = spec.width as f64;
    let h = spec.height as f64;
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - y / y_max) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\">",
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>",
        c(w / 2.0),
        spec.title
    );

    // Axes.
    let x0 = c(MARGIN_LEFT);
    let y0 = c(MARGIN_TOP + plot_h);
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>",
        c(MARGIN_TOP)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>",
        c(MARGIN_LEFT + plot_w)
    );

    // Integer log2 ticks on x, five even ticks on y.
    let mut k = x_min.ceil() as i64;
    while (k as f64) <= x_max {
        let x = sx(k as f64);
        let _ = writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{y0}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>",
            c(x),
            c(MARGIN_TOP + plot_h + 5.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">2^{k}</text>",
            c(x),
            c(MARGIN_TOP + plot_h + 18.0)
        );
        k += 1;
    }
    for i in 0..=5 {
        let y_val = y_max * f64::from(i) / 5.0;
        let y = sy(y_val);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{1}\" x2=\"{x0}\" y2=\"{1}\" stroke=\"black\"/>",
            c(MARGIN_LEFT - 5.0),
            c(y)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>",
            c(MARGIN_LEFT - 8.0),
            c(y + 4.0),
            c(y_val)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>",
        c(MARGIN_LEFT + plot_w / 2.0),
        c(h - 10.0),
        spec.x_label
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>",
        c(MARGIN_TOP + plot_h / 2.0),
        spec.y_label
    );

    // One polyline per dimension plus a legend entry.
    for (slot, (d, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[slot % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|(x, y)| {
            format!("{},{}", c(sx(*x)), c(sy(*y)))
        }).collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            coords.join(" ")
        );
        let ly = MARGIN_TOP + 14.0 * slot as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            c(MARGIN_LEFT + plot_w - 70.0),
            c(ly)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">d={d}</text>",
            c(MARGIN_LEFT + plot_w - 56.0),
            c(ly + 9.0)
        );
    }

    out.push_str("</svg>\n");
    Ok(out)
}
