//! Minimal SVG line plots rendered from already-emitted tables.
//!
//! Plots are a derived, optional view of the CSV data: log-scaled axes
//! where the quantity spans decades, one polyline per series, and an
//! optional vertical rule (used to mark the dual-frequency crossover).

use crate::table::{Cell, Table};
use crate::CliError;
use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_column: String,
    pub y_column: String,
    /// Group rows into one line per distinct value of this column.
    pub series_column: Option<String>,
    pub log_x: bool,
    pub log_y: bool,
    /// Vertical rule at this x value (e.g. a crossover depth).
    pub vline: Option<f64>,
}

struct Axis {
    min: f64,
    max: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Result<Axis, CliError> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            if log && v <= 0.0 {
                continue;
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(CliError::Plot("no plottable values".to_string()));
        }
        if min == max {
            min *= 0.5;
            max *= 2.0;
            if min == max {
                // both zero on a linear axis
                min = -1.0;
                max = 1.0;
            }
        }
        Ok(Axis { min, max, log })
    }

    fn fraction(&self, v: f64) -> f64 {
        if self.log {
            (v.ln() - self.min.ln()) / (self.max.ln() - self.min.ln())
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let lo = self.min.log10().ceil() as i32;
            let hi = self.max.log10().floor() as i32;
            if lo > hi {
                return vec![self.min, self.max];
            }
            (lo..=hi).map(|e| 10f64.powi(e)).collect()
        } else {
            (0..=4)
                .map(|i| self.min + (self.max - self.min) * i as f64 / 4.0)
                .collect()
        }
    }
}

fn series_key(cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => format!("{v:.6e}"),
        Cell::Text(t) => t.clone(),
    }
}

/// Render a line plot of `table` to SVG text.
pub fn emit_plot(table: &Table, spec: &PlotSpec) -> Result<String, CliError> {
    if table.rows.is_empty() {
        return Err(CliError::Plot("empty table: nothing to plot".to_string()));
    }
    let xi = table.column_index(&spec.x_column)?;
    let yi = table.column_index(&spec.y_column)?;
    let si = spec
        .series_column
        .as_ref()
        .map(|c| table.column_index(c))
        .transpose()?;

    // group rows into series, preserving first-appearance order
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        let (x, y) = match (row[xi].as_num_cell(), row[yi].as_num_cell()) {
            (Some(x), Some(y)) => (x, y),
            _ => continue,
        };
        let key = si.map(|i| series_key(&row[i])).unwrap_or_default();
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, points)) => points.push((x, y)),
            None => series.push((key, vec![(x, y)])),
        }
    }

    let x_axis = Axis::new(
        series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)),
        spec.log_x,
    )?;
    let y_axis = Axis::new(
        series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)),
        spec.log_y,
    )?;

    let px = |fx: f64| MARGIN_LEFT + fx * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let py = |fy: f64| HEIGHT - MARGIN_BOTTOM - fy * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        spec.title
    );

    // frame
    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );

    // ticks and grid
    for t in x_axis.ticks() {
        let x = px(x_axis.fraction(t));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{t:.3e}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 18.0
        );
    }
    for t in y_axis.ticks() {
        let y = py(y_axis.fraction(t));
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##,
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{t:.3e}</text>"#,
            MARGIN_LEFT - 6.0
        );
    }

    // axis labels
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0,
        spec.x_column
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        spec.y_column
    );

    // series
    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (x, y) in points {
            if (spec.log_x && *x <= 0.0) || (spec.log_y && *y <= 0.0) {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(
                d,
                "{cmd}{:.2} {:.2} ",
                px(x_axis.fraction(*x)),
                py(y_axis.fraction(*y))
            );
            pen_down = true;
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            d.trim_end()
        );
        let ly = MARGIN_TOP + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
            WIDTH - MARGIN_RIGHT + 8.0,
            WIDTH - MARGIN_RIGHT + 28.0
        );
        let label = if name.is_empty() { &spec.y_column } else { name };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11">{label}</text>"#,
            WIDTH - MARGIN_RIGHT + 34.0,
            ly + 4.0
        );
    }

    // vertical rule
    if let Some(v) = spec.vline {
        let x = px(x_axis.fraction(v));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black" stroke-dasharray="5 4"/>"#,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

impl Cell {
    fn as_num_cell(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}
