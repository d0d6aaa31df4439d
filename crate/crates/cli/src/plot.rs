//! Gnuplot scripts that redraw a preset's figure from its CSV files.

use std::fmt::Write as _;
use std::path::Path;

use crate::output::csv_header;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub file: String,
    pub x: String,
    pub y: String,
    pub title: String,
}

impl Curve {
    pub fn new(file: &str, x: &str, y: &str, title: &str) -> Self {
        Self {
            file: file.into(),
            x: x.into(),
            y: y.into(),
            title: title.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub curves: Vec<Curve>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    /// Image written by the script, relative to the run directory.
    pub image: String,
    pub panels: Vec<Panel>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders `spec` as a gnuplot script. Every referenced column is checked
/// against the header of its file in `dir`.
pub fn emit_plot_script(dir: &Path, spec: &PlotSpec) -> Result<String, CliError> {
    for curve in spec.panels.iter().flat_map(|p| &p.curves) {
        let header = csv_header(&dir.join(&curve.file))?;
        for col in [&curve.x, &curve.y] {
            if !header.iter().any(|h| h == col) {
                return Err(CliError::Plot(format!(
                    "column {col:?} not found in {} (has {})",
                    curve.file,
                    header.join(", ")
                )));
            }
        }
    }
    let rows = spec.panels.len().max(1);
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set datafile commentschars \"#\"");
    let _ = writeln!(s, "set terminal pngcairo size 900,{} enhanced", 320 * rows);
    let _ = writeln!(s, "set output {}", quote(&spec.image));
    if rows > 1 {
        let _ = writeln!(s, "set multiplot layout {rows},1");
    }
    for panel in &spec.panels {
        let _ = writeln!(s, "set title {}", quote(&panel.title));
        let _ = writeln!(s, "set xlabel {}", quote(&panel.xlabel));
        let _ = writeln!(s, "set ylabel {}", quote(&panel.ylabel));
        let plots: Vec<String> = panel
            .curves
            .iter()
            .map(|c| {
                format!(
                    "{} using {}:{} with lines title {}",
                    quote(&c.file),
                    quote(&c.x),
                    quote(&c.y),
                    quote(&c.title)
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    if rows > 1 {
        let _ = writeln!(s, "unset multiplot");
    }
    Ok(s)
}
