//! Run directory, CSV files and the JSON manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ringqed_core::{CavityConfig, PropagationStats};
use serde::Serialize;
use uuid::Uuid;

use crate::config::{RunConfig, Sector};
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Twelve significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// One simulation inside a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub sector: Sector,
    pub initial: String,
    pub cavity: CavityConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<PropagationStats>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub preset: Option<String>,
    pub scale: Option<String>,
    pub version: String,
    pub config: RunConfig,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub partial: bool,
    pub notes: Vec<String>,
    pub summary: serde_json::Value,
}

/// Owns the output directory of one invocation. Every file written through
/// it starts with a `# run_id=` comment line.
pub struct RunContext {
    run_id: String,
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
    pub runs: Vec<RunRecord>,
    pub notes: Vec<String>,
    pub partial: bool,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl RunContext {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            run_id: Uuid::new_v4().to_string(),
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            runs: Vec::new(),
            notes: Vec::new(),
            partial: false,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn header_line(&self) -> String {
        format!("# run_id={}", self.run_id)
    }

    fn create(&mut self, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", self.header_line()).map_err(|e| io_err(&path, e))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok((w, path))
    }

    /// Writes a CSV whose cells are already formatted.
    pub fn write_csv<I>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: I,
    ) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let (w, path) = self.create(name)?;
        let mut csv = csv::Writer::from_writer(w);
        let wrap = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        csv.write_record(header).map_err(wrap)?;
        for row in rows {
            csv.write_record(&row).map_err(wrap)?;
        }
        csv.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    /// Writes a numeric CSV.
    pub fn write_numeric_csv<I>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: I,
    ) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        self.write_csv(
            name,
            header,
            rows.into_iter()
                .map(|r| r.into_iter().map(fmt_num).collect()),
        )
    }

    /// Writes a text file after the run-id comment line.
    pub fn write_text(&mut self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let (mut w, path) = self.create(name)?;
        w.write_all(body.as_bytes()).map_err(|e| io_err(&path, e))?;
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn finish(
        self,
        command: &str,
        preset: Option<(&str, &str)>,
        config: &RunConfig,
        summary: serde_json::Value,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            run_id: self.run_id.clone(),
            command: command.to_string(),
            preset: preset.map(|p| p.0.to_string()),
            scale: preset.map(|p| p.1.to_string()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            threads: rayon::current_num_threads(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            files: self.files.clone(),
            runs: self.runs,
            partial: self.partial,
            notes: self.notes,
            summary,
        };
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

/// Reads a CSV written by [`RunContext`], skipping `#` lines. Returns the
/// header and the numeric body.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(|c| c.parse().unwrap_or(f64::NAN)).collect());
    }
    Ok((header, rows))
}

/// Header row of a CSV written by [`RunContext`].
pub fn csv_header(path: &Path) -> Result<Vec<String>, CliError> {
    read_csv(path).map(|(h, _)| h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_twelve_significant_digits() {
        assert_eq!(fmt_num(0.25), "2.50000000000e-1");
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        let back: f64 = fmt_num(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn files_start_with_the_run_id() {
        let dir = tempfile::tempdir().unwrap();
        let mut ctx = RunContext::new(dir.path()).unwrap();
        let p = ctx
            .write_numeric_csv("a.csv", &["x", "y"], vec![vec![1.0, 2.0]])
            .unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(&format!("# run_id={}\n", ctx.run_id())));
        let (h, rows) = read_csv(&p).unwrap();
        assert_eq!(h, ["x", "y"]);
        assert_eq!(rows, vec![vec![1.0, 2.0]]);
    }
}
