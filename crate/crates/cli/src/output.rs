use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::json;

use bohmctx_core::guidance::write_trajectories_csv;
use bohmctx_core::scenarios::born_check::BornCheckReport;
use bohmctx_core::scenarios::{OverlapSeries, ScenarioConfig, ScenarioOutput};

use crate::args::Format;
use crate::svg;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot create output directory {path}: {source}")]
    Dir { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
}

pub struct Writer {
    dir: PathBuf,
}

impl Writer {
    pub fn new(dir: PathBuf) -> Result<Self, OutputError> {
        fs::create_dir_all(&dir).map_err(|source| OutputError::Dir { path: dir.clone(), source })?;
        Ok(Writer { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<String, OutputError> {
        let path = self.dir.join(name);
        let err = |source| OutputError::File {
            path: path.clone(),
            source,
        };
        let mut out = BufWriter::new(File::create(&path).map_err(err)?);
        body(&mut out).and_then(|_| out.flush()).map_err(err)?;
        Ok(name.to_string())
    }

    fn text(&self, name: &str, text: &str) -> Result<String, OutputError> {
        self.write(name, |out| out.write_all(text.as_bytes()))
    }

    pub fn scenario(&self, output: &ScenarioOutput, format: Format, plot: bool) -> Result<Vec<String>, OutputError> {
        let report = &output.report;
        let mut files = vec![self.text("summary.json", &(report.to_json() + "\n"))?];
        let table = &output.trajectories;
        let overlaps = &report.primary().overlaps;
        match format {
            Format::Csv => {
                let names: Vec<&str> = table.coord_names.iter().map(String::as_str).collect();
                files.push(self.write("trajectories.csv", |out| write_trajectories_csv(out, &table.trajectories, &names))?);
                files.push(self.write("overlaps.csv", |out| write_overlaps_csv(out, overlaps))?);
            }
            Format::Json => {
                let body = serde_json::to_string(table).expect("trajectories serialize");
                files.push(self.text("trajectories.json", &(body + "\n"))?);
                let body = serde_json::to_string_pretty(overlaps).expect("overlaps serialize");
                files.push(self.text("overlaps.json", &(body + "\n"))?);
            }
        }
        if plot {
            files.push(self.text("overlaps.svg", &svg::overlaps(overlaps))?);
            files.push(self.text("accuracy.svg", &svg::accuracies(report))?);
        }
        Ok(files)
    }

    pub fn born_check(&self, report: &BornCheckReport) -> Result<Vec<String>, OutputError> {
        Ok(vec![self.text("summary.json", &(report.to_json() + "\n"))?])
    }

    /// Run metadata; the only output that carries timing.
    pub fn manifest(&self, config: &ScenarioConfig, mut files: Vec<String>, elapsed: Duration, threads: usize) -> Result<(), OutputError> {
        files.push("manifest.json".into());
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": config.scenario.map(|k| k.as_str()),
            "seed": config.seed,
            "threads": threads,
            "duration_seconds": elapsed.as_secs_f64(),
            "files": files,
            "config": config,
        });
        self.text(
            "manifest.json",
            &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
        )?;
        Ok(())
    }
}

/// One row per recorded time. Grid scenarios have no apparatus overlap and
/// leave that column empty.
pub fn write_overlaps_csv(out: &mut impl Write, s: &OverlapSeries) -> std::io::Result<()> {
    write!(out, "t,system_overlap,apparatus_overlap")?;
    if s.ancilla.is_some() {
        write!(out, ",ancilla_overlap")?;
    }
    writeln!(out)?;
    let cell = |col: &Option<Vec<f64>>, i: usize| col.as_ref().map(|v| format!("{:.12e}", v[i])).unwrap_or_default();
    for (i, t) in s.t.iter().enumerate() {
        write!(out, "{t:.12e},{:.12e},{}", s.system[i], cell(&s.apparatus, i))?;
        if s.ancilla.is_some() {
            write!(out, ",{}", cell(&s.ancilla, i))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
