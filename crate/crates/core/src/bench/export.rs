use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bench::{AlgorithmReport, BenchmarkOutcome, RunRecord};
use crate::error::{Error, Result};
use crate::solver::ConvergenceTrace;

/// Header of `report.csv`, left to right.
pub const REPORT_COLUMNS: [&str; 11] = [
    "Algorithm",
    "Iteration Count",
    "Best Fitness",
    "Worst Fitness",
    "Best Time (s)",
    "Worst Time (s)",
    "Average Fitness (mm)",
    "Average Fitness Weighted",
    "SD",
    "Average Time (s)",
    "Success Rate",
];

/// Fitness floor used before taking logarithms.
const LOG_FLOOR: f64 = 1e-16;

pub fn write_report_csv<W: Write>(reports: &[AlgorithmReport], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<report csv>", e))
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<AlgorithmReport>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_COLUMNS {
        return Err(Error::config(format!("unexpected report header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_runs_jsonl<W: Write>(runs: &[RunRecord], mut writer: W) -> Result<()> {
    for run in runs {
        serde_json::to_writer(&mut writer, run)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<runs jsonl>", e))?;
    }
    writer.flush().map_err(|e| Error::io("<runs jsonl>", e))
}

pub fn read_runs_jsonl<R: Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut runs = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|e| Error::io("<runs jsonl>", e))?;
        if !line.trim().is_empty() {
            runs.push(serde_json::from_str(&line)?);
        }
    }
    Ok(runs)
}

/// Iteration, time, fitness and its base-10 logarithm for every trace sample.
pub fn write_plot_data<W: Write>(trace: &ConvergenceTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "elapsed_s", "fitness_mm", "log10_fitness"])?;
    for s in trace.samples() {
        w.write_record([
            s.iteration.to_string(),
            s.elapsed.to_string(),
            s.best_fitness.to_string(),
            s.best_fitness.max(LOG_FLOOR).log10().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<plot data>", e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes `report.csv`, `runs.jsonl`, `meta.json`, `traces/<algo>.csv` and
/// `plotdata/<algo>.csv` under `dir`.
pub fn export_report(outcome: &BenchmarkOutcome, dir: &Path) -> Result<()> {
    for sub in [dir.to_path_buf(), dir.join("traces"), dir.join("plotdata")] {
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    }
    write_report_csv(&outcome.reports, create(&dir.join("report.csv"))?)?;
    write_runs_jsonl(&outcome.runs, create(&dir.join("runs.jsonl"))?)?;
    let meta = dir.join("meta.json");
    std::fs::write(&meta, serde_json::to_string_pretty(&outcome.meta)?).map_err(|e| Error::io(&meta, e))?;
    for (id, trace) in &outcome.traces {
        let trace = trace.clone().unwrap_or_default();
        trace.write_csv(create(&dir.join("traces").join(format!("{id}.csv")))?)?;
        write_plot_data(&trace, create(&dir.join("plotdata").join(format!("{id}.csv")))?)?;
    }
    Ok(())
}
