//! Metric emission (CSV and JSON) and reloading.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use pdlocal_core::record::{RoundRow, RunRecord};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] =
    ["algorithm", "seed", "round", "cum_rounds", "cum_samples", "gap", "consensus", "dual_residual", "wall_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// By extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Shortest round-trip representation; exponent form outside `[1e-4, 1e15)`.
fn number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let seed = r.master_seed.to_string();
        for row in &r.rows {
            w.write_record([
                r.algorithm.as_str(),
                &seed,
                &row.round.to_string(),
                &row.cumulative_rounds.to_string(),
                &row.cumulative_samples.to_string(),
                &number(row.gap),
                &number(row.consensus),
                &number(row.dual_residual),
                &number(row.wall_ms),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn emit_metrics(records: &[RunRecord], format: Format, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(records, &mut out)?,
        Format::Json => serde_json::to_writer_pretty(&mut out, records)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reloads records written by [`emit_metrics`]. CSV input regroups rows by
/// consecutive `(algorithm, seed)`; parameters and final states are not
/// part of the CSV and come back empty.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match Format::from_path(path) {
        Format::Json => serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Parse { path: path.into(), message: e.to_string() }),
        Format::Csv => read_csv(file).map_err(|e| match e {
            Error::Csv(c) => Error::Parse { path: path.into(), message: c.to_string() },
            other => other,
        }),
    }
}

fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::config("csv header", format!("expected {}", CSV_HEADER.join(","))));
    }
    let mut records: Vec<RunRecord> = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |col: usize| Error::config(format!("csv row {} column {}", line + 2, CSV_HEADER[col]), "not a number");
        let int = |col: usize| row[col].parse::<usize>().map_err(|_| bad(col));
        let float = |col: usize| row[col].parse::<f64>().map_err(|_| bad(col));
        let seed = row[1].parse::<u64>().map_err(|_| bad(1))?;
        let parsed = RoundRow {
            round: int(2)?,
            cumulative_rounds: int(3)?,
            cumulative_samples: int(4)?,
            gap: float(5)?,
            consensus: float(6)?,
            dual_residual: float(7)?,
            wall_ms: float(8)?,
        };
        match records.last_mut() {
            Some(r) if r.algorithm == row[0] && r.master_seed == seed && parsed.round > 0 => r.rows.push(parsed),
            _ => records.push(RunRecord {
                algorithm: row[0].to_string(),
                params: Vec::new(),
                master_seed: seed,
                rows: vec![parsed],
                final_states: Vec::new(),
            }),
        }
    }
    Ok(records)
}
