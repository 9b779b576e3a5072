//! CSV files: sensor traces, ground truth and filter estimates.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces every value bit for bit.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::math::{Quaternion, Vec3};
use crate::sample::RawSample;
use crate::sim::evaluate::Estimate;
use crate::sim::trajectory::TruthSample;

pub const TRACE_HEADER: [&str; 11] = ["t", "gx", "gy", "gz", "ax", "ay", "az", "mx", "my", "mz", "p"];
pub const TRUTH_HEADER: [&str; 8] = ["t", "qw", "qx", "qy", "qz", "px", "py", "pz"];
pub const ESTIMATE_HEADER: [&str; 9] = ["t", "qw", "qx", "qy", "qz", "yaw", "pitch", "roll", "altitude"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CsvError::Io(io),
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                CsvError::Row { line, message: format!("expected {expected_len} fields, found {len}") }
            }
            kind => CsvError::Row { line, message: format!("{kind:?}") },
        }
    }
}

/// A recorded sensor stream. Traces without magnetometer columns load with
/// `has_mag == false` and zero mag readings.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<RawSample>,
    pub has_mag: bool,
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        let index = headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        Self { index }
    }

    fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn require(&self, names: &[&str]) -> Result<(), CsvError> {
        let missing: Vec<&str> = names.iter().copied().filter(|n| !self.has(n)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CsvError::Header(format!("missing column(s) {}", missing.join(", "))))
        }
    }

    fn get(&self, record: &csv::StringRecord, name: &str, line: u64) -> Result<f64, CsvError> {
        let raw = record.get(self.index[name]).unwrap_or("");
        let value: f64 = raw.trim().parse().map_err(|_| CsvError::Row {
            line,
            message: format!("column {name}: cannot parse {raw:?} as a number"),
        })?;
        if !value.is_finite() {
            return Err(CsvError::Row { line, message: format!("column {name}: non-finite value") });
        }
        Ok(value)
    }

    fn vec3(&self, record: &csv::StringRecord, names: [&str; 3], line: u64) -> Result<Vec3, CsvError> {
        Ok(Vec3::new(self.get(record, names[0], line)?, self.get(record, names[1], line)?, self.get(record, names[2], line)?))
    }

    fn quaternion(&self, record: &csv::StringRecord, line: u64) -> Result<Quaternion, CsvError> {
        Ok(Quaternion::new(
            self.get(record, "qw", line)?,
            self.get(record, "qx", line)?,
            self.get(record, "qy", line)?,
            self.get(record, "qz", line)?,
        ))
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input)
}

fn check_increasing(prev: Option<f64>, t: f64, line: u64) -> Result<(), CsvError> {
    match prev {
        Some(p) if t <= p => {
            Err(CsvError::Row { line, message: format!("timestamps must strictly increase ({t} after {p})") })
        }
        _ => Ok(()),
    }
}

pub fn read_trace<R: Read>(input: R) -> Result<Trace, CsvError> {
    let mut rdr = reader(input);
    let cols = Columns::new(rdr.headers()?);
    cols.require(&["t", "gx", "gy", "gz", "ax", "ay", "az", "p"])?;
    let mag_cols = ["mx", "my", "mz"].iter().filter(|c| cols.has(c)).count();
    if mag_cols != 0 && mag_cols != 3 {
        return Err(CsvError::Header("magnetometer columns must be all present or all absent".into()));
    }
    let has_mag = mag_cols == 3;
    let mut samples = Vec::new();
    let mut prev_t = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let t = cols.get(&record, "t", line)?;
        check_increasing(prev_t, t, line)?;
        prev_t = Some(t);
        samples.push(RawSample {
            t,
            gyro: cols.vec3(&record, ["gx", "gy", "gz"], line)?,
            accel: cols.vec3(&record, ["ax", "ay", "az"], line)?,
            mag: if has_mag { cols.vec3(&record, ["mx", "my", "mz"], line)? } else { Vec3::ZERO },
            pressure: cols.get(&record, "p", line)?,
        });
    }
    Ok(Trace { samples, has_mag })
}

fn fmt_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

pub fn write_trace<W: Write>(out: W, samples: &[RawSample]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for s in samples {
        let mut row = vec![s.t];
        row.extend(s.channels());
        w.write_record(fmt_row(&row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(input: R) -> Result<Vec<TruthSample>, CsvError> {
    let mut rdr = reader(input);
    let cols = Columns::new(rdr.headers()?);
    cols.require(&TRUTH_HEADER)?;
    let mut out = Vec::new();
    let mut prev_t = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let t = cols.get(&record, "t", line)?;
        check_increasing(prev_t, t, line)?;
        prev_t = Some(t);
        out.push(TruthSample {
            t,
            q: cols.quaternion(&record, line)?,
            position: cols.vec3(&record, ["px", "py", "pz"], line)?,
            // not stored; only attitude and position are scored
            velocity: Vec3::ZERO,
        });
    }
    Ok(out)
}

pub fn write_truth<W: Write>(out: W, truth: &[TruthSample]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRUTH_HEADER)?;
    for s in truth {
        let [qw, qx, qy, qz] = s.q.to_array();
        w.write_record(fmt_row(&[s.t, qw, qx, qy, qz, s.position.x, s.position.y, s.position.z]))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads estimates. Euler columns are informational and ignored; an empty
/// `altitude` cell means no altitude estimate.
pub fn read_estimates<R: Read>(input: R) -> Result<Vec<Estimate>, CsvError> {
    let mut rdr = reader(input);
    let cols = Columns::new(rdr.headers()?);
    cols.require(&["t", "qw", "qx", "qy", "qz"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let altitude = match cols.index.get("altitude").and_then(|&i| record.get(i)) {
            Some(cell) if !cell.trim().is_empty() => Some(cols.get(&record, "altitude", line)?),
            _ => None,
        };
        out.push(Estimate { t: cols.get(&record, "t", line)?, q: cols.quaternion(&record, line)?, altitude });
    }
    Ok(out)
}

/// Writes estimates with yaw, pitch and roll in degrees.
pub fn write_estimates<W: Write>(out: W, estimates: &[Estimate]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_HEADER)?;
    for e in estimates {
        let [qw, qx, qy, qz] = e.q.to_array();
        let [yaw, pitch, roll] = e.q.to_euler().to_degrees();
        let mut row = fmt_row(&[e.t, qw, qx, qy, qz, yaw, pitch, roll]);
        row.push(e.altitude.map(|a| a.to_string()).unwrap_or_default());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<BufReader<File>, CsvError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CsvError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CsvError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CsvError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
