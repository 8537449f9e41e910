//! CSV traces and JSON summaries.
//!
//! Trace columns, in order:
//! `t,e_b,q,e_a,e_h,p_total,rho_1..rho_K,alpha_1..alpha_K,rate_1..rate_K,sum_rate,avg_throughput`.
//! Floats are written in the shortest decimal form that parses back to the
//! same value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::SlotRecord;

pub fn trace_header(users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "e_b", "q", "e_a", "e_h", "p_total"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for prefix in ["rho", "alpha", "rate"] {
        h.extend((1..=users).map(|k| format!("{prefix}_{k}")));
    }
    h.push("sum_rate".into());
    h.push("avg_throughput".into());
    h
}

fn trace_row(r: &SlotRecord) -> Vec<String> {
    let mut row = vec![r.t.to_string()];
    row.extend([r.e_b, r.q, r.e_a, r.e_h, r.p_total].iter().map(f64::to_string));
    for v in [&r.rho, &r.alpha, &r.rate] {
        row.extend(v.iter().map(f64::to_string));
    }
    row.push(r.sum_rate.to_string());
    row.push(r.avg_throughput.to_string());
    row
}

fn csv_error(path: Option<&Path>, e: csv::Error) -> Error {
    match (path, e.into_kind()) {
        (Some(p), csv::ErrorKind::Io(io)) => Error::io(p, io),
        (_, kind) => Error::Config(format!("csv: {kind:?}")),
    }
}

pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    users: usize,
    path: Option<PathBuf>,
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: &Path, users: usize) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self::new(BufWriter::new(file), users)?;
        w.path = Some(path.to_path_buf());
        Ok(w)
    }
}

impl<W: Write> TraceWriter<W> {
    /// Writes the header immediately.
    pub fn new(sink: W, users: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(trace_header(users))?;
        Ok(TraceWriter {
            inner,
            users,
            path: None,
        })
    }

    pub fn write(&mut self, record: &SlotRecord) -> Result<()> {
        debug_assert_eq!(record.rate.len(), self.users);
        self.inner
            .write_record(trace_row(record))
            .map_err(|e| csv_error(self.path.as_deref(), e))
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(|e| match &self.path {
            Some(p) => Error::io(p, e),
            None => Error::Csv(e.into()),
        })?;
        let path = self.path.clone();
        self.inner.into_inner().map_err(|e| {
            let io = e.into_error();
            match path {
                Some(p) => Error::io(p, io),
                None => Error::Csv(io.into()),
            }
        })
    }
}

/// Renders a whole trace to a string.
pub fn trace_to_string(users: usize, records: &[SlotRecord]) -> Result<String> {
    let mut w = TraceWriter::new(Vec::new(), users)?;
    for r in records {
        w.write(r)?;
    }
    Ok(String::from_utf8(w.finish()?).expect("csv output is utf-8"))
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
