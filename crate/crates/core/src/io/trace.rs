//! Convergence trace rows and their CSV form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "iteration,elapsed_seconds,objective,nnz,max_abs_eta";

/// One sampled point of a solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub elapsed_seconds: f64,
    pub objective: f64,
    pub nnz: usize,
    pub max_abs_eta: f64,
}

/// Writes records as CSV. Floats use the shortest representation that
/// parses back to the same bits.
pub fn write_trace_to<W: Write>(records: &[TraceRecord], mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:?},{:?},{},{:?}",
            r.iteration, r.elapsed_seconds, r.objective, r.nnz, r.max_abs_eta
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace(records: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    write_trace_to(records, BufWriter::new(File::create(path)?))
}

pub fn read_trace_from<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{TRACE_HEADER}'"),
            })
        }
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        let bad = |what: &str| Error::Parse {
            line: lineno,
            message: format!("bad {what} field"),
        };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        out.push(TraceRecord {
            iteration: fields[0].parse().map_err(|_| bad("iteration"))?,
            elapsed_seconds: fields[1].parse().map_err(|_| bad("elapsed_seconds"))?,
            objective: fields[2].parse().map_err(|_| bad("objective"))?,
            nnz: fields[3].parse().map_err(|_| bad("nnz"))?,
            max_abs_eta: fields[4].parse().map_err(|_| bad("max_abs_eta"))?,
        });
    }
    Ok(out)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    read_trace_from(BufReader::new(File::open(path)?))
}
