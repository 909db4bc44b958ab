//! Dataset ingestion and the text formats written by runs.

mod libsvm;
mod trace;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub use libsvm::{
    parse_libsvm_str, read_libsvm, read_libsvm_with, write_libsvm, LabelMapping, LibsvmData,
    LibsvmOptions,
};
pub use trace::{read_trace, read_trace_from, write_trace, write_trace_to, TraceRecord, TRACE_HEADER};

use crate::error::{Error, Result};
use crate::matrix::WeightVector;
use crate::partition::Partition;

/// Partition file: a `# blocks=B features=p` header, then one
/// `<feature_index> <block_index>` line per feature.
pub fn write_partition_to<W: Write>(part: &Partition, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# blocks={} features={}",
        part.num_blocks(),
        part.num_features()
    )?;
    for (j, &b) in part.assignment().iter().enumerate() {
        writeln!(out, "{j} {b}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_partition(part: &Partition, path: impl AsRef<Path>) -> Result<()> {
    write_partition_to(part, BufWriter::new(File::create(path)?))
}

fn header_field(header: &str, key: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

pub fn read_partition_from<R: BufRead>(input: R) -> Result<Partition> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let bad_header = || Error::Parse {
        line: 1,
        message: "expected '# blocks=B features=p'".into(),
    };
    let body = header.strip_prefix('#').ok_or_else(bad_header)?;
    let blocks = header_field(body, "blocks").ok_or_else(bad_header)?;
    let features = header_field(body, "features").ok_or_else(bad_header)?;
    let mut assignment = vec![usize::MAX; features];
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |message: &str| Error::Parse {
            line: lineno,
            message: message.into(),
        };
        let mut parts = trimmed.split_whitespace();
        let (Some(j), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected '<feature_index> <block_index>'"));
        };
        let j: usize = j.parse().map_err(|_| err("bad feature index"))?;
        let b: usize = b.parse().map_err(|_| err("bad block index"))?;
        if j >= features {
            return Err(err("feature index out of range"));
        }
        if assignment[j] != usize::MAX {
            return Err(err("feature listed twice"));
        }
        assignment[j] = b;
    }
    if assignment.contains(&usize::MAX) {
        return Err(Error::data("partition file does not assign every feature"));
    }
    Partition::from_assignment(blocks, assignment)
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<Partition> {
    read_partition_from(BufReader::new(File::open(path)?))
}

/// Weight file: a `# features=p` header, then `<index> <value>` for every
/// nonzero weight, values written to round-trip exactly.
pub fn write_weights_to<W: Write>(w: &WeightVector, mut out: W) -> Result<()> {
    writeln!(out, "# features={}", w.len())?;
    for (j, &v) in w.values().iter().enumerate() {
        if v != 0.0 {
            writeln!(out, "{j} {v:?}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_weights(w: &WeightVector, path: impl AsRef<Path>) -> Result<()> {
    write_weights_to(w, BufWriter::new(File::create(path)?))
}

pub fn read_weights_from<R: BufRead>(input: R) -> Result<WeightVector> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let p = header
        .strip_prefix('#')
        .and_then(|h| header_field(h, "features"))
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "expected '# features=p'".into(),
        })?;
    let mut values = vec![0.0; p];
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = || Error::Parse {
            line: k + 2,
            message: "expected '<index> <value>'".into(),
        };
        let (j, v) = line.trim().split_once(' ').ok_or_else(err)?;
        let j: usize = j.parse().map_err(|_| err())?;
        let v: f64 = v.trim().parse().map_err(|_| err())?;
        if j >= p {
            return Err(err());
        }
        values[j] = v;
    }
    WeightVector::from_vec(values)
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightVector> {
    read_weights_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_file_round_trip() {
        let part = Partition::from_blocks(5, vec![vec![0, 3], vec![1, 2, 4]]).unwrap();
        let mut buf = Vec::new();
        write_partition_to(&part, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# blocks=2 features=5\n0 0\n1 1\n"));
        assert_eq!(read_partition_from(text.as_bytes()).unwrap(), part);
    }

    #[test]
    fn partition_file_errors() {
        assert!(read_partition_from("0 0\n".as_bytes()).is_err());
        assert!(read_partition_from("# blocks=1 features=2\n0 0\n".as_bytes()).is_err());
        assert!(read_partition_from("# blocks=1 features=1\n0 0\n0 0\n".as_bytes()).is_err());
        assert!(read_partition_from("# blocks=1 features=1\n0 1\n".as_bytes()).is_err());
    }

    #[test]
    fn weights_round_trip() {
        let w = WeightVector::from_vec(vec![0.0, 1.0 / 3.0, 0.0, -2.5e-12]).unwrap();
        let mut buf = Vec::new();
        write_weights_to(&w, &mut buf).unwrap();
        assert_eq!(read_weights_from(buf.as_slice()).unwrap(), w);
    }
}
