//! LIBSVM / SVMlight text format.
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ... [# comment]
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. The file is
//! read twice: the first pass validates and counts entries per column, the
//! second fills preallocated column storage, so no buffer is ever regrown.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SparseColMatrix;

/// How raw labels are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMapping {
    /// Keep labels as parsed.
    #[default]
    Raw,
    /// Two-class labels: `{0, 1}` or `{-1, +1}` are mapped to `{-1, +1}`.
    Binary,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LibsvmOptions {
    /// Feature count; defaults to the largest index seen.
    pub num_features: Option<usize>,
    pub labels: LabelMapping,
}

/// Parsed dataset.
#[derive(Debug, Clone)]
pub struct LibsvmData {
    pub design: SparseColMatrix,
    pub labels: Vec<f64>,
    /// `index:value` tokens whose value was exactly zero; they are counted
    /// but not stored.
    pub explicit_zeros: usize,
}

impl LibsvmData {
    /// `(samples, features, stored nonzeros)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.design.n_rows(), self.design.n_cols(), self.design.nnz())
    }
}

struct ParsedLine {
    label: f64,
    entries: Vec<(usize, f64)>,
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<ParsedLine>> {
    let content = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = content.split_ascii_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let label: f64 = label_tok
        .parse()
        .map_err(|_| err(format!("label '{label_tok}' is not a number")))?;
    if !label.is_finite() {
        return Err(err(format!("label '{label_tok}' is not finite")));
    }
    let mut entries = Vec::new();
    let mut prev = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("token '{tok}' is not index:value")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| err(format!("feature index '{idx}' is not a positive integer")))?;
        if idx == 0 {
            return Err(err("feature indices are 1-based; found 0".into()));
        }
        if idx == prev {
            return Err(err(format!("duplicate feature index {idx}")));
        }
        if idx < prev {
            return Err(err(format!("feature index {idx} follows {prev}; indices must increase")));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| err(format!("feature value '{val}' is not a number")))?;
        if !val.is_finite() {
            return Err(err(format!("feature value '{val}' is not finite")));
        }
        prev = idx;
        entries.push((idx - 1, val));
    }
    Ok(Some(ParsedLine { label, entries }))
}

fn for_each_row<R: BufRead>(
    reader: R,
    mut visit: impl FnMut(usize, ParsedLine) -> Result<()>,
) -> Result<()> {
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(parsed) = parse_line(&line, k + 1)? {
            visit(k + 1, parsed)?;
        }
    }
    Ok(())
}

fn map_labels(labels: &mut [f64], mapping: LabelMapping) -> Result<()> {
    if mapping == LabelMapping::Raw {
        return Ok(());
    }
    for (i, y) in labels.iter_mut().enumerate() {
        *y = match *y {
            1.0 => 1.0,
            v if v == 0.0 || v == -1.0 => -1.0,
            v => {
                return Err(Error::data(format!(
                    "sample {i}: label {v} is not a two-class label (0/1 or -1/+1)"
                )))
            }
        };
    }
    Ok(())
}

/// Parses a dataset from a re-openable source. `open` is called once per pass.
pub fn read_libsvm_with<R: BufRead>(
    mut open: impl FnMut() -> Result<R>,
    options: LibsvmOptions,
) -> Result<LibsvmData> {
    let mut col_counts: Vec<usize> = Vec::new();
    let mut labels = Vec::new();
    let mut explicit_zeros = 0usize;
    let mut max_line = 0usize;
    for_each_row(open()?, |lineno, row| {
        labels.push(row.label);
        max_line = lineno;
        for (j, v) in row.entries {
            if v == 0.0 {
                explicit_zeros += 1;
                continue;
            }
            if j >= col_counts.len() {
                col_counts.resize(j + 1, 0);
            }
            col_counts[j] += 1;
        }
        Ok(())
    })?;
    if labels.is_empty() {
        return Err(Error::data("dataset contains no samples"));
    }
    let seen = col_counts.len();
    let p = match options.num_features {
        Some(p) if p < seen => {
            return Err(Error::data(format!(
                "feature index {seen} exceeds the declared {p} features"
            )))
        }
        Some(p) => p,
        None => seen,
    };
    col_counts.resize(p, 0);

    let mut col_ptr = Vec::with_capacity(p + 1);
    col_ptr.push(0);
    for c in &col_counts {
        col_ptr.push(col_ptr.last().unwrap() + c);
    }
    let nnz = *col_ptr.last().unwrap();
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0f64; nnz];
    let mut cursor: Vec<usize> = col_ptr[..p].to_vec();
    let mut row = 0usize;
    for_each_row(open()?, |lineno, parsed| {
        if row >= labels.len() || lineno > max_line {
            return Err(Error::data("input changed between parsing passes"));
        }
        for (j, v) in parsed.entries {
            if v == 0.0 {
                continue;
            }
            if j >= p || cursor[j] >= col_ptr[j + 1] {
                return Err(Error::data("input changed between parsing passes"));
            }
            row_idx[cursor[j]] = row;
            values[cursor[j]] = v;
            cursor[j] += 1;
        }
        row += 1;
        Ok(())
    })?;
    if row != labels.len() {
        return Err(Error::data("input changed between parsing passes"));
    }

    map_labels(&mut labels, options.labels)?;
    Ok(LibsvmData {
        design: SparseColMatrix::from_raw_parts(labels.len(), col_ptr, row_idx, values),
        labels,
        explicit_zeros,
    })
}

pub fn read_libsvm(path: impl AsRef<Path>, options: LibsvmOptions) -> Result<LibsvmData> {
    let path = path.as_ref();
    read_libsvm_with(|| Ok(BufReader::new(File::open(path)?)), options)
}

pub fn parse_libsvm_str(text: &str, options: LibsvmOptions) -> Result<LibsvmData> {
    read_libsvm_with(|| Ok(text.as_bytes()), options)
}

/// Writes `design` and `labels` in LIBSVM format, one sample per line.
pub fn write_libsvm<W: Write>(design: &SparseColMatrix, labels: &[f64], mut out: W) -> Result<()> {
    if labels.len() != design.n_rows() {
        return Err(Error::usage("label count does not match rows"));
    }
    for (y, row) in labels.iter().zip(design.to_rows()) {
        write!(out, "{y}")?;
        for (j, v) in row {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry() {
        let d = parse_libsvm_str("+1 3:1.0\n", LibsvmOptions::default()).unwrap();
        assert_eq!(d.shape(), (1, 3, 1));
        assert_eq!(d.design.column(2).rows, &[0]);
        assert_eq!(d.labels, vec![1.0]);
    }

    #[test]
    fn two_lines_identity_pattern() {
        let d = parse_libsvm_str("+1 1:1.0\n-1 2:1.0\n", LibsvmOptions::default()).unwrap();
        assert_eq!(d.shape(), (2, 2, 2));
        assert_eq!(d.design.column(0).rows, &[0]);
        assert_eq!(d.design.column(1).rows, &[1]);
        assert_eq!(d.labels, vec![1.0, -1.0]);
    }

    #[test]
    fn comments_blank_lines_and_declared_width() {
        let text = "# header\n\n1 2:0.5 4:1 # trailing\n0 1:2\n";
        let opts = LibsvmOptions {
            num_features: Some(6),
            labels: LabelMapping::Binary,
        };
        let d = parse_libsvm_str(text, opts).unwrap();
        assert_eq!(d.shape(), (2, 6, 3));
        assert_eq!(d.labels, vec![1.0, -1.0]);
        let narrow = LibsvmOptions {
            num_features: Some(3),
            ..Default::default()
        };
        assert!(matches!(parse_libsvm_str(text, narrow), Err(Error::Data(_))));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("1 1:1\nabc 1:1\n", 2),
            ("1 2:1 1:1\n", 1),
            ("1 1:1 1:2\n", 1),
            ("1\n1 0:1\n", 2),
            ("1 1:x\n", 1),
            ("1 1\n", 1),
        ];
        for (text, line) in cases {
            match parse_libsvm_str(text, LibsvmOptions::default()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn empty_input_is_error() {
        assert!(matches!(
            parse_libsvm_str("", LibsvmOptions::default()),
            Err(Error::Data(_))
        ));
        assert!(parse_libsvm_str("# only a comment\n", LibsvmOptions::default()).is_err());
    }

    #[test]
    fn explicit_zeros_are_counted() {
        let d = parse_libsvm_str("1 1:0 2:3\n", LibsvmOptions::default()).unwrap();
        assert_eq!(d.explicit_zeros, 1);
        assert_eq!(d.design.nnz(), 1);
    }

    #[test]
    fn binary_mapping_rejects_other_labels() {
        let opts = LibsvmOptions {
            labels: LabelMapping::Binary,
            ..Default::default()
        };
        assert!(parse_libsvm_str("2 1:1\n", opts).is_err());
    }

    #[test]
    fn write_then_read() {
        let d = parse_libsvm_str("1 1:0.25 3:-2\n-1 2:1e-3\n", LibsvmOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&d.design, &d.labels, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1 1:0.25 3:-2\n-1 2:0.001\n");
        let back = parse_libsvm_str(&text, LibsvmOptions::default()).unwrap();
        assert_eq!(back.design, d.design);
    }
}
