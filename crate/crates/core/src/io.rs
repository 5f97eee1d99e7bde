//! Text dataset readers and the evaluation CSV.
//!
//! Dense format: one vector per line, whitespace-separated decimal reals.
//! Blank lines and lines starting with `#` are skipped.
//!
//! Sparse format: one vector per line, an optional leading label token
//! (discarded) followed by `index:value` pairs. **Indices in the file are
//! 1-based**; they are converted to 0-based indices in memory.
//!
//! Both readers are iterators that parse one line at a time.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::vectors::DataVector;

pub const EVAL_CSV_HEADER: [&str; 7] = [
    "query_id",
    "method",
    "params",
    "bytes",
    "exact",
    "estimate",
    "rel_error",
];

fn skip_line(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Streaming reader for the dense text format.
pub struct DenseReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    dim: Option<usize>,
}

/// Reads dense vectors; the dimension is fixed by the first vector.
pub fn read_dense<R: BufRead>(source: R) -> DenseReader<R> {
    DenseReader {
        lines: source.lines(),
        line_no: 0,
        dim: None,
    }
}

/// Reads dense vectors that must all have dimension `dim`.
pub fn read_dense_with_dim<R: BufRead>(source: R, dim: usize) -> DenseReader<R> {
    DenseReader {
        dim: Some(dim),
        ..read_dense(source)
    }
}

impl<R: BufRead> Iterator for DenseReader<R> {
    type Item = Result<DataVector>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if skip_line(&line) {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

impl<R> DenseReader<R> {
    fn parse(&mut self, line: &str) -> Result<DataVector> {
        let err = |msg: String| Error::Parse {
            line: self.line_no,
            msg,
        };
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| err(format!("malformed number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match self.dim {
            Some(d) if d != values.len() => {
                return Err(err(format!("expected {d} values, found {}", values.len())))
            }
            None => self.dim = Some(values.len()),
            _ => {}
        }
        DataVector::dense(values).map_err(|e| err(e.to_string()))
    }
}

/// Streaming reader for the sparse `index:value` format.
pub struct SparseReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    dim: usize,
}

/// Reads sparse vectors of dimension `dim` (file indices run `1..=dim`).
pub fn read_sparse<R: BufRead>(source: R, dim: usize) -> SparseReader<R> {
    SparseReader {
        lines: source.lines(),
        line_no: 0,
        dim,
    }
}

impl<R: BufRead> Iterator for SparseReader<R> {
    type Item = Result<DataVector>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if skip_line(&line) {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

impl<R> SparseReader<R> {
    fn parse(&self, line: &str) -> Result<DataVector> {
        let err = |msg: String| Error::Parse {
            line: self.line_no,
            msg,
        };
        let mut tokens = line.split_whitespace().peekable();
        if tokens.peek().is_some_and(|t| !t.contains(':')) {
            tokens.next();
        }
        let mut pairs = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("malformed token `{tok}`")))?;
            let idx: usize = i
                .parse()
                .map_err(|_| err(format!("malformed index in `{tok}`")))?;
            let val: f64 = v
                .parse()
                .map_err(|_| err(format!("malformed value in `{tok}`")))?;
            if idx == 0 {
                return Err(err(format!(
                    "index 0 in `{tok}`; sparse indices are 1-based"
                )));
            }
            if idx > self.dim {
                return Err(err(format!("index {idx} exceeds dimension {}", self.dim)));
            }
            if idx <= last {
                return Err(err(format!("index {idx} does not increase (after {last})")));
            }
            last = idx;
            pairs.push((idx - 1, val));
        }
        DataVector::sparse(self.dim, pairs).map_err(|e| err(e.to_string()))
    }
}

/// Writes vectors in the dense format (shortest round-trip decimals).
pub fn write_dense<'a, W: Write>(
    vectors: impl IntoIterator<Item = &'a DataVector>,
    mut sink: W,
) -> Result<()> {
    for v in vectors {
        let d = v.to_dense();
        let line: Vec<String> = d
            .as_dense()
            .unwrap()
            .iter()
            .map(|x| x.to_string())
            .collect();
        writeln!(sink, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Writes vectors in the sparse format with 1-based indices and no label.
pub fn write_sparse<'a, W: Write>(
    vectors: impl IntoIterator<Item = &'a DataVector>,
    mut sink: W,
) -> Result<()> {
    for v in vectors {
        let line: Vec<String> = v
            .iter_stored()
            .filter(|(_, x)| *x != 0.0)
            .map(|(i, x)| format!("{}:{}", i + 1, x))
            .collect();
        writeln!(sink, "{}", line.join(" "))?;
    }
    Ok(())
}

/// One row of an evaluation CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub query_id: u64,
    pub method: String,
    /// `key=value` pairs separated by `;`.
    pub params: String,
    pub bytes: u64,
    /// Ground truth, when known.
    pub exact: Option<f64>,
    pub estimate: f64,
    /// `(estimate - exact) / exact`; absent when `exact` is absent or zero.
    pub rel_error: Option<f64>,
}

impl EvalRecord {
    pub fn new(
        query_id: u64,
        method: impl Into<String>,
        params: impl Into<String>,
        bytes: u64,
        exact: Option<f64>,
        estimate: f64,
    ) -> Self {
        let rel_error = exact.filter(|e| *e != 0.0).map(|e| (estimate - e) / e);
        Self {
            query_id,
            method: method.into(),
            params: params.into(),
            bytes,
            exact,
            estimate,
            rel_error,
        }
    }
}

fn render(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes records sorted by `(query_id, method)`; ties keep input order.
pub fn write_eval_csv<W: Write>(records: &[EvalRecord], sink: W) -> Result<()> {
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.query_id, &a.method).cmp(&(b.query_id, &b.method)));
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(EVAL_CSV_HEADER)?;
    for r in sorted {
        w.write_record([
            r.query_id.to_string(),
            r.method.clone(),
            r.params.clone(),
            r.bytes.to_string(),
            r.exact.map(render).unwrap_or_default(),
            render(r.estimate),
            r.rel_error.map(render).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CSV written by [`write_eval_csv`].
pub fn read_eval_csv<R: std::io::Read>(source: R) -> Result<Vec<EvalRecord>> {
    let mut rdr = csv::Reader::from_reader(source);
    let header = rdr.headers()?.clone();
    if header.iter().ne(EVAL_CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected CSV header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::Parse {
            line,
            msg: format!("bad {what}"),
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("number"))
            }
        };
        out.push(EvalRecord {
            query_id: rec[0].parse().map_err(|_| bad("query_id"))?,
            method: rec[1].to_string(),
            params: rec[2].to_string(),
            bytes: rec[3].parse().map_err(|_| bad("bytes"))?,
            exact: opt(&rec[4])?,
            estimate: rec[5].parse().map_err(|_| bad("estimate"))?,
            rel_error: opt(&rec[6])?,
        });
    }
    Ok(out)
}
