//! CSV readers and writers for covariance and sample matrices, plus a small
//! text format for CI statements (`j k | s1 s2 ...`, one per line).

use std::fmt::Write;

use nalgebra::DMatrix;

use super::{CovarianceMatrix, OracleError, SampleMatrix};
use crate::graph::{CiTriple, LabelBase, VertexSet};

fn io_err(e: impl std::fmt::Display) -> OracleError {
    OracleError::Io(e.to_string())
}

type Rows = (Option<Vec<String>>, Vec<Vec<f64>>);

fn numeric_rows(text: &str) -> Result<Rows, OracleError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(rec.iter().map(str::to_owned).collect()),
            Err(e) => return Err(OracleError::Io(format!("row {}: {e}", i + 1))),
        }
    }
    Ok((header, rows))
}

/// `p` rows by `p` columns; a non-numeric first row is taken as a header.
pub fn read_covariance_csv(text: &str) -> Result<CovarianceMatrix, OracleError> {
    let (_, rows) = numeric_rows(text)?;
    let p = rows.len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(OracleError::NotSquare {
            rows: p,
            cols: rows.first().map_or(0, Vec::len),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    CovarianceMatrix::new(DMatrix::from_row_slice(p, p, &flat))
}

/// `n` rows by `p` columns under a header row of variable names.
pub fn read_sample_csv(text: &str) -> Result<SampleMatrix, OracleError> {
    let (header, rows) = numeric_rows(text)?;
    let names = header.ok_or_else(|| OracleError::Io("sample CSV needs a header row".into()))?;
    let p = names.len();
    let n = rows.len();
    if n == 0 {
        return Err(OracleError::EmptySample);
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    SampleMatrix::with_names(DMatrix::from_row_slice(n, p, &flat), names)
}

pub fn write_sample_csv(sample: &SampleMatrix) -> String {
    let mut out = sample.names().join(",");
    out.push('\n');
    let m = sample.as_matrix();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_statement(line: &str, lineno: usize, p: usize, base: LabelBase) -> Result<CiTriple, OracleError> {
    let bad = |msg: String| OracleError::MalformedTriple(format!("line {lineno}: {msg}"));
    let line = line.replace("_||_", " ").replace('⫫', " ");
    let (ends, cond) = line.split_once('|').unwrap_or((&line, ""));
    let label = |tok: &str| -> Result<usize, OracleError> {
        let v: usize = tok
            .trim_matches(',')
            .parse()
            .map_err(|_| bad(format!("invalid label `{tok}`")))?;
        v.checked_sub(base.offset())
            .filter(|&x| x < p)
            .ok_or_else(|| bad(format!("label {v} out of range")))
    };
    let endpoints: Vec<usize> = ends.split_whitespace().map(label).collect::<Result<_, _>>()?;
    if endpoints.len() != 2 {
        return Err(bad(format!("expected two endpoints, got `{}`", ends.trim())));
    }
    let s: VertexSet = cond
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(label)
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .collect();
    CiTriple::try_new(endpoints[0], endpoints[1], s)
        .ok_or_else(|| bad("endpoints must differ and lie outside the conditioning set".into()))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses CI statements, one per line: `j k | s1 s2 ...`. The `|` may be
/// omitted for an empty conditioning set, and `_||_` or `⫫` may separate the
/// endpoints. Labels are shifted by `base`.
pub fn parse_ci_statements(text: &str, p: usize, base: LabelBase) -> Result<Vec<CiTriple>, OracleError> {
    content_lines(text)
        .map(|(lineno, line)| parse_statement(line, lineno, p, base))
        .collect()
}

/// A CI file: an optional `p=N [base=0|1]` header, then statements. A
/// leading `-` marks a statement to remove from a starting set, `+` (or no
/// prefix) one to add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiFile {
    pub p: usize,
    pub base: LabelBase,
    pub added: Vec<CiTriple>,
    pub removed: Vec<CiTriple>,
}

/// `p` and `base` come from the header, else from the hints; without
/// either, labels are 1-based when some label equals `p`.
pub fn parse_ci_file(text: &str, p_hint: Option<usize>, base_hint: Option<LabelBase>) -> Result<CiFile, OracleError> {
    let mut lines = content_lines(text).peekable();
    let mut p = p_hint;
    let mut base = base_hint;
    if let Some(&(lineno, first)) = lines.peek() {
        if first.starts_with("p=") || first.starts_with("p =") {
            lines.next();
            let bad = |m: String| OracleError::MalformedTriple(format!("line {lineno}: {m}"));
            for tok in first.replace(" = ", "=").replace("= ", "=").split_whitespace() {
                let (key, value) = tok
                    .split_once('=')
                    .ok_or_else(|| bad(format!("bad header token `{tok}`")))?;
                match key {
                    "p" => {
                        let v: usize = value.parse().map_err(|_| bad(format!("bad p `{value}`")))?;
                        if p.is_some_and(|h| h != v) {
                            return Err(bad(format!("header p={v} disagrees with p={}", p.unwrap())));
                        }
                        p = Some(v);
                    }
                    "base" => {
                        base = Some(match value {
                            "0" => LabelBase::Zero,
                            "1" => LabelBase::One,
                            _ => return Err(bad(format!("base must be 0 or 1, got `{value}`"))),
                        })
                    }
                    _ => return Err(bad(format!("unknown header key `{key}`"))),
                }
            }
        }
    }
    let p =
        p.ok_or_else(|| OracleError::MalformedTriple("CI file needs a `p=N` header or a reference graph".into()))?;
    let body: Vec<(usize, bool, &str)> = lines
        .map(|(n, l)| match l.strip_prefix('-') {
            Some(rest) => (n, false, rest.trim()),
            None => (n, true, l.strip_prefix('+').unwrap_or(l).trim()),
        })
        .collect();
    let base = base.unwrap_or_else(|| {
        let p_str = p.to_string();
        let one_based = body.iter().any(|(_, _, l)| {
            l.replace("_||_", " ")
                .split(|c: char| c.is_whitespace() || c == ',' || c == '|')
                .any(|t| t == p_str)
        });
        if one_based {
            LabelBase::One
        } else {
            LabelBase::Zero
        }
    });
    let mut out = CiFile {
        p,
        base,
        added: Vec::new(),
        removed: Vec::new(),
    };
    for (lineno, add, line) in body {
        let t = parse_statement(line, lineno, p, base)?;
        if add {
            out.added.push(t);
        } else {
            out.removed.push(t);
        }
    }
    Ok(out)
}
