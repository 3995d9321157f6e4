//! Plain-text DAG files:
//!
//! ```text
//! p=4
//! 1 -> 2
//! 1 -> 4
//! ```
//!
//! Labels are written exactly as they appear in the file. A file is read as
//! 1-based when its header says `base=1` or when some label equals `p`;
//! otherwise labels are 0-based. Blank lines and `#` comments are ignored.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Dag, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LabelBase {
    #[default]
    Zero,
    One,
}

impl LabelBase {
    pub fn offset(self) -> usize {
        match self {
            LabelBase::Zero => 0,
            LabelBase::One => 1,
        }
    }

    pub fn to_external(self, v: usize) -> usize {
        v + self.offset()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagFile {
    pub dag: Dag,
    pub base: LabelBase,
}

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_dag(text: &str) -> Result<DagFile, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "missing `p=<int>` header"))?;
    let mut p = None;
    let mut explicit_base = None;
    for token in header.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(header_line, format!("expected key=value, got `{token}`")))?;
        match key.trim() {
            "p" => {
                p = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| parse_err(header_line, format!("invalid vertex count `{value}`")))?,
                )
            }
            "base" => {
                explicit_base = Some(match value.trim() {
                    "0" => LabelBase::Zero,
                    "1" => LabelBase::One,
                    other => return Err(parse_err(header_line, format!("base must be 0 or 1, got `{other}`"))),
                })
            }
            other => return Err(parse_err(header_line, format!("unknown header key `{other}`"))),
        }
    }
    let p = p.ok_or_else(|| parse_err(header_line, "header must set p=<int>"))?;

    let mut raw = Vec::new();
    for (line, l) in lines {
        let (a, b) = l
            .split_once("->")
            .ok_or_else(|| parse_err(line, format!("expected `j -> k`, got `{l}`")))?;
        let parse_label = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("invalid vertex label `{}`", s.trim())))
        };
        raw.push((line, parse_label(a)?, parse_label(b)?));
    }

    let base = explicit_base.unwrap_or_else(|| {
        if raw.iter().any(|&(_, a, b)| a == p || b == p) {
            LabelBase::One
        } else {
            LabelBase::Zero
        }
    });
    let offset = base.offset();

    let mut edges = Vec::with_capacity(raw.len());
    for (line, a, b) in raw {
        let to_internal = |v: usize| {
            v.checked_sub(offset)
                .filter(|&x| x < p)
                .ok_or_else(|| parse_err(line, format!("vertex label {v} out of range")))
        };
        edges.push((to_internal(a)?, to_internal(b)?));
        Dag::new(p, edges.iter().copied()).map_err(|e| parse_err(line, e.to_string()))?;
    }
    let dag = Dag::new(p, edges).map_err(|e| parse_err(header_line, e.to_string()))?;
    Ok(DagFile { dag, base })
}

pub fn format_dag(dag: &Dag, base: LabelBase) -> String {
    let mut out = format!("p={}", dag.p());
    if base == LabelBase::One {
        out.push_str(" base=1");
    }
    out.push('\n');
    for (j, k) in dag.edges() {
        let _ = writeln!(out, "{} -> {}", base.to_external(j), base.to_external(k));
    }
    out
}
