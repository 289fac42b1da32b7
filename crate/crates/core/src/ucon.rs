//! UCON text format for constellations.
//!
//! ```text
//! UCON 1
//! T M L
//! <L blocks of T lines, each with 2M fields: re im re im ...>
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Numbers are written
//! with 17 significant digits, so a write → read → write cycle is
//! byte-identical. Square constellations are stored with `T = M` (the
//! unitaries themselves, not their lifts).

use std::fmt::Write as _;

use thiserror::Error;

use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UconError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of file: expected {expected} element rows, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("line {line}: trailing data after the last element")]
    Trailing { line: usize },
    #[error("elements have inconsistent shapes")]
    Shape,
}

/// Parsed file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Ucon {
    pub t: usize,
    pub m: usize,
    pub elements: Vec<ComplexMatrix>,
}

impl Ucon {
    /// A square file holds differential unitaries rather than frames.
    pub fn is_square(&self) -> bool {
        self.t == self.m
    }
}

/// Serializes a list of equally shaped matrices.
pub fn write(elements: &[ComplexMatrix]) -> Result<String, UconError> {
    let (t, m) = elements.first().map(|e| e.shape()).unwrap_or((0, 0));
    if elements.iter().any(|e| e.shape() != (t, m)) {
        return Err(UconError::Shape);
    }
    let mut out = String::with_capacity(32 + elements.len() * t * m * 50);
    out.push_str("UCON 1\n");
    let _ = writeln!(out, "{t} {m} {}", elements.len());
    for e in elements {
        for r in 0..t {
            let mut first = true;
            for c in 0..m {
                let z = e[(r, c)];
                for v in [z.re, z.im] {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    let _ = write!(out, "{v:.16e}");
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Parses UCON text. Shape and count are checked; unitarity is left to the
/// caller.
pub fn read(text: &str) -> Result<Ucon, UconError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let syntax = |line, msg: &str| UconError::Syntax {
        line,
        msg: msg.to_string(),
    };

    let (ln, magic) = lines.next().ok_or_else(|| syntax(1, "missing `UCON 1` header"))?;
    if magic.split_whitespace().collect::<Vec<_>>() != ["UCON", "1"] {
        return Err(syntax(ln, "expected `UCON 1`"));
    }
    let (ln, dims) = lines.next().ok_or_else(|| syntax(ln + 1, "missing `T M L` line"))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| syntax(ln, "dimensions must be non-negative integers"))?;
    let [t, m, l] = dims[..] else {
        return Err(syntax(ln, "expected exactly three integers `T M L`"));
    };
    if t == 0 || m == 0 {
        return Err(syntax(ln, "T and M must be positive"));
    }

    let mut elements = Vec::with_capacity(l);
    let mut row_buf = Vec::with_capacity(t * m);
    let mut rows_read = 0;
    while elements.len() < l {
        let Some((ln, line)) = lines.next() else {
            return Err(UconError::Truncated {
                expected: l * t,
                found: rows_read,
            });
        };
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| syntax(ln, "malformed number"))?;
        if fields.len() != 2 * m {
            return Err(syntax(ln, &format!("expected {} fields, found {}", 2 * m, fields.len())));
        }
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(syntax(ln, "non-finite value"));
        }
        row_buf.extend(fields.chunks(2).map(|p| C64::new(p[0], p[1])));
        rows_read += 1;
        if row_buf.len() == t * m {
            let data = std::mem::replace(&mut row_buf, Vec::with_capacity(t * m));
            elements.push(ComplexMatrix::new(t, m, data).map_err(|_| UconError::Shape)?);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(UconError::Trailing { line });
    }
    Ok(Ucon { t, m, elements })
}
