//! Plain-text complex matrix format for cross-checking with other tools.
//!
//! ```text
//! # <name> <rows> <cols>
//! 1+0i 0.5-2i
//! ...
//! ```
//! Entries are written with shortest round-trip precision.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

pub fn format_complex(c: C64) -> String {
    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", c.re, sign, c.im.abs())
}

pub fn parse_complex(s: &str) -> Option<C64> {
    let body = s.strip_suffix('i')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(C64::new(re, im))
}

pub fn write_section(out: &mut String, name: &str, m: &CMatrix) {
    let _ = writeln!(out, "# {} {} {}", name, m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format_complex(m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn parse(text: &str) -> Result<Vec<(String, CMatrix)>> {
    let bad = |msg: String| Error::Parse {
        path: "<matrix text>".into(),
        message: msg,
    };
    let mut out = Vec::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    while let Some(header) = lines.next() {
        let parts: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| bad(format!("expected section header, got {header:?}")))?
            .split_whitespace()
            .collect();
        if parts.len() != 3 {
            return Err(bad(format!("malformed header {header:?}")));
        }
        let rows: usize = parts[1].parse().map_err(|_| bad(format!("bad row count in {header:?}")))?;
        let cols: usize = parts[2].parse().map_err(|_| bad(format!("bad column count in {header:?}")))?;
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines.next().ok_or_else(|| bad(format!("section {} truncated", parts[0])))?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != cols {
                return Err(bad(format!("row {r} of {} has {} entries", parts[0], entries.len())));
            }
            for (c, e) in entries.iter().enumerate() {
                m[(r, c)] = parse_complex(e).ok_or_else(|| bad(format!("bad entry {e:?}")))?;
            }
        }
        out.push((parts[0].to_string(), m));
    }
    Ok(out)
}
