//! Line-oriented helpers shared by the plain-text file formats.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Iterator over meaningful lines: blank lines and `#` comments are skipped,
/// line numbers are 1-based positions in the original text.
pub(crate) struct DataLines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> DataLines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last_line: 0,
        }
    }

    /// Next data line split into whitespace-separated fields.
    pub(crate) fn next_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            self.last_line = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((idx + 1, line.split_whitespace().collect()));
        }
        Err(Error::parse(
            self.last_line + 1,
            format!("unexpected end of input, expected {what}"),
        ))
    }

    pub(crate) fn expect_end(&mut self) -> Result<()> {
        match self.next_fields("") {
            Ok((line, _)) => Err(Error::parse(line, "trailing data after last record")),
            Err(_) => Ok(()),
        }
    }
}

pub(crate) fn field<T: FromStr>(fields: &[&str], k: usize, line: usize, what: &str) -> Result<T> {
    let raw = fields
        .get(k)
        .ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    raw.parse::<T>()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} from {raw:?}")))
}

pub(crate) fn finite_field(fields: &[&str], k: usize, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field(fields, k, line, what)?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{what} is not finite")));
    }
    Ok(v)
}

pub(crate) fn expect_len(fields: &[&str], n: usize, line: usize) -> Result<()> {
    if fields.len() != n {
        return Err(Error::parse(
            line,
            format!("expected {n} fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

/// Formats a float with 17 significant digits, which round-trips bit-exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
