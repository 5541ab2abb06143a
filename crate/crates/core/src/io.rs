//! Line-oriented helpers shared by the text format parsers.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Cursor over the lines of a text document, tracking 1-based line numbers
/// for error messages.
pub(crate) struct LineReader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> LineReader<'a> {
    pub fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    /// 1-based number of the line most recently returned.
    pub fn line_no(&self) -> usize {
        self.pos
    }

    pub fn next_line(&mut self) -> Option<&'a str> {
        let line = self.lines.get(self.pos).copied();
        if line.is_some() {
            self.pos += 1;
        }
        line
    }

    /// Next line that is not blank. Blank lines act as separators between
    /// sections in the multi-matrix formats.
    pub fn next_nonempty(&mut self) -> Option<&'a str> {
        loop {
            let line = self.next_line()?;
            if !line.trim().is_empty() {
                return Some(line);
            }
        }
    }

    pub fn expect_nonempty(&mut self, what: &str) -> Result<&'a str> {
        self.next_nonempty()
            .ok_or_else(|| Error::parse(self.pos, format!("unexpected end of input, expected {what}")))
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.pos, message)
    }
}

/// Parses every whitespace-separated token on a line.
pub(crate) fn parse_tokens<T: FromStr>(line: &str, line_no: usize) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| Error::parse(line_no, format!("invalid token `{tok}`")))
        })
        .collect()
}

/// Parses a line that must contain exactly `n` integers.
pub(crate) fn parse_exact<T: FromStr>(line: &str, n: usize, line_no: usize, what: &str) -> Result<Vec<T>> {
    let tokens = parse_tokens::<T>(line, line_no)?;
    if tokens.len() != n {
        return Err(Error::parse(
            line_no,
            format!("expected {n} fields for {what}, found {}", tokens.len()),
        ));
    }
    Ok(tokens)
}
