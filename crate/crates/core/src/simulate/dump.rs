//! Plain-text pattern dumps.
//!
//! ```text
//! # window 100 100
//! # lambda_p 1
//! # delta 0.5
//! # seed 1234
//! # columns x y mark label
//! 12.5 3.25 0.0625 MHC
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a dump back
//! reproduces the pattern bit for bit.

use std::io::{BufRead, Write};

use super::{Label, MarkedPattern, MarkedPoint, Window};
use crate::error::{Error, Result};

/// Header metadata carried alongside a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PatternHeader {
    pub lambda_p: Option<f64>,
    pub delta: Option<f64>,
}

pub fn write_pattern<W: Write>(
    mut out: W,
    pattern: &MarkedPattern,
    header: PatternHeader,
) -> std::io::Result<()> {
    writeln!(out, "# window {} {}", pattern.window.width, pattern.window.height)?;
    if let Some(l) = header.lambda_p {
        writeln!(out, "# lambda_p {l}")?;
    }
    if let Some(d) = header.delta {
        writeln!(out, "# delta {d}")?;
    }
    writeln!(out, "# seed {}", pattern.seed)?;
    writeln!(out, "# columns x y mark label")?;
    for p in &pattern.points {
        writeln!(out, "{} {} {} {}", p.x, p.y, p.mark, p.label)?;
    }
    Ok(())
}

fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Format { line, reason: format!("missing {what}") })?;
    tok.parse::<f64>()
        .map_err(|e| Error::Format { line, reason: format!("bad {what} '{tok}': {e}") })
}

pub fn read_pattern<R: BufRead>(input: R) -> Result<(MarkedPattern, PatternHeader)> {
    let mut window = None;
    let mut seed = None;
    let mut header = PatternHeader::default();
    let mut points = Vec::new();

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Format { line: lineno, reason: e.to_string() })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut toks = rest.split_whitespace();
            match toks.next() {
                Some("window") => {
                    let w = parse_f64(toks.next(), lineno, "window width")?;
                    let h = parse_f64(toks.next(), lineno, "window height")?;
                    window = Some(
                        Window::new(w, h)
                            .map_err(|e| Error::Format { line: lineno, reason: e.to_string() })?,
                    );
                }
                Some("lambda_p") => header.lambda_p = Some(parse_f64(toks.next(), lineno, "lambda_p")?),
                Some("delta") => header.delta = Some(parse_f64(toks.next(), lineno, "delta")?),
                Some("seed") => {
                    let tok = toks.next().unwrap_or("");
                    seed = Some(tok.parse::<u64>().map_err(|e| Error::Format {
                        line: lineno,
                        reason: format!("bad seed '{tok}': {e}"),
                    })?);
                }
                _ => {}
            }
            continue;
        }
        let window = window.ok_or_else(|| Error::Format {
            line: lineno,
            reason: "point before '# window' header".into(),
        })?;
        let mut toks = line.split_whitespace();
        let x = parse_f64(toks.next(), lineno, "x")?;
        let y = parse_f64(toks.next(), lineno, "y")?;
        let mark = parse_f64(toks.next(), lineno, "mark")?;
        let label: Label = toks
            .next()
            .ok_or_else(|| Error::Format { line: lineno, reason: "missing label".into() })?
            .parse()
            .map_err(|e: Error| Error::Format { line: lineno, reason: e.to_string() })?;
        if toks.next().is_some() {
            return Err(Error::Format { line: lineno, reason: "trailing tokens".into() });
        }
        if !window.contains(x, y) {
            return Err(Error::Format { line: lineno, reason: format!("({x}, {y}) outside window") });
        }
        points.push(MarkedPoint { x, y, mark, label });
    }

    let window = window.ok_or_else(|| Error::Format { line: 0, reason: "no '# window' header".into() })?;
    let seed = seed.ok_or_else(|| Error::Format { line: 0, reason: "no '# seed' header".into() })?;
    Ok((MarkedPattern { window, points, seed }, header))
}
