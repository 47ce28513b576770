//! Parser for the `d` attribute subset `M L C Z` (and relative forms).

use super::CubicSegment;
use crate::error::{Error, Result};
use crate::geom::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct Subpath {
    /// Segments as written; `L` is degree-elevated and `Z` adds no segment.
    pub segments: Vec<CubicSegment>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPathData {
    pub subpaths: Vec<Subpath>,
    /// Raw numeric scalars in the attribute, counted before any conversion.
    pub tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Cmd(char),
    Num(f64),
}

fn tokenize(d: &str) -> Result<Vec<Token>> {
    let b = d.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() || c == b',' {
            i += 1;
        } else if c.is_ascii_alphabetic() && c != b'e' && c != b'E' {
            out.push(Token::Cmd(c as char));
            i += 1;
        } else if c == b'+' || c == b'-' || c == b'.' || c.is_ascii_digit() {
            let start = i;
            if c == b'+' || c == b'-' {
                i += 1;
            }
            let mut seen_dot = false;
            let mut digits = 0;
            while i < b.len() && (b[i].is_ascii_digit() || (b[i] == b'.' && !seen_dot)) {
                seen_dot |= b[i] == b'.';
                digits += b[i].is_ascii_digit() as usize;
                i += 1;
            }
            if digits == 0 {
                return Err(Error::MalformedPath(format!("bad number at byte {start}")));
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let save = i;
                i += 1;
                if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                    i += 1;
                }
                let es = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if es == i {
                    i = save;
                }
            }
            let v: f64 = d[start..i]
                .parse()
                .map_err(|_| Error::MalformedPath(format!("bad number '{}'", &d[start..i])))?;
            out.push(Token::Num(v));
        } else {
            return Err(Error::UnsupportedCommand(d[i..].chars().next().unwrap()));
        }
    }
    Ok(out)
}

/// Parses path data. Each `M`/`m` starts a new subpath; extra coordinate
/// pairs after a move are implicit line-tos, and parameter groups of `L`/`C`
/// may repeat.
pub fn parse_path_data(d: &str) -> Result<ParsedPathData> {
    let toks = tokenize(d)?;
    let tokens = toks.iter().filter(|t| matches!(t, Token::Num(_))).count();
    let mut subpaths: Vec<Subpath> = Vec::new();
    let mut cur = Point::ZERO;
    let mut start = Point::ZERO;
    let mut open: Option<Subpath> = None;
    let mut i = 0;
    let take = |i: &mut usize, n: usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            match toks.get(*i) {
                Some(Token::Num(x)) => {
                    v.push(*x);
                    *i += 1;
                }
                _ => return Err(Error::MalformedPath(format!("expected {n} numbers"))),
            }
        }
        Ok(v)
    };
    let more_numbers = |i: usize| matches!(toks.get(i), Some(Token::Num(_)));
    while i < toks.len() {
        let cmd = match toks[i] {
            Token::Cmd(c) => c,
            Token::Num(_) => return Err(Error::MalformedPath("number without a command".into())),
        };
        i += 1;
        let rel = cmd.is_ascii_lowercase();
        match cmd.to_ascii_uppercase() {
            'M' => {
                let v = take(&mut i, 2)?;
                let p = Point::new(v[0], v[1]);
                cur = if rel { cur + p } else { p };
                start = cur;
                if let Some(sp) = open.take() {
                    subpaths.push(sp);
                }
                open = Some(Subpath { segments: Vec::new(), closed: false });
                while more_numbers(i) {
                    let v = take(&mut i, 2)?;
                    let p = Point::new(v[0], v[1]);
                    let next = if rel { cur + p } else { p };
                    open.as_mut().unwrap().segments.push(CubicSegment::line(cur, next));
                    cur = next;
                }
            }
            'L' => {
                let sp = open.as_mut().ok_or_else(|| Error::MalformedPath("L before M".into()))?;
                loop {
                    let v = take(&mut i, 2)?;
                    let p = Point::new(v[0], v[1]);
                    let next = if rel { cur + p } else { p };
                    sp.segments.push(CubicSegment::line(cur, next));
                    cur = next;
                    if !more_numbers(i) {
                        break;
                    }
                }
            }
            'C' => {
                let sp = open.as_mut().ok_or_else(|| Error::MalformedPath("C before M".into()))?;
                loop {
                    let v = take(&mut i, 6)?;
                    let off = if rel { cur } else { Point::ZERO };
                    let p1 = off + Point::new(v[0], v[1]);
                    let p2 = off + Point::new(v[2], v[3]);
                    let p3 = off + Point::new(v[4], v[5]);
                    sp.segments.push(CubicSegment::new(cur, p1, p2, p3));
                    cur = p3;
                    if !more_numbers(i) {
                        break;
                    }
                }
            }
            'Z' => {
                let mut sp =
                    open.take().ok_or_else(|| Error::MalformedPath("Z before M".into()))?;
                sp.closed = true;
                subpaths.push(sp);
                cur = start;
                if more_numbers(i) {
                    return Err(Error::MalformedPath("numbers after Z".into()));
                }
                // a later command continues from the closed subpath's start
                if matches!(toks.get(i), Some(Token::Cmd(c)) if !matches!(c, 'M' | 'm')) {
                    open = Some(Subpath { segments: Vec::new(), closed: false });
                }
            }
            _ => return Err(Error::UnsupportedCommand(cmd)),
        }
    }
    if let Some(sp) = open.take() {
        subpaths.push(sp);
    }
    Ok(ParsedPathData { subpaths, tokens })
}
