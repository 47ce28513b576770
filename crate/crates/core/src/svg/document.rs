use std::fmt::Write;

use super::{parse_path_data, ParamCount, Rgba, SvgDocument, VectorPath};
use crate::error::{Error, Result};
use crate::svg::CubicSegment;

fn num(out: &mut String, v: f64) {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        out.push_str("0.000");
    } else {
        out.push_str(&s);
    }
}

fn channel(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn path_data(p: &VectorPath) -> String {
    let mut d = String::new();
    let s0 = p.segments[0].p0;
    d.push_str("M ");
    num(&mut d, s0.x);
    d.push(' ');
    num(&mut d, s0.y);
    for s in &p.segments {
        d.push_str(" C");
        for q in [s.p1, s.p2, s.p3] {
            d.push(' ');
            num(&mut d, q.x);
            d.push(' ');
            num(&mut d, q.y);
        }
    }
    if p.closed {
        d.push_str(" Z");
    }
    d
}

/// Deterministic UTF-8 output with LF line endings and 3-decimal coordinates.
pub fn serialize_svg(doc: &SvgDocument) -> String {
    let mut out = String::new();
    let (w, h) = (doc.width, doc.height);
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )
    .unwrap();
    for p in &doc.paths {
        let f = p.fill;
        write!(
            out,
            "<path d=\"{}\" fill=\"#{:02x}{:02x}{:02x}\"",
            path_data(p),
            channel(f.r),
            channel(f.g),
            channel(f.b)
        )
        .unwrap();
        if f.a < 1.0 {
            out.push_str(" fill-opacity=\"");
            num(&mut out, f.a.clamp(0.0, 1.0));
            out.push('"');
        }
        out.push_str("/>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Attribute value lookup inside a single tag's text.
fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let mut rest = tag;
    while let Some(pos) = rest.find(name) {
        let before_ok = pos == 0 || rest.as_bytes()[pos - 1].is_ascii_whitespace();
        let after = rest[pos + name.len()..].trim_start();
        if before_ok {
            if let Some(after) = after.strip_prefix('=') {
                let after = after.trim_start();
                let q = after.chars().next()?;
                if q == '"' || q == '\'' {
                    let body = &after[1..];
                    return body.find(q).map(|end| &body[..end]);
                }
            }
        }
        rest = &rest[pos + name.len()..];
    }
    None
}

fn tags<'a>(text: &'a str, name: &str) -> Vec<&'a str> {
    let open = format!("<{name}");
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find(&open) {
        let after = &rest[pos + open.len()..];
        if after.starts_with(|c: char| c.is_ascii_whitespace() || c == '/' || c == '>') {
            let end = after.find('>').unwrap_or(after.len());
            out.push(&after[..end]);
            rest = &after[end..];
        } else {
            rest = after;
        }
    }
    out
}

fn parse_fill(v: Option<&str>) -> Rgba {
    let Some(v) = v.map(str::trim) else { return Rgba::BLACK };
    if v == "none" {
        return Rgba { a: 0.0, ..Rgba::BLACK };
    }
    let hex = |s: &str| u8::from_str_radix(s, 16).ok().map(|x| x as f64 / 255.0);
    if let Some(h) = v.strip_prefix('#') {
        match h.len() {
            6 => {
                if let (Some(r), Some(g), Some(b)) = (hex(&h[0..2]), hex(&h[2..4]), hex(&h[4..6])) {
                    return Rgba { r, g, b, a: 1.0 };
                }
            }
            3 => {
                let d = |i: usize| hex(&h[i..i + 1].repeat(2));
                if let (Some(r), Some(g), Some(b)) = (d(0), d(1), d(2)) {
                    return Rgba { r, g, b, a: 1.0 };
                }
            }
            _ => {}
        }
    }
    Rgba::BLACK
}

fn parse_dim(v: Option<&str>) -> Option<usize> {
    let v = v?.trim().trim_end_matches("px");
    let f: f64 = v.parse().ok()?;
    (f > 0.0).then(|| f.round() as usize)
}

/// Parses the subset written by [`serialize_svg`] (plus `L` and relative
/// commands). Multiple subpaths in one element become separate paths;
/// their tokens still count against the original element. Elements with a
/// `transform` attribute are rejected.
pub fn parse_svg(text: &str) -> Result<(SvgDocument, ParamCount)> {
    let svg = tags(text, "svg")
        .into_iter()
        .next()
        .ok_or_else(|| Error::Format("no <svg> element".into()))?;
    let (mut w, mut h) = (parse_dim(attr(svg, "width")), parse_dim(attr(svg, "height")));
    if let Some(vb) = attr(svg, "viewBox") {
        let v: Vec<f64> = vb
            .split(|c: char| c.is_ascii_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .filter_map(|s| s.parse().ok())
            .collect();
        if v.len() == 4 {
            w = w.or(Some(v[2].round() as usize));
            h = h.or(Some(v[3].round() as usize));
        }
    }
    let (w, h) = match (w, h) {
        (Some(w), Some(h)) if w > 0 && h > 0 => (w, h),
        _ => return Err(Error::Format("svg size missing".into())),
    };
    if attr(svg, "transform").is_some() {
        return Err(Error::Format("transform attributes are not supported".into()));
    }
    let mut paths = Vec::new();
    let mut count = ParamCount::default();
    for tag in tags(text, "path") {
        if attr(tag, "transform").is_some() {
            return Err(Error::Format("transform attributes are not supported".into()));
        }
        let d = attr(tag, "d").unwrap_or("");
        let parsed = parse_path_data(d)?;
        count.n_geom += parsed.tokens;
        count.n_paths += 1;
        let mut fill = parse_fill(attr(tag, "fill"));
        if let Some(op) = attr(tag, "fill-opacity").and_then(|s| s.trim().parse::<f64>().ok()) {
            fill.a = op.clamp(0.0, 1.0);
        }
        for sp in parsed.subpaths {
            let mut segments = sp.segments;
            if segments.is_empty() {
                continue;
            }
            if sp.closed {
                let (first, last) = (segments[0].p0, segments.last().unwrap().p3);
                if first.dist(last) > 1e-6 {
                    segments.push(CubicSegment::line(last, first));
                }
            }
            paths.push(VectorPath::new(segments, sp.closed, fill)?);
        }
    }
    count.params = count.n_geom + 4 * count.n_paths;
    Ok((SvgDocument::new(w, h, paths)?, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    #[test]
    fn one_closed_path() {
        let a = Point::new(1.0, 2.0);
        let seg = CubicSegment::new(a, Point::new(5.0, 1.0), Point::new(3.0, 8.0), a);
        let p = VectorPath::new(vec![seg], true, Rgba { r: 1.0, g: 0.5, b: 0.0, a: 0.5 }).unwrap();
        let doc = SvgDocument::new(10, 10, vec![p]).unwrap();
        let s = serialize_svg(&doc);
        assert!(s.contains("d=\"M 1.000 2.000 C 5.000 1.000 3.000 8.000 1.000 2.000 Z\""));
        assert!(s.contains("fill=\"#ff8000\" fill-opacity=\"0.500\""));
        let (back, count) = parse_svg(&s).unwrap();
        assert_eq!(count.n_geom, 8);
        assert_eq!(count.params, 12);
        assert_eq!(serialize_svg(&back), s);
    }

    #[test]
    fn empty_document() {
        let doc = SvgDocument::new(4, 3, vec![]).unwrap();
        let s = serialize_svg(&doc);
        assert!(s.contains("viewBox=\"0 0 4 3\""));
        assert!(!s.contains("<path"));
        let (back, c) = parse_svg(&s).unwrap();
        assert_eq!(back, doc);
        assert_eq!(c.params, 0);
    }

    #[test]
    fn transform_rejected() {
        let s = "<svg width=\"4\" height=\"4\"><path transform=\"scale(2)\" d=\"M 0 0 L 1 1\"/></svg>";
        assert!(matches!(parse_svg(s), Err(Error::Format(_))));
    }

    #[test]
    fn multiple_subpaths_split() {
        let s = "<svg viewBox=\"0 0 8 8\"><path d=\"M 0 0 L 4 0 L 4 4 Z M 5 5 L 6 5 L 6 6 Z\" fill=\"#00f\"/></svg>";
        let (doc, c) = parse_svg(s).unwrap();
        assert_eq!(doc.paths.len(), 2);
        assert_eq!(c.n_paths, 1);
        assert_eq!(c.n_geom, 12);
        assert_eq!(doc.paths[0].segments.len(), 3);
        assert_eq!(doc.paths[1].fill.b, 1.0);
    }
}
