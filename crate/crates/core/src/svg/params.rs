use std::ops::Add;

use super::{parse_svg, SvgDocument};
use crate::error::Result;

/// Editable parameter count: raw numeric path tokens plus four appearance
/// values (RGBA) per path element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParamCount {
    pub n_geom: usize,
    pub n_paths: usize,
    pub params: usize,
}

impl ParamCount {
    pub fn new(n_geom: usize, n_paths: usize) -> Self {
        ParamCount { n_geom, n_paths, params: n_geom + 4 * n_paths }
    }

    /// Count for a document as it would be serialized: `M` plus one `C`
    /// per segment, `Z` carries no numbers.
    pub fn of_document(doc: &SvgDocument) -> Self {
        let n_geom = doc.paths.iter().map(|p| 2 + 6 * p.segments.len()).sum();
        ParamCount::new(n_geom, doc.paths.len())
    }
}

impl Add for ParamCount {
    type Output = ParamCount;
    fn add(self, o: ParamCount) -> ParamCount {
        ParamCount::new(self.n_geom + o.n_geom, self.n_paths + o.n_paths)
    }
}

/// Counts parameters of SVG text.
pub fn count_params(svg: &str) -> Result<ParamCount> {
    Ok(parse_svg(svg)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = "<svg width=\"8\" height=\"8\"><path d=\"M 0 0 C 1 1 2 2 3 3 Z\"/></svg>";

    #[test]
    fn single_path() {
        assert_eq!(count_params(ONE).unwrap(), ParamCount::new(8, 1));
        assert_eq!(count_params(ONE).unwrap().params, 12);
    }

    #[test]
    fn additive() {
        let two = "<svg width=\"8\" height=\"8\"><path d=\"M 0 0 C 1 1 2 2 3 3 Z\"/><path d=\"M 0 0 C 1 1 2 2 3 3 Z\"/></svg>";
        let c = count_params(two).unwrap();
        assert_eq!(c.params, 24);
        assert_eq!(c, count_params(ONE).unwrap() + count_params(ONE).unwrap());
    }

    #[test]
    fn parse_errors_propagate() {
        let bad = "<svg width=\"8\" height=\"8\"><path d=\"M 0 0 Q 1 1 2 2\"/></svg>";
        assert!(count_params(bad).is_err());
    }
}
