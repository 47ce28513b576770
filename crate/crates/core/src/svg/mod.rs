//! Cubic Bézier path model and the SVG subset the pipeline reads and writes.

mod document;
mod params;
mod path_data;

pub use document::{parse_svg, serialize_svg};
pub use params::{count_params, ParamCount};
pub use path_data::{parse_path_data, ParsedPathData, Subpath};

use crate::error::{invalid, Result};
use crate::geom::Point;

/// Straight-alpha color, channels in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgba {
    pub r: f64,
    pub g: f64,
    pub b: f64,
    pub a: f64,
}

impl Rgba {
    pub const BLACK: Rgba = Rgba { r: 0.0, g: 0.0, b: 0.0, a: 1.0 };

    pub fn opaque(rgb: [f64; 3]) -> Self {
        Rgba { r: rgb[0], g: rgb[1], b: rgb[2], a: 1.0 }
    }

    pub fn rgb(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSegment {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

impl CubicSegment {
    pub const fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Self {
        CubicSegment { p0, p1, p2, p3 }
    }

    /// Degree-elevated straight line.
    pub fn line(a: Point, b: Point) -> Self {
        CubicSegment::new(a, a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0), b)
    }

    /// Bernstein evaluation without range checks.
    #[inline]
    pub fn eval(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let (b0, b1, b2, b3) = (u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t);
        self.p0 * b0 + self.p1 * b1 + self.p2 * b2 + self.p3 * b3
    }

    /// de Casteljau split at `t`.
    pub fn split(&self, t: f64) -> (CubicSegment, CubicSegment) {
        let p01 = self.p0.lerp(self.p1, t);
        let p12 = self.p1.lerp(self.p2, t);
        let p23 = self.p2.lerp(self.p3, t);
        let p012 = p01.lerp(p12, t);
        let p123 = p12.lerp(p23, t);
        let m = p012.lerp(p123, t);
        (
            CubicSegment::new(self.p0, p01, p012, m),
            CubicSegment::new(m, p123, p23, self.p3),
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.p0, self.p1, self.p2, self.p3].iter().all(|p| p.is_finite())
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> CubicSegment {
        CubicSegment::new(f(self.p0), f(self.p1), f(self.p2), f(self.p3))
    }

    /// Max distance of the inner control points from the chord segment,
    /// an upper bound on the curve's deviation from the chord.
    fn flatness(&self) -> f64 {
        let d = |p: Point| {
            let t = crate::geom::project_on_segment(p, self.p0, self.p3);
            p.dist(self.p0.lerp(self.p3, t))
        };
        d(self.p1).max(d(self.p2))
    }
}

/// `B(t)` for `t` in `[0, 1]`.
pub fn bezier_point(seg: &CubicSegment, t: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("bezier parameter {t} outside [0, 1]")));
    }
    Ok(seg.eval(t))
}

const MAX_FLATTEN_DEPTH: u32 = 18;

/// Adaptive subdivision into a polyline that stays within `tol` of the curve.
/// The first and last points are `p0` and `p3` exactly.
pub fn flatten(seg: &CubicSegment, tol: f64) -> Vec<Point> {
    let mut out = vec![seg.p0];
    flatten_into(seg, tol.max(1e-9), &mut out);
    out
}

/// Appends the flattened polyline of `seg` without its first point.
pub(crate) fn flatten_into(seg: &CubicSegment, tol: f64, out: &mut Vec<Point>) {
    fn rec(seg: &CubicSegment, tol: f64, depth: u32, out: &mut Vec<Point>) {
        if depth >= MAX_FLATTEN_DEPTH || seg.flatness() <= tol {
            out.push(seg.p3);
            return;
        }
        let (a, b) = seg.split(0.5);
        rec(&a, tol, depth + 1, out);
        rec(&b, tol, depth + 1, out);
    }
    rec(seg, tol, 0, out);
}

/// Ordered cubic segments with a solid fill.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPath {
    pub segments: Vec<CubicSegment>,
    pub closed: bool,
    pub fill: Rgba,
}

impl VectorPath {
    /// Checks finiteness, endpoint continuity and closure (all within 1e-6).
    pub fn new(segments: Vec<CubicSegment>, closed: bool, fill: Rgba) -> Result<Self> {
        let p = VectorPath { segments, closed, fill };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(invalid("path has no segments"));
        }
        if !self.segments.iter().all(CubicSegment::is_finite) {
            return Err(invalid("non-finite control point"));
        }
        for w in self.segments.windows(2) {
            if w[0].p3.dist(w[1].p0) > 1e-6 {
                return Err(invalid("adjacent segments do not share an endpoint"));
            }
        }
        if self.closed && self.segments.last().unwrap().p3.dist(self.segments[0].p0) > 1e-6 {
            return Err(invalid("closed path does not return to its start"));
        }
        Ok(())
    }

    /// Polyline through the whole path; the closing vertex is not repeated.
    pub fn flatten(&self, tol: f64) -> Vec<Point> {
        let mut out = vec![self.segments[0].p0];
        for s in &self.segments {
            flatten_into(s, tol, &mut out);
        }
        if self.closed && out.len() > 1 {
            out.pop();
        }
        out
    }

    pub fn anchors(&self) -> Vec<Point> {
        let mut a: Vec<Point> = self.segments.iter().map(|s| s.p0).collect();
        if !self.closed {
            a.push(self.segments.last().unwrap().p3);
        }
        a
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> VectorPath {
        VectorPath {
            segments: self.segments.iter().map(|s| s.map(&f)).collect(),
            closed: self.closed,
            fill: self.fill,
        }
    }
}

/// Painter's-order list of paths; the first path is at the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgDocument {
    pub width: usize,
    pub height: usize,
    pub paths: Vec<VectorPath>,
}

impl SvgDocument {
    pub fn new(width: usize, height: usize, paths: Vec<VectorPath>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("document size must be positive"));
        }
        Ok(SvgDocument { width, height, paths })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn de_casteljau(s: &CubicSegment, t: f64) -> Point {
        let mut pts = vec![s.p0, s.p1, s.p2, s.p3];
        while pts.len() > 1 {
            pts = pts.windows(2).map(|w| w[0].lerp(w[1], t)).collect();
        }
        pts[0]
    }

    fn seg() -> CubicSegment {
        CubicSegment::new(
            Point::new(1.0, 2.0),
            Point::new(7.5, -3.0),
            Point::new(-2.0, 9.0),
            Point::new(10.0, 4.0),
        )
    }

    #[test]
    fn bezier_endpoints_and_range() {
        let s = seg();
        assert_eq!(bezier_point(&s, 0.0).unwrap(), s.p0);
        assert_eq!(bezier_point(&s, 1.0).unwrap(), s.p3);
        assert!(bezier_point(&s, 1.01).is_err());
        assert!(bezier_point(&s, -0.1).is_err());
    }

    #[test]
    fn collinear_midpoint() {
        let s = CubicSegment::line(Point::new(0.0, 0.0), Point::new(9.0, 3.0));
        let m = bezier_point(&s, 0.5).unwrap();
        assert!(m.dist(Point::new(4.5, 1.5)) < 1e-12);
    }

    #[test]
    fn matches_de_casteljau() {
        let s = seg();
        let a = bezier_point(&s, 0.37).unwrap();
        assert!(a.dist(de_casteljau(&s, 0.37)) < 1e-12);
    }

    #[test]
    fn flatten_line_is_two_points() {
        let s = CubicSegment::line(Point::new(0.0, 0.0), Point::new(5.0, 5.0));
        assert_eq!(flatten(&s, 0.1).len(), 2);
    }

    #[test]
    fn flatten_quarter_circle_within_tolerance() {
        let k = 0.5522847498;
        let r = 50.0;
        let s = CubicSegment::new(
            Point::new(r, 0.0),
            Point::new(r, k * r),
            Point::new(k * r, r),
            Point::new(0.0, r),
        );
        let poly = flatten(&s, 0.1);
        assert_eq!(poly[0], s.p0);
        assert_eq!(*poly.last().unwrap(), s.p3);
        for i in 0..=1000 {
            let p = s.eval(i as f64 / 1000.0);
            let d = poly
                .windows(2)
                .map(|w| {
                    let t = crate::geom::project_on_segment(p, w[0], w[1]);
                    p.dist(w[0].lerp(w[1], t))
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 0.1 + 1e-12, "{d}");
        }
        let mut last = 0;
        for k in 0..8 {
            let n = flatten(&s, 1.0 / (1 << k) as f64).len();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn path_validation() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(4.0, 0.0);
        let c = Point::new(0.0, 4.0);
        let segs = vec![CubicSegment::line(a, b), CubicSegment::line(b, c), CubicSegment::line(c, a)];
        assert!(VectorPath::new(segs.clone(), true, Rgba::BLACK).is_ok());
        assert!(VectorPath::new(segs[..2].to_vec(), true, Rgba::BLACK).is_err());
        assert!(VectorPath::new(vec![segs[0], segs[2]], false, Rgba::BLACK).is_err());
        assert!(SvgDocument::new(0, 5, vec![]).is_err());
    }
}
