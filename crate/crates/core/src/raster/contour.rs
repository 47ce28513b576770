//! Boundary tracing and arc-length utilities on closed or open polylines.

use super::{connected_components, largest_component, BinaryMask, Connectivity};
use crate::error::{invalid, Error, Result};
use crate::geom::{project_on_segment, signed_area, Point};

/// Polyline with cumulative arc length.
///
/// Outer boundaries run counterclockwise on screen (negative shoelace area
/// in image coordinates); hole boundaries run clockwise and carry `is_hole`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Point>,
    closed: bool,
    cumlen: Vec<f64>,
    length: f64,
    pub is_hole: bool,
}

impl Contour {
    /// Consecutive duplicate vertices (and a repeated closing vertex) are dropped.
    pub fn new(points: Vec<Point>, closed: bool) -> Result<Self> {
        let mut pts: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !p.is_finite() {
                return Err(invalid("non-finite contour vertex"));
            }
            if pts.last().is_none_or(|q| q.dist(p) > 1e-12) {
                pts.push(p);
            }
        }
        if closed {
            while pts.len() > 1 && pts[0].dist(*pts.last().unwrap()) <= 1e-12 {
                pts.pop();
            }
        }
        let min = if closed { 3 } else { 2 };
        if pts.len() < min {
            return Err(Error::ContourTooSmall(pts.len()));
        }
        let mut cumlen = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cumlen.push(0.0);
        for w in pts.windows(2) {
            acc += w[0].dist(w[1]);
            cumlen.push(acc);
        }
        let length = if closed { acc + pts[pts.len() - 1].dist(pts[0]) } else { acc };
        Ok(Contour { points: pts, closed, cumlen, length, is_hole: false })
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[inline]
    pub fn closed(&self) -> bool {
        self.closed
    }

    #[inline]
    pub fn cumlen(&self) -> &[f64] {
        &self.cumlen
    }

    /// Total arc length, including the closing edge of closed contours.
    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    fn segment(&self, i: usize) -> (Point, Point, f64) {
        let a = self.points[i];
        let b = self.points[(i + 1) % self.points.len()];
        (a, b, self.cumlen[i])
    }

    /// Wraps arc positions on closed contours and clamps on open ones.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if self.closed {
            let r = s.rem_euclid(self.length);
            if r >= self.length {
                0.0
            } else {
                r
            }
        } else {
            s.clamp(0.0, self.length)
        }
    }

    /// Point at arc position `s`.
    pub fn point_at(&self, s: f64) -> Point {
        let s = self.wrap_s(s);
        let i = match self.cumlen.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => return self.points[i],
            Err(i) => i - 1,
        };
        let (a, b, s0) = self.segment(i.min(self.segment_count() - 1));
        let seg = a.dist(b);
        if seg <= 0.0 {
            return a;
        }
        a.lerp(b, ((s - s0) / seg).clamp(0.0, 1.0))
    }

    /// Polyline from arc position `s0` forward to `s1` (wrapping on closed
    /// contours), including both end points and every vertex in between.
    pub fn route(&self, s0: f64, s1: f64) -> Vec<Point> {
        let s0 = self.wrap_s(s0);
        let end = if self.closed {
            let e = self.wrap_s(s1);
            if e <= s0 {
                e + self.length
            } else {
                e
            }
        } else {
            s1.clamp(s0, self.length)
        };
        let mut pts = vec![self.point_at(s0)];
        let laps = if self.closed { 2 } else { 1 };
        for lap in 0..laps {
            for (i, &c) in self.cumlen.iter().enumerate() {
                let s = c + lap as f64 * self.length;
                if s > s0 + 1e-12 && s < end - 1e-12 {
                    pts.push(self.points[i]);
                }
            }
        }
        pts.push(self.point_at(end));
        pts
    }

    /// Offsets the loop by `d` along its outward normal (inward for negative
    /// `d`), mitering vertices so straight edges move exactly by `d`.
    /// Miters are limited to `2|d|`.
    pub fn offset(&self, d: f64) -> Result<Contour> {
        if !self.closed || d == 0.0 {
            return Ok(self.clone());
        }
        let n = self.points.len();
        // outward = left-hand normal for counterclockwise-on-screen loops
        let sign = if self.signed_area() <= 0.0 { 1.0 } else { -1.0 };
        let normal = |a: Point, b: Point| (b - a).normalized().map(|t| Point::new(-t.y, t.x) * sign);
        let pts = (0..n)
            .map(|i| {
                let prev = self.points[(i + n - 1) % n];
                let next = self.points[(i + 1) % n];
                let cur = self.points[i];
                let n1 = normal(prev, cur).unwrap_or(Point::ZERO);
                let n2 = normal(cur, next).unwrap_or(n1);
                let sum = n1 + n2;
                let denom = 1.0 + n1.dot(n2);
                let m = if denom > 0.5 {
                    sum * (1.0 / denom)
                } else {
                    sum.normalized().unwrap_or(n1) * 2.0
                };
                cur + m * d
            })
            .collect();
        let mut c = Contour::new(pts, true)?;
        c.is_hole = self.is_hole;
        Ok(c)
    }
}

// Clockwise on screen, starting west.
const MOORE: [(i64, i64); 8] =
    [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

fn moore_index(d: (i64, i64)) -> usize {
    MOORE.iter().position(|&m| m == d).expect("backtrack must be a neighbor")
}

/// Moore-neighbor tracing with Jacob's stopping criterion, from the first
/// foreground pixel in raster order.
fn moore_trace(mask: &BinaryMask, start: (i64, i64), area: usize) -> Vec<Point> {
    let b0 = (start.0 - 1, start.1);
    let mut c = start;
    let mut b = b0;
    let mut pts = vec![Point::new(start.0 as f64, start.1 as f64)];
    let cap = 4 * area + 16;
    for _ in 0..cap {
        let k = moore_index((b.0 - c.0, b.1 - c.1));
        let mut next = None;
        for i in 1..=8 {
            let d = MOORE[(k + i) % 8];
            let n = (c.0 + d.0, c.1 + d.1);
            if mask.get_signed(n.0, n.1) {
                let pd = MOORE[(k + i - 1) % 8];
                next = Some((n, (c.0 + pd.0, c.1 + pd.1)));
                break;
            }
        }
        let Some((n, nb)) = next else { break };
        c = n;
        b = nb;
        if c == start && b == b0 {
            break;
        }
        pts.push(Point::new(c.0 as f64, c.1 as f64));
    }
    pts
}

fn first_pixel(mask: &BinaryMask) -> Option<(i64, i64)> {
    let i = mask.bits().iter().position(|b| *b)?;
    Some(((i % mask.width()) as i64, (i / mask.width()) as i64))
}

fn oriented(mut pts: Vec<Point>, want_negative: bool) -> Vec<Point> {
    let a = signed_area(&pts);
    if (want_negative && a > 0.0) || (!want_negative && a < 0.0) {
        pts[1..].reverse();
    }
    pts
}

/// One closed contour per 8-connected component (outer boundary through the
/// centers of its boundary pixels), followed by one contour per hole
/// (4-connected background region not touching the border, traced along
/// the hole pixels). Components whose boundary has fewer than three
/// vertices are rejected; such tiny holes are skipped.
pub fn trace_contour(mask: &BinaryMask) -> Result<Vec<Contour>> {
    let labels = connected_components(mask, Connectivity::Eight);
    let areas = labels.areas();
    let mut out = Vec::new();
    for l in 1..=labels.count {
        let comp = labels.mask_of(l as u32);
        let start = first_pixel(&comp).expect("label has pixels");
        let pts = moore_trace(&comp, start, areas[l]);
        if pts.len() < 3 {
            return Err(Error::ContourTooSmall(pts.len()));
        }
        out.push(Contour::new(oriented(pts, true), true)?);
    }
    let bg = connected_components(&mask.invert(), Connectivity::Four);
    let bg_areas = bg.areas();
    let (w, h) = (mask.width(), mask.height());
    let mut touches = vec![false; bg.count + 1];
    for x in 0..w {
        touches[bg.get(x, 0) as usize] = true;
        touches[bg.get(x, h - 1) as usize] = true;
    }
    for y in 0..h {
        touches[bg.get(0, y) as usize] = true;
        touches[bg.get(w - 1, y) as usize] = true;
    }
    for l in 1..=bg.count {
        if touches[l] {
            continue;
        }
        let hole = bg.mask_of(l as u32);
        let start = first_pixel(&hole).expect("label has pixels");
        let pts = moore_trace(&hole, start, bg_areas[l]);
        if pts.len() < 3 {
            continue;
        }
        if let Ok(mut c) = Contour::new(oriented(pts, false), true) {
            c.is_hole = true;
            out.push(c);
        }
    }
    Ok(out)
}

/// Outer contour of the largest 8-connected component.
pub fn largest_outer_contour(mask: &BinaryMask) -> Result<Contour> {
    let comp = largest_component(mask).ok_or(Error::EmptyComponent)?;
    let start = first_pixel(&comp).expect("non-empty");
    let pts = moore_trace(&comp, start, comp.count());
    if pts.len() < 3 {
        return Err(Error::ContourTooSmall(pts.len()));
    }
    Contour::new(oriented(pts, true), true)
}

/// `n` vertices at equal arc-length spacing, starting at the first vertex.
pub fn resample_arclength(c: &Contour, n: usize) -> Result<Contour> {
    if n < 3 {
        return Err(invalid(format!("resample count {n} < 3")));
    }
    let pts: Vec<Point> = if c.closed {
        let step = c.length / n as f64;
        (0..n).map(|k| c.point_at(k as f64 * step)).collect()
    } else {
        let step = c.length / (n - 1) as f64;
        (0..n)
            .map(|k| if k == n - 1 { *c.points.last().unwrap() } else { c.point_at(k as f64 * step) })
            .collect()
    };
    let mut out = Contour::new(pts, c.closed)?;
    out.is_hole = c.is_hole;
    Ok(out)
}

/// Exact distance from `p` to the contour and the arc position of the
/// nearest point (smallest `s` on ties).
pub fn point_contour_distance(p: Point, c: &Contour) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..c.segment_count() {
        let (a, b, s0) = c.segment(i);
        let t = project_on_segment(p, a, b);
        let d = p.dist(a.lerp(b, t));
        if d < best.0 {
            best = (d, c.wrap_s(s0 + t * a.dist(b)));
        }
    }
    best
}
