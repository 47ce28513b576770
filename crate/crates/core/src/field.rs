//! Sparse anchor fields: construction, heuristic anchor proposal and
//! 16-bit PGM interchange.

use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::geom::Point;
use crate::raster::pnm::{decode_pgm16, encode_pgm16};
use crate::raster::{binarize, largest_outer_contour, resample_arclength, Contour, GrayImage};

/// Row-major scalar field in [0,1], evaluated at pixel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl AnchorField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(invalid(format!("field size {width}x{height} does not match {} values", values.len())));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("field values must lie in [0,1]"));
        }
        Ok(AnchorField { width, height, values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        AnchorField { width, height, values: vec![0.0; width * height] }
    }

    /// Builds a field from arbitrary values, clamping into [0,1] (NaN becomes 0).
    pub fn from_clamped(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height);
        let values = values.into_iter().map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }).collect();
        AnchorField { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Value at the nearest pixel center; 0 outside the grid.
    pub fn at(&self, p: Point) -> f64 {
        let (x, y) = (p.x.round(), p.y.round());
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            return 0.0;
        }
        self.get(x as usize, y as usize)
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(self.width, self.height, self.values.clone()).expect("field values are in range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalConfig {
    /// Minimum arc distance between proposed anchors (pixels).
    pub min_sep: f64,
    /// Half-width of the chord used for the turning-angle estimate (pixels).
    pub curvature_window: f64,
    /// Interior angles below this (degrees) are always corners.
    pub corner_angle: f64,
    /// Floor for the adaptive curvature-maximum threshold (degrees of turn).
    pub min_turn: f64,
    /// Spans whose best tangent-constrained cubic strays further than this
    /// from the contour (pixels) are split at their worst point.
    pub fit_tol: f64,
    /// Upper bound on the number of proposed anchors.
    pub max_anchors: usize,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig { min_sep: 6.0, curvature_window: 8.0, corner_angle: 135.0, min_turn: 25.0, fit_tol: 1.25, max_anchors: 24 }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_sep >= 0.0
            && self.curvature_window >= 1.0
            && self.corner_angle > 0.0
            && self.corner_angle < 180.0
            && (0.0..180.0).contains(&self.min_turn)
            && self.fit_tol > 0.0
            && self.max_anchors >= 3;
        if ok {
            Ok(())
        } else {
            Err(invalid("invalid proposal config"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub sigma_a: f64,
    pub sigma_gamma: f64,
    pub lambda_gamma: f64,
    pub tau_a: f64,
    pub nms_radius: usize,
    /// Outward shift (pixels) from traced pixel centers to the ink edge.
    pub contour_offset: f64,
    /// Arc half-window (pixels) for anchor tangent estimates.
    pub tangent_window: f64,
    pub proposal: ProposalConfig,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            sigma_a: 1.5,
            sigma_gamma: 1.0,
            lambda_gamma: 0.4,
            tau_a: 0.5,
            nms_radius: 3,
            contour_offset: 0.5,
            tangent_window: 3.0,
            proposal: ProposalConfig::default(),
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_a > 0.0
            && self.sigma_gamma > 0.0
            && self.lambda_gamma >= 0.0
            && self.tau_a > 0.0
            && self.tau_a < 1.0
            && self.nms_radius >= 1
            && self.contour_offset.is_finite()
            && self.tangent_window > 0.0;
        if !ok {
            return Err(invalid("invalid field config"));
        }
        self.proposal.validate()
    }
}

/// Gaussians are truncated where they fall below ~1e-14.
const CUTOFF_SIGMAS: f64 = 8.0;

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let t = crate::geom::project_on_segment(p, a, b);
    p.dist(a.lerp(b, t))
}

/// Anchor peaks plus weaker contour support, clipped to [0,1].
pub fn build_target_field(
    anchors: &[Point],
    contour: Option<&Contour>,
    cfg: &FieldConfig,
    width: usize,
    height: usize,
) -> Result<AnchorField> {
    cfg.validate()?;
    if anchors.is_empty() && contour.is_none() {
        return Err(invalid("target field needs anchors or a contour"));
    }
    if width == 0 || height == 0 {
        return Err(invalid("empty field size"));
    }
    if anchors.iter().any(|a| !a.is_finite()) {
        return Err(invalid("non-finite anchor"));
    }
    let n = width * height;
    let mut peak = vec![0.0f64; n];
    let ra = CUTOFF_SIGMAS * cfg.sigma_a;
    let two_sa2 = 2.0 * cfg.sigma_a * cfg.sigma_a;
    for &a in anchors {
        for_box(a, a, ra, width, height, |x, y| {
            let d2 = (Point::new(x as f64, y as f64) - a).norm2();
            let v = (-d2 / two_sa2).exp();
            let cell = &mut peak[y * width + x];
            if v > *cell {
                *cell = v;
            }
        });
    }
    let mut support = vec![0.0f64; n];
    if let Some(c) = contour {
        let mut dmin = vec![f64::INFINITY; n];
        let rg = CUTOFF_SIGMAS * cfg.sigma_gamma;
        let pts = c.points();
        let m = if c.closed() { pts.len() } else { pts.len() - 1 };
        for k in 0..m {
            let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
            for_box(a, b, rg, width, height, |x, y| {
                let d = dist_to_segment(Point::new(x as f64, y as f64), a, b);
                let cell = &mut dmin[y * width + x];
                if d < *cell {
                    *cell = d;
                }
            });
        }
        let two_sg2 = 2.0 * cfg.sigma_gamma * cfg.sigma_gamma;
        for (s, d) in support.iter_mut().zip(&dmin) {
            if d.is_finite() {
                *s = cfg.lambda_gamma * (-d * d / two_sg2).exp();
            }
        }
    }
    let values = peak.iter().zip(&support).map(|(a, b)| (a + b).clamp(0.0, 1.0)).collect();
    Ok(AnchorField { width, height, values })
}

fn for_box(a: Point, b: Point, r: f64, w: usize, h: usize, mut f: impl FnMut(usize, usize)) {
    let x0 = (a.x.min(b.x) - r).floor().max(0.0);
    let y0 = (a.y.min(b.y) - r).floor().max(0.0);
    let x1 = (a.x.max(b.x) + r).ceil().min(w as f64 - 1.0);
    let y1 = (a.y.max(b.y) + r).ceil().min(h as f64 - 1.0);
    if x1 < x0 || y1 < y0 {
        return;
    }
    for y in y0 as usize..=y1 as usize {
        for x in x0 as usize..=x1 as usize {
            f(x, y);
        }
    }
}

/// Unsigned turning angle (degrees) at every sample of a closed polyline,
/// using chords of `w` samples on each side.
fn turn_angles(q: &[Point], w: usize) -> Vec<f64> {
    let n = q.len();
    (0..n)
        .map(|i| {
            let a = q[(i + n - w) % n];
            let b = q[i];
            let c = q[(i + w) % n];
            let (u, v) = (b - a, c - b);
            let ang = u.cross(v).atan2(u.dot(v)).abs();
            ang.to_degrees()
        })
        .collect()
}

/// Arc positions of proposed anchors on `contour`, ascending.
pub fn propose_arc_positions(contour: &Contour, cfg: &ProposalConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !contour.closed() {
        return Err(invalid("anchor proposal needs a closed contour"));
    }
    let total = contour.length();
    let n = total.round() as usize;
    if n < 8 {
        return Err(Error::ContourTooSmall(n));
    }
    let rs = resample_arclength(contour, n)?;
    let spacing = total / n as f64;
    let raw = rs.points();
    let n = raw.len();
    // 5-sample circular moving average
    let smooth: Vec<Point> = (0..n)
        .map(|i| {
            let mut acc = Point::ZERO;
            for k in 0..5 {
                acc += raw[(i + n + k - 2) % n];
            }
            acc * 0.2
        })
        .collect();
    let w = ((cfg.curvature_window / spacing).round() as usize).clamp(1, (n / 4).max(1));
    let turn = turn_angles(&smooth, w);
    let mean = turn.iter().sum::<f64>() / n as f64;
    let sd = (turn.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let adaptive = cfg.min_turn.max(mean + 2.0 * sd);
    let corner = 180.0 - cfg.corner_angle;

    let mut cands: Vec<usize> = (0..n)
        .filter(|&i| {
            let t = turn[i];
            if t < adaptive && t <= corner {
                return false;
            }
            // strict on the left so a plateau yields its first sample only
            (1..=w).all(|k| turn[(i + n - k) % n] < t && turn[(i + k) % n] <= t)
        })
        .collect();
    cands.sort_by(|&a, &b| turn[b].total_cmp(&turn[a]).then(a.cmp(&b)));
    let circ = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(total - d)
    };
    let mut kept: Vec<f64> = Vec::new();
    for i in cands {
        let s = i as f64 * spacing;
        if kept.iter().all(|&k| circ(k, s) >= cfg.min_sep) {
            kept.push(s);
        }
    }
    kept.sort_by(f64::total_cmp);
    if kept.is_empty() {
        kept = vec![0.0, total / 3.0, 2.0 * total / 3.0];
    }
    while kept.len() < 3 {
        let k = kept.len();
        let (gi, gap) = (0..k)
            .map(|i| {
                let next = if i + 1 < k { kept[i + 1] } else { kept[0] + total };
                (i, next - kept[i])
            })
            .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        let mid = contour.wrap_s(kept[gi] + gap / 2.0);
        kept.push(mid);
        kept.sort_by(f64::total_cmp);
    }
    split_by_fit(contour, &mut kept, cfg);
    Ok(kept)
}

/// Unit direction leaving arc position `s` along the contour (backwards
/// when `sign` is negative), from a least-squares quadratic through the
/// contour point fitted to samples over arc length `reach`. Fitting over
/// many samples averages out the pixel staircase of traced contours. Falls
/// back to the secant when the fit disagrees with it.
pub fn contour_direction(contour: &Contour, s: f64, reach: f64, sign: f64) -> Option<Point> {
    let p0 = contour.point_at(s);
    let m = (reach.ceil() as usize).clamp(4, 64);
    let (mut t2, mut t3, mut t4) = (0.0, 0.0, 0.0);
    let (mut td, mut t2d) = (Point::ZERO, Point::ZERO);
    for i in 1..=m {
        let t = reach * i as f64 / m as f64;
        let d = contour.point_at(s + sign * t) - p0;
        t2 += t * t;
        t3 += t * t * t;
        t4 += t * t * t * t;
        td += d * t;
        t2d += d * (t * t);
    }
    let secant = (contour.point_at(s + sign * reach) - p0).normalized()?;
    let det = t2 * t4 - t3 * t3;
    if det.abs() < 1e-12 {
        return Some(secant);
    }
    match ((td * t4 - t2d * t3) * (1.0 / det)).normalized() {
        Some(d) if d.dot(secant) > 0.5 => Some(d),
        _ => Some(secant),
    }
}

fn bez(a: Point, b: Point, c: Point, d: Point, t: f64) -> Point {
    let u = 1.0 - t;
    a * (u * u * u) + b * (3.0 * u * u * t) + c * (3.0 * u * t * t) + d * (t * t * t)
}

/// Largest distance from the contour samples over `[s, s + len]` to their
/// least-squares cubic with pinned endpoints, and the arc offset where it
/// occurs.
fn span_fit_error(contour: &Contour, s: f64, len: f64) -> (f64, f64) {
    let m = (len.ceil() as usize).max(4);
    let ts: Vec<f64> = (0..=m).map(|i| len * i as f64 / m as f64).collect();
    let pts: Vec<Point> = ts.iter().map(|&t| contour.point_at(s + t)).collect();
    let (a, b) = (pts[0], pts[m]);
    let mut u: Vec<f64> = ts.iter().map(|t| t / len).collect();
    let mut ctrl = (a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0));
    let k = 8 * m;
    for iter in 0..4 {
        let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
        let (mut x1, mut x2) = (Point::ZERO, Point::ZERO);
        for (&t, &p) in u.iter().zip(&pts) {
            let v = 1.0 - t;
            let (b0, b1, b2, b3) = (v * v * v, 3.0 * v * v * t, 3.0 * v * t * t, t * t * t);
            let r = p - a * b0 - b * b3;
            c11 += b1 * b1;
            c12 += b1 * b2;
            c22 += b2 * b2;
            x1 += r * b1;
            x2 += r * b2;
        }
        let det = c11 * c22 - c12 * c12;
        if det.abs() > 1e-12 {
            ctrl = ((x1 * c22 - x2 * c12) * (1.0 / det), (x2 * c11 - x1 * c12) * (1.0 / det));
        }
        if iter == 3 {
            break;
        }
        // reparameterize by the nearest point on a dense sampling of the cubic
        let curve: Vec<Point> = (0..=k).map(|i| bez(a, ctrl.0, ctrl.1, b, i as f64 / k as f64)).collect();
        for (ui, p) in u.iter_mut().zip(&pts) {
            let best = (0..=k).min_by(|&i, &j| (curve[i] - *p).norm2().total_cmp(&(curve[j] - *p).norm2())).unwrap_or(0);
            *ui = best as f64 / k as f64;
        }
    }
    let curve: Vec<Point> = (0..=k).map(|i| bez(a, ctrl.0, ctrl.1, b, i as f64 / k as f64)).collect();
    let mut worst = (0.0, 0.0);
    for (&t, p) in ts.iter().zip(&pts) {
        let d = curve.windows(2).map(|w| p.dist(w[0].lerp(w[1], crate::geom::project_on_segment(*p, w[0], w[1])))).fold(f64::INFINITY, f64::min);
        if d > worst.0 {
            worst = (d, t);
        }
    }
    worst
}

/// Splits spans between the (sorted) arc positions in `kept` at their worst
/// point until every span fits within `fit_tol`.
fn split_by_fit(contour: &Contour, kept: &mut Vec<f64>, cfg: &ProposalConfig) {
    let total = contour.length();
    loop {
        if kept.len() >= cfg.max_anchors {
            return;
        }
        let k = kept.len();
        let mut worst: Option<(f64, f64)> = None;
        for i in 0..k {
            let s = kept[i];
            let len = if i + 1 < k { kept[i + 1] - s } else { kept[0] + total - s };
            if len < 2.0 * cfg.min_sep {
                continue;
            }
            let (err, at) = span_fit_error(contour, s, len);
            // error bunched against an end comes from a misplaced neighbor,
            // not from a missing anchor
            let inside = at >= cfg.min_sep && at <= len - cfg.min_sep;
            if inside && err > cfg.fit_tol && worst.is_none_or(|w| err > w.0) {
                worst = Some((err, contour.wrap_s(s + at)));
            }
        }
        let Some((_, s)) = worst else { return };
        kept.push(s);
        kept.sort_by(f64::total_cmp);
    }
}

/// Heuristic anchor proposal: curvature maxima and sharp corners, at least
/// three on a closed contour, ordered by arc position.
pub fn propose_anchors(contour: &Contour, cfg: &ProposalConfig) -> Result<Vec<Point>> {
    Ok(propose_arc_positions(contour, cfg)?.into_iter().map(|s| contour.point_at(s)).collect())
}

/// Traced outer contour of the largest foreground region, shifted outward
/// by `offset` so it follows the ink edge rather than pixel centers.
pub fn crop_contour(crop: &GrayImage, eta: f64, offset: f64) -> Result<Contour> {
    let mask = binarize(crop, eta);
    if mask.is_empty() {
        return Err(Error::EmptyComponent);
    }
    let c = largest_outer_contour(&mask)?;
    if offset == 0.0 {
        Ok(c)
    } else {
        c.offset(offset)
    }
}

/// Analytic field predictor: trace, propose, build.
pub fn predict_field(crop: &GrayImage, eta: f64, cfg: &FieldConfig) -> Result<(AnchorField, Contour)> {
    cfg.validate()?;
    let contour = crop_contour(crop, eta, cfg.contour_offset)?;
    let anchors = propose_anchors(&contour, &cfg.proposal)?;
    let field = build_target_field(&anchors, Some(&contour), cfg, crop.width(), crop.height())?;
    Ok((field, contour))
}

pub fn encode_field(field: &AnchorField) -> Vec<u8> {
    encode_pgm16(field.width, field.height, &field.values)
}

pub fn decode_field(bytes: &[u8]) -> Result<AnchorField> {
    let (w, h, values) = decode_pgm16(bytes)?;
    AnchorField::new(w, h, values)
}

pub fn save_field(field: &AnchorField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<AnchorField> {
    decode_field(&std::fs::read(path)?)
}

/// One "x y" line per anchor.
pub fn format_anchors(anchors: &[Point]) -> String {
    anchors.iter().map(|a| format!("{:.3} {:.3}\n", a.x, a.y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polygon(vertices: &[Point], per_edge: usize) -> Contour {
        let mut pts = Vec::new();
        for i in 0..vertices.len() {
            let (a, b) = (vertices[i], vertices[(i + 1) % vertices.len()]);
            for k in 0..per_edge {
                pts.push(a.lerp(b, k as f64 / per_edge as f64));
            }
        }
        Contour::new(pts, true).unwrap()
    }

    fn square(x0: f64, y0: f64, side: f64) -> Vec<Point> {
        // screen-counterclockwise
        vec![
            Point::new(x0, y0),
            Point::new(x0, y0 + side),
            Point::new(x0 + side, y0 + side),
            Point::new(x0 + side, y0),
        ]
    }

    fn star(cx: f64, cy: f64, r_out: f64, r_in: f64) -> Vec<Point> {
        (0..10)
            .map(|k| {
                let r = if k % 2 == 0 { r_out } else { r_in };
                let t = -std::f64::consts::FRAC_PI_2 - k as f64 * std::f64::consts::PI / 5.0;
                Point::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect()
    }

    fn near_all(found: &[Point], truth: &[Point], tol: f64) -> bool {
        found.len() == truth.len() && truth.iter().all(|t| found.iter().any(|f| f.dist(*t) <= tol))
    }

    #[test]
    fn saturates_at_anchor_on_contour() {
        let c = polygon(&square(10.0, 10.0, 20.0), 20);
        let a = Point::new(10.0, 20.0);
        let f = build_target_field(&[a], Some(&c), &FieldConfig::default(), 40, 40).unwrap();
        assert_eq!(f.get(10, 20), 1.0);
    }

    #[test]
    fn decays_far_away() {
        let c = polygon(&square(2.0, 2.0, 6.0), 6);
        let f = build_target_field(&[Point::new(2.0, 2.0)], Some(&c), &FieldConfig::default(), 64, 64).unwrap();
        assert!(f.get(50, 50) < 1e-6);
    }

    #[test]
    fn contour_support_midway() {
        let cfg = FieldConfig::default();
        // two anchors 10 sigma_a apart on a straight horizontal edge
        let pts: Vec<Point> = (0..=40).map(|i| Point::new(5.0 + i as f64, 20.0)).collect();
        let c = Contour::new(pts, false).unwrap();
        let a = Point::new(10.5, 20.0);
        let b = Point::new(10.5 + 10.0 * cfg.sigma_a, 20.0);
        let f = build_target_field(&[a, b], Some(&c), &cfg, 48, 40).unwrap();
        let mid = f.get(((a.x + b.x) / 2.0) as usize, 20);
        let expect = cfg.lambda_gamma + (-(7.5f64 * 7.5) / (2.0 * 1.5 * 1.5)).exp();
        assert!((mid - expect).abs() < 1e-9);
        assert!((mid - 0.4).abs() <= 0.01);
    }

    #[test]
    fn needs_some_input() {
        let r = build_target_field(&[], None, &FieldConfig::default(), 8, 8);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn square_gives_corners() {
        let v = square(20.0, 30.0, 60.0);
        let c = polygon(&v, 60);
        let got = propose_anchors(&c, &ProposalConfig::default()).unwrap();
        assert!(near_all(&got, &v, 1.0), "{got:?}");
    }

    #[test]
    fn circle_falls_back_to_thirds() {
        let n = 400;
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let t = -(i as f64) / n as f64 * std::f64::consts::TAU;
                Point::new(64.0 + 40.0 * t.cos(), 64.0 + 40.0 * t.sin())
            })
            .collect();
        let c = Contour::new(pts, true).unwrap();
        let s = propose_arc_positions(&c, &ProposalConfig::default()).unwrap();
        assert_eq!(s.len(), 3);
        let l = c.length();
        assert!((s[1] - s[0] - l / 3.0).abs() < 1e-9 && (s[2] - s[1] - l / 3.0).abs() < 1e-9);
    }

    #[test]
    fn star_tips_and_notches() {
        let v = star(64.0, 64.0, 50.0, 22.0);
        let c = polygon(&v, 40);
        let got = propose_anchors(&c, &ProposalConfig::default()).unwrap();
        assert!(near_all(&got, &v, 1.5), "{got:?}");
    }

    #[test]
    fn square_rotation_covariant() {
        let v = square(20.0, 30.0, 60.0);
        let c = polygon(&v, 60);
        let rot = |p: Point| Point::new(128.0 - p.y, p.x);
        let rc = Contour::new(c.points().iter().map(|&p| rot(p)).collect(), true).unwrap();
        let a = propose_anchors(&c, &ProposalConfig::default()).unwrap();
        let b = propose_anchors(&rc, &ProposalConfig::default()).unwrap();
        let ra: Vec<Point> = a.iter().map(|&p| rot(p)).collect();
        assert!(near_all(&b, &ra, 1.5));
    }

    #[test]
    fn filled_square_prediction() {
        let crop = GrayImage::from_fn(64, 64, |x, y| {
            if (16..48).contains(&x) && (16..48).contains(&y) {
                0.0
            } else {
                1.0
            }
        });
        let cfg = FieldConfig::default();
        let (f, c) = predict_field(&crop, 0.5, &cfg).unwrap();
        let corners = square(15.5, 15.5, 32.0);
        for k in corners {
            assert!(f.at(k) > 0.99, "{k:?} {:?}", propose_anchors(&c, &cfg.proposal));
        }
        assert!(c.signed_area() < 0.0);
        let (f2, _) = predict_field(&crop, 0.5, &cfg).unwrap();
        assert_eq!(f, f2);
    }

    #[test]
    fn blank_crop_is_empty() {
        let crop = GrayImage::filled(16, 16, 1.0);
        assert!(matches!(predict_field(&crop, 0.5, &FieldConfig::default()), Err(Error::EmptyComponent)));
    }

    #[test]
    fn pgm16_extremes() {
        let z = AnchorField::zeros(3, 2);
        let bytes = encode_field(&z);
        assert!(bytes.ends_with(&[0u8; 12]));
        let ones = AnchorField::new(3, 2, vec![1.0; 6]).unwrap();
        assert!(encode_field(&ones).ends_with(&[0xffu8; 12]));
        assert_eq!(decode_field(&encode_field(&ones)).unwrap(), ones);
    }

    #[test]
    fn pgm16_random_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let f = AnchorField::new(20, 10, vals).unwrap();
        let back = decode_field(&encode_field(&f)).unwrap();
        let err = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1.0 / 65535.0);
    }

    #[test]
    fn pgm16_wrong_maxval() {
        assert!(matches!(decode_field(b"P5\n1 1\n255\n\x00"), Err(Error::Format(_))));
    }
}
