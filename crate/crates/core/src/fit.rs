//! Fixed-structure fitting of inner Bézier control points against a
//! distance-field target.

use crate::error::{invalid, Error, Result};
use crate::geom::{project_on_segment, Point};
use crate::raster::{binarize, distance_transform, skeletonize, DistanceField, GrayImage};
use crate::render::{render_candidate_gray, RenderOptions};
use crate::resolver::ResolvedPath;
use crate::svg::{CubicSegment, VectorPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SdfSource {
    /// Distance to the skeleton of the (closed) foreground.
    Centerline,
    /// Distance to foreground pixels that touch the background.
    Edge,
    /// Distance to the pixel-crack boundary between ink and paper.
    #[default]
    Boundary,
}

impl SdfSource {
    pub fn name(self) -> &'static str {
        match self {
            SdfSource::Centerline => "centerline",
            SdfSource::Edge => "edge",
            SdfSource::Boundary => "boundary",
        }
    }

    pub fn parse(s: &str) -> Option<SdfSource> {
        match s {
            "centerline" => Some(SdfSource::Centerline),
            "edge" => Some(SdfSource::Edge),
            "boundary" => Some(SdfSource::Boundary),
            _ => None,
        }
    }
}

/// Distance target Φ. For the boundary source the stored field is signed
/// (negative inside) and Φ is its absolute value after interpolation, so
/// Φ vanishes on the crack itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfTarget {
    pub field: DistanceField,
    pub source: SdfSource,
}

impl SdfTarget {
    pub fn new(field: DistanceField, source: SdfSource) -> Self {
        SdfTarget { field, source }
    }

    /// Φ and its gradient at a subpixel position.
    pub fn sample(&self, p: Point) -> (f64, f64, f64) {
        let (v, gx, gy) = self.field.sample(p.x, p.y);
        if v < 0.0 {
            (-v, -gx, -gy)
        } else {
            (v, gx, gy)
        }
    }
}

pub fn build_sdf_target(crop: &GrayImage, eta: f64, source: SdfSource) -> Result<SdfTarget> {
    let mask = binarize(crop, eta);
    if mask.is_empty() {
        return Err(Error::EmptyComponent);
    }
    let field = match source {
        SdfSource::Centerline => distance_transform(&skeletonize(&mask.close())),
        SdfSource::Edge => distance_transform(&mask.boundary()),
        SdfSource::Boundary => {
            let to_fg = distance_transform(&mask);
            let to_bg = distance_transform(&mask.invert());
            let (w, h) = (mask.width(), mask.height());
            let mut d = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    d.push(if mask.get(x, y) { 0.5 - to_bg.get(x, y) } else { to_fg.get(x, y) - 0.5 });
                }
            }
            DistanceField::from_raw(w, h, d)
        }
    };
    Ok(SdfTarget { field, source })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullConfig {
    pub lambda_h: f64,
    pub lambda_l: f64,
    pub lambda_t: f64,
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub lambda_sep: f64,
    pub k_samples: usize,
    pub steps: usize,
    pub step_size: f64,
    /// Attributed render error per pixel of segment length above which a
    /// segment is optimized.
    pub error_threshold: f64,
    pub sdf_source: SdfSource,
}

impl Default for PullConfig {
    fn default() -> Self {
        PullConfig {
            lambda_h: 0.005,
            lambda_l: 0.01,
            lambda_t: 0.01,
            lambda_p: 0.5,
            lambda_s: 0.5,
            lambda_sep: 0.5,
            k_samples: 16,
            steps: 120,
            step_size: 0.5,
            error_threshold: 0.05,
            sdf_source: SdfSource::Boundary,
        }
    }
}

impl PullConfig {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [self.lambda_h, self.lambda_l, self.lambda_t, self.lambda_p, self.lambda_s, self.lambda_sep];
        let ok = lambdas.iter().all(|l| *l >= 0.0 && l.is_finite())
            && self.k_samples >= 4
            && self.steps >= 1
            && self.step_size > 0.0
            && self.error_threshold >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid("invalid pull config"))
        }
    }
}

fn seg_distance(p: Point, poly: &[Point]) -> f64 {
    poly.windows(2)
        .map(|w| {
            let t = project_on_segment(p, w[0], w[1]);
            p.dist(w[0].lerp(w[1], t))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Segments whose attributed absolute render error per pixel of length
/// exceeds `threshold`. Each error pixel goes to its nearest segment.
pub fn select_bad_segments(path: &VectorPath, crop: &GrayImage, opts: &RenderOptions, threshold: f64) -> Result<Vec<usize>> {
    let opts = opts.with_size(crop.width(), crop.height());
    let render = render_candidate_gray(path, &opts)?;
    let polys: Vec<Vec<Point>> = path.segments.iter().map(|s| crate::svg::flatten(s, opts.flatten_tol)).collect();
    let lens: Vec<f64> = polys.iter().map(|p| p.windows(2).map(|w| w[0].dist(w[1])).sum()).collect();
    let mut err = vec![0.0; polys.len()];
    for y in 0..crop.height() {
        for x in 0..crop.width() {
            let e = (render.get(x, y) - crop.get(x, y)).abs();
            if e == 0.0 {
                continue;
            }
            let p = Point::new(x as f64, y as f64);
            let mut best = (f64::INFINITY, 0);
            for (j, poly) in polys.iter().enumerate() {
                let d = seg_distance(p, poly);
                if d < best.0 {
                    best = (d, j);
                }
            }
            err[best.1] += e;
        }
    }
    Ok((0..polys.len()).filter(|&j| err[j] / lens[j].max(1.0) > threshold).collect())
}

/// Loss value and gradients w.r.t. (p1, p2) of each selected segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PullLoss {
    pub loss: f64,
    pub grads: Vec<(Point, Point)>,
}

fn w1(t: f64) -> f64 {
    3.0 * (1.0 - t) * (1.0 - t) * t
}

fn w2(t: f64) -> f64 {
    3.0 * (1.0 - t) * t * t
}

fn perp(c: Point) -> Point {
    // gradient of cross(c, h) with respect to h
    Point::new(-c.y, c.x)
}

fn sign(v: f64) -> f64 {
    if v > 1e-9 {
        1.0
    } else if v < -1e-9 {
        -1.0
    } else {
        0.0
    }
}

/// Geometric distance term plus anti-folding regularizers over the
/// segments in `bad`; `init` supplies the reference handles.
pub fn pull_loss(path: &VectorPath, bad: &[usize], sdf: &SdfTarget, init: &VectorPath, cfg: &PullConfig) -> PullLoss {
    if bad.is_empty() {
        return PullLoss { loss: 0.0, grads: Vec::new() };
    }
    let nb = bad.len() as f64;
    let k = cfg.k_samples;
    let kf = k as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(bad.len());
    for &j in bad {
        let s = &path.segments[j];
        let q = &init.segments[j];
        let (mut g1, mut g2) = (Point::ZERO, Point::ZERO);

        let cg = 1.0 / (nb * kf);
        for i in 1..=k {
            let t = (i as f64 - 0.5) / kf;
            let (phi, gx, gy) = sdf.sample(s.eval(t));
            loss += cg * phi;
            let g = Point::new(gx, gy) * cg;
            g1 += g * w1(t);
            g2 += g * w2(t);
        }

        let ch = 0.5 / nb; // mean over the 2|B| handles
        let handles = [(s.p1, q.p1, s.p0), (s.p2, q.p2, s.p3)];
        let chord = s.p3 - s.p0;
        let clen = chord.norm();
        let chat = chord.normalized().unwrap_or(Point::ZERO);
        for (idx, &(p, q0, anchor)) in handles.iter().enumerate() {
            let mut g = Point::ZERO;
            let d = p - q0;
            loss += cfg.lambda_h * ch * d.norm2();
            g += d * (2.0 * cfg.lambda_h * ch);

            let h = p - anchor;
            let hn = h.norm();
            let excess = hn - clen;
            if excess > 0.0 && hn > 0.0 {
                loss += cfg.lambda_l * ch * excess * excess;
                g += h * (2.0 * cfg.lambda_l * ch * excess / hn);
            }

            if let (Some(u), true) = ((q0 - anchor).normalized(), hn > 1e-12) {
                let hhat = h * (1.0 / hn);
                let cos = hhat.dot(u);
                loss += cfg.lambda_t * ch * (1.0 - cos);
                g += (u - hhat * cos) * (-cfg.lambda_t * ch / hn);
            }

            let side = sign(chat.cross(q0 - anchor));
            let m = (-side * chat.cross(h)).max(0.0);
            if m > 0.0 {
                loss += cfg.lambda_s * ch * m * m;
                g += perp(chat) * (2.0 * cfg.lambda_s * ch * m * -side);
            }

            if idx == 0 {
                g1 += g;
            } else {
                g2 += g;
            }
        }

        if clen > 0.0 {
            let cp = 1.0 / (nb * kf);
            for i in 0..k {
                let (ta, tb) = (i as f64 / kf, (i + 1) as f64 / kf);
                let step = chat.dot(s.eval(tb) - s.eval(ta));
                if step < 0.0 {
                    loss += cfg.lambda_p * cp * step * step;
                    let c = 2.0 * cfg.lambda_p * cp * step;
                    g1 += chat * (c * (w1(tb) - w1(ta)));
                    g2 += chat * (c * (w2(tb) - w2(ta)));
                }
            }
        }

        let sep = s.p1 - s.p2;
        let dn = sep.norm();
        let m = (0.05 * clen - dn).max(0.0);
        if m > 0.0 && dn > 0.0 {
            let c = cfg.lambda_sep / nb;
            loss += c * m * m;
            let g = sep * (-2.0 * c * m / dn);
            g1 += g;
            g2 -= g;
        }

        grads.push((g1, g2));
    }
    PullLoss { loss, grads }
}

fn with_handles(path: &VectorPath, bad: &[usize], x: &[(Point, Point)]) -> VectorPath {
    let mut out = path.clone();
    for (&j, &(p1, p2)) in bad.iter().zip(x) {
        out.segments[j].p1 = p1;
        out.segments[j].p2 = p2;
    }
    out
}

const MOMENTUM: f64 = 0.9;
const MAX_HALVINGS: usize = 8;
const MIN_REL_IMPROVEMENT: f64 = 1e-5;

/// Gradient descent with momentum on the inner control points of `bad`,
/// accepting only non-increasing steps. Anchors are never touched.
pub fn pull_segments(path: &VectorPath, bad: &[usize], sdf: &SdfTarget, cfg: &PullConfig) -> VectorPath {
    if bad.is_empty() {
        return path.clone();
    }
    let init = path.clone();
    let mut x: Vec<(Point, Point)> = bad.iter().map(|&j| (path.segments[j].p1, path.segments[j].p2)).collect();
    let mut v = vec![(Point::ZERO, Point::ZERO); x.len()];
    let mut cur = pull_loss(path, bad, sdf, &init, cfg);
    // the mean over |B| segments and the Bernstein weights (≈K/4 per handle)
    // shrink raw gradients; rescale so step_size is in pixels per unit slope
    let mut lr = cfg.step_size * bad.len() as f64 * 4.0;
    for _ in 0..cfg.steps {
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let nv: Vec<(Point, Point)> =
                v.iter().zip(&cur.grads).map(|(&(a, b), &(g1, g2))| (a * MOMENTUM - g1 * lr, b * MOMENTUM - g2 * lr)).collect();
            let nx: Vec<(Point, Point)> = x.iter().zip(&nv).map(|(&(a, b), &(da, db))| (a + da, b + db)).collect();
            let cand = with_handles(path, bad, &nx);
            let l = pull_loss(&cand, bad, sdf, &init, cfg);
            if l.loss.is_finite() && l.loss <= cur.loss {
                accepted = Some((nx, nv, l));
                break;
            }
            lr *= 0.5;
            v = vec![(Point::ZERO, Point::ZERO); x.len()];
        }
        let Some((nx, nv, l)) = accepted else { break };
        let rel = (cur.loss - l.loss) / cur.loss.max(1e-12);
        x = nx;
        v = nv;
        cur = l;
        if rel < MIN_REL_IMPROVEMENT {
            break;
        }
    }
    with_handles(path, bad, &x)
}

/// Selects poorly aligned segments, pulls them toward the distance target
/// and resets any that fold. Structure and anchors are unchanged.
pub fn pull_control_points(resolved: &ResolvedPath, crop: &GrayImage, eta: f64, cfg: &PullConfig, opts: &RenderOptions) -> Result<ResolvedPath> {
    cfg.validate()?;
    let bad = select_bad_segments(&resolved.path, crop, opts, cfg.error_threshold)?;
    if bad.is_empty() {
        return Ok(resolved.clone());
    }
    let sdf = build_sdf_target(crop, eta, cfg.sdf_source)?;
    let pulled = pull_segments(&resolved.path, &bad, &sdf, cfg);
    let mut out = resolved.clone();
    out.path = project_self_intersections(&pulled);
    Ok(out)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o = |p: Point, q: Point, r: Point| (q - p).cross(r - p);
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

const FOLD_FLATTEN_TOL: f64 = 0.05;

/// True when the flattened cubic crosses itself or crosses its chord more
/// than twice away from its endpoints.
pub fn segment_folds(s: &CubicSegment) -> bool {
    let poly = crate::svg::flatten(s, FOLD_FLATTEN_TOL);
    let n = poly.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            if segments_cross(poly[i], poly[i + 1], poly[j], poly[j + 1]) {
                return true;
            }
        }
    }
    let crossings = poly.windows(2).filter(|w| segments_cross(w[0], w[1], s.p0, s.p3)).count();
    crossings > 2
}

/// Resets folding segments to chord-aligned handles.
pub fn project_self_intersections(path: &VectorPath) -> VectorPath {
    let mut out = path.clone();
    for s in out.segments.iter_mut() {
        if segment_folds(s) {
            *s = CubicSegment::line(s.p0, s.p3);
        }
    }
    out
}
