//! Scanline rasterization of flattened Bézier paths.

use crate::error::{invalid, Result};
use crate::geom::Point;
use crate::raster::{GrayImage, RgbImage};
use crate::svg::{SvgDocument, VectorPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillRule {
    #[default]
    EvenOdd,
    NonZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    pub fill_rule: FillRule,
    /// Samples per pixel along each axis: 1, 2 or 4.
    pub supersample: usize,
    pub flatten_tol: f64,
}

impl RenderOptions {
    pub const DEFAULT_FLATTEN_TOL: f64 = 0.2;
    pub const METRIC_SUPERSAMPLE: usize = 4;

    /// Metric-quality defaults (supersample 4, even-odd, tolerance 0.2).
    pub fn new(width: usize, height: usize) -> Self {
        RenderOptions {
            width,
            height,
            fill_rule: FillRule::EvenOdd,
            supersample: Self::METRIC_SUPERSAMPLE,
            flatten_tol: Self::DEFAULT_FLATTEN_TOL,
        }
    }

    pub fn with_supersample(mut self, s: usize) -> Self {
        self.supersample = s;
        self
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.supersample, 1 | 2 | 4) {
            return Err(invalid(format!("supersample must be 1, 2 or 4, got {}", self.supersample)));
        }
        if !(self.flatten_tol > 0.0) {
            return Err(invalid("flatten tolerance must be positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid("render size must be positive"));
        }
        Ok(())
    }
}

struct Edge {
    a: Point,
    b: Point,
    ymin: f64,
    ymax: f64,
    dir: i32,
}

/// Coverage of closed polygons (implicitly closed) under the fill rule.
/// Sample (i, j, k, l) sits at (i + (k+0.5)/s − 0.5, j + (l+0.5)/s − 0.5);
/// it is inside when crossings at x ≤ sample x say so, with edges spanning
/// the half-open y range [min, max).
pub fn rasterize_polygons(polys: &[Vec<Point>], opts: &RenderOptions) -> Result<GrayImage> {
    opts.validate()?;
    let (w, h, s) = (opts.width, opts.height, opts.supersample);
    let mut edges = Vec::new();
    for poly in polys {
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if a.y == b.y || !a.is_finite() || !b.is_finite() {
                continue;
            }
            edges.push(Edge { a, b, ymin: a.y.min(b.y), ymax: a.y.max(b.y), dir: if b.y > a.y { 1 } else { -1 } });
        }
    }
    edges.sort_by(|e, f| e.ymin.total_cmp(&f.ymin));
    let offs: Vec<f64> = (0..s).map(|k| (k as f64 + 0.5) / s as f64 - 0.5).collect();
    let inv = 1.0 / (s * s) as f64;
    let mut cover = vec![0u32; w * h];
    let mut xs: Vec<(f64, i32)> = Vec::new();
    for j in 0..h {
        for &oy in &offs {
            let y = j as f64 + oy;
            xs.clear();
            for e in &edges {
                if e.ymin > y {
                    break;
                }
                if y < e.ymax {
                    let x = e.a.x + (y - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y);
                    xs.push((x, e.dir));
                }
            }
            if xs.is_empty() {
                continue;
            }
            xs.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut idx = 0;
            let mut wind = 0i32;
            let mut parity = false;
            let row = &mut cover[j * w..(j + 1) * w];
            for (i, cell) in row.iter_mut().enumerate() {
                for &ox in &offs {
                    let x = i as f64 + ox;
                    while idx < xs.len() && xs[idx].0 <= x {
                        wind += xs[idx].1;
                        parity = !parity;
                        idx += 1;
                    }
                    let inside = match opts.fill_rule {
                        FillRule::EvenOdd => parity,
                        FillRule::NonZero => wind != 0,
                    };
                    if inside {
                        *cell += 1;
                    }
                }
            }
        }
    }
    Ok(GrayImage::from_fn(w, h, |x, y| cover[y * w + x] as f64 * inv))
}

/// Fractional coverage of a closed path.
pub fn rasterize_path(path: &VectorPath, opts: &RenderOptions) -> Result<GrayImage> {
    if !path.closed {
        return Err(invalid("only closed paths can be filled"));
    }
    path.validate()?;
    rasterize_polygons(&[path.flatten(opts.flatten_tol)], opts)
}

/// Composites paths in order over white, source-over with the fill alpha.
pub fn render_document(doc: &SvgDocument, opts: &RenderOptions) -> Result<RgbImage> {
    let (w, h) = (opts.width, opts.height);
    let mut img = RgbImage::filled(w, h, [1.0; 3]);
    for p in &doc.paths {
        if !p.closed {
            continue;
        }
        let cov = rasterize_path(p, opts)?;
        let rgb = p.fill.rgb();
        for y in 0..h {
            for x in 0..w {
                let a = cov.get(x, y) * p.fill.a.clamp(0.0, 1.0);
                if a <= 0.0 {
                    continue;
                }
                let c = img.get(x, y);
                img.set(x, y, [0, 1, 2].map(|k| c[k] * (1.0 - a) + rgb[k] * a));
            }
        }
    }
    Ok(img)
}

/// Inverted grayscale: 1 on ink, 0 on white paper.
pub fn stroke_evidence(img: &GrayImage) -> GrayImage {
    img.map(|v| 1.0 - v)
}

/// Dark-on-white render of a single path: 1 − coverage.
pub fn render_candidate_gray(path: &VectorPath, opts: &RenderOptions) -> Result<GrayImage> {
    Ok(rasterize_path(path, opts)?.map(|c| 1.0 - c))
}
