//! Full-image reconstruction: color decomposition into components, fitting
//! each component in a normalized crop, and assembly on the canvas.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{invalid, Error, Result};
use crate::field::{crop_contour, predict_field, AnchorField};
use crate::geom::Point;
use crate::raster::{
    binarize, connected_components, resample_arclength, BinaryMask, Connectivity, Contour, GrayImage, RgbImage,
};
use crate::refine::{reconstruct, FitContext, RefineOutcome};
use crate::render::{rasterize_path, RenderOptions};
use crate::svg::{CubicSegment, ParamCount, Rgba, SvgDocument, VectorPath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeConfig {
    pub max_colors: usize,
    /// Regions smaller than this many pixels are dropped.
    pub min_area: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { max_colors: 12, min_area: 16 }
    }
}

impl DecomposeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_colors < 2 || self.min_area == 0 {
            return Err(invalid("decompose: need max_colors >= 2 and min_area >= 1"));
        }
        Ok(())
    }
}

/// Crop frame from canvas frame: `crop = (canvas - origin) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropTransform {
    pub scale: f64,
    pub origin: Point,
}

impl CropTransform {
    pub const IDENTITY: CropTransform = CropTransform { scale: 1.0, origin: Point::ZERO };

    pub fn new(scale: f64, origin: Point) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && origin.is_finite()) {
            return Err(invalid(format!("crop transform scale {scale} must be positive")));
        }
        Ok(CropTransform { scale, origin })
    }

    pub fn to_crop(&self, p: Point) -> Point {
        (p - self.origin) * self.scale
    }

    pub fn to_canvas(&self, p: Point) -> Point {
        Point::new(p.x / self.scale + self.origin.x, p.y / self.scale + self.origin.y)
    }
}

#[derive(Debug, Clone)]
pub struct Component {
    /// Normalized dark-on-white crop.
    pub crop: GrayImage,
    /// Foreground in the crop frame.
    pub mask: BinaryMask,
    pub canvas_mask: BinaryMask,
    pub transform: CropTransform,
    pub color: Rgba,
    pub canvas_area: usize,
    /// Paint order, 0 = bottom.
    pub z_order: usize,
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn dist2(a: [u8; 3], b: [u8; 3]) -> u32 {
    (0..3).map(|k| (a[k] as i32 - b[k] as i32).pow(2) as u32).sum()
}

/// Median-cut palette over 8-bit colors. Returns the palette (the most
/// frequent color of each box) and a per-pixel palette index by nearest
/// color.
pub fn median_cut(img: &RgbImage, max_colors: usize) -> (Vec<[u8; 3]>, Vec<usize>) {
    let (w, h) = (img.width(), img.height());
    let pixels: Vec<[u8; 3]> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| img.get(x, y).map(to_u8)).collect();
    let mut hist: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for p in &pixels {
        *hist.entry(*p).or_default() += 1;
    }
    let mut boxes: Vec<Vec<([u8; 3], usize)>> = vec![hist.into_iter().collect()];
    let stats = |b: &[([u8; 3], usize)]| {
        let n: f64 = b.iter().map(|c| c.1 as f64).sum();
        let mean: [f64; 3] = [0, 1, 2].map(|k| b.iter().map(|c| c.0[k] as f64 * c.1 as f64).sum::<f64>() / n);
        let var: [f64; 3] = [0, 1, 2].map(|k| b.iter().map(|c| c.1 as f64 * (c.0[k] as f64 - mean[k]).powi(2)).sum::<f64>());
        var
    };
    while boxes.len() < max_colors.max(1) {
        let pick = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.len() > 1)
            .map(|(i, b)| (i, stats(b)))
            .fold(None::<(usize, [f64; 3])>, |acc, (i, v)| match acc {
                Some((_, av)) if av.iter().sum::<f64>() >= v.iter().sum::<f64>() => acc,
                _ => Some((i, v)),
            });
        let Some((i, var)) = pick else { break };
        let axis = (0..3).fold(0, |a, k| if var[k] > var[a] { k } else { a });
        let mut b = boxes.swap_remove(i);
        b.sort_by_key(|c| (c.0[axis], c.0));
        let total: usize = b.iter().map(|c| c.1).sum();
        let mut acc = 0;
        let mut cut = b.len() - 1;
        for (k, c) in b.iter().enumerate() {
            acc += c.1;
            if 2 * acc >= total {
                cut = k + 1;
                break;
            }
        }
        let cut = cut.clamp(1, b.len() - 1);
        let hi = b.split_off(cut);
        boxes.push(b);
        boxes.push(hi);
        // keep box order independent of swap_remove history
        boxes.sort_by_key(|b| b[0].0);
    }
    let palette: Vec<[u8; 3]> = boxes
        .iter()
        .map(|b| b.iter().fold(b[0], |m, c| if c.1 > m.1 { *c } else { m }).0)
        .collect();
    let mut cache: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    let labels = pixels
        .iter()
        .map(|p| {
            *cache.entry(*p).or_insert_with(|| {
                (0..palette.len()).fold(0, |best, k| if dist2(*p, palette[k]) < dist2(*p, palette[best]) { k } else { best })
            })
        })
        .collect();
    (palette, labels)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn snap(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

/// Per-channel median over the mask interior (1 px erosion when that keeps
/// at least a quarter of the pixels), snapped to 8 bits.
pub fn recover_color(img: &RgbImage, mask: &BinaryMask) -> Result<Rgba> {
    if mask.is_empty() {
        return Err(Error::EmptyComponent);
    }
    if mask.width() != img.width() || mask.height() != img.height() {
        return Err(invalid("recover_color: mask and image sizes differ"));
    }
    let eroded = mask.erode();
    let use_mask = if !eroded.is_empty() && 4 * eroded.count() >= mask.count() { &eroded } else { mask };
    let px: Vec<[f64; 3]> = (0..img.height())
        .flat_map(|y| (0..img.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| use_mask.get(x, y))
        .map(|(x, y)| img.get(x, y))
        .collect();
    Ok(Rgba::opaque([0, 1, 2].map(|k| snap(median(px.iter().map(|p| p[k]).collect())))))
}

fn bilinear_ink(mask: &BinaryMask, p: Point) -> f64 {
    let (x0, y0) = (p.x.floor(), p.y.floor());
    let (fx, fy) = (p.x - x0, p.y - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let v = |dx: i64, dy: i64| if mask.get_signed(x0 + dx, y0 + dy) { 1.0 } else { 0.0 };
    (v(0, 0) * (1.0 - fx) + v(1, 0) * fx) * (1.0 - fy) + (v(0, 1) * (1.0 - fx) + v(1, 1) * fx) * fy
}

/// Square crop of `size` px with the region's bounding box scaled to
/// `size - 2 pad` and centered. Pixels are box-averaged bilinear samples.
pub fn make_crop(mask: &BinaryMask, size: usize, pad: usize) -> Result<(GrayImage, CropTransform)> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                (x0, y0, x1, y1) = (x0.min(x), y0.min(y), x1.max(x), y1.max(y));
            }
        }
    }
    if x0 == usize::MAX {
        return Err(Error::EmptyComponent);
    }
    if size <= 2 * pad {
        return Err(invalid("crop size must exceed twice the padding"));
    }
    let extent = ((x1 - x0 + 1).max(y1 - y0 + 1)) as f64;
    let scale = (size - 2 * pad) as f64 / extent;
    let center = Point::new((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0);
    let half = (size as f64 - 1.0) / 2.0;
    let t = CropTransform::new(scale, center - Point::new(half, half) * (1.0 / scale))?;
    let ns = (1.0 / scale).ceil().clamp(1.0, 8.0) as usize;
    let crop = GrayImage::from_fn(size, size, |i, j| {
        let mut acc = 0.0;
        for sy in 0..ns {
            for sx in 0..ns {
                let o = Point::new((sx as f64 + 0.5) / ns as f64 - 0.5, (sy as f64 + 0.5) / ns as f64 - 0.5);
                acc += bilinear_ink(mask, t.to_canvas(Point::new(i as f64, j as f64) + o));
            }
        }
        1.0 - acc / (ns * ns) as f64
    });
    Ok((crop, t))
}

/// Quantize, split into 8-connected single-color regions and normalize each
/// into a crop. The background (most frequent border color) is skipped
/// except for enclosed background-colored regions such as holes. Regions
/// below `min_area` or with no 3x3-eroded interior are dropped.
pub fn decompose(img: &RgbImage, cfg: &DecomposeConfig, crop_size: usize, pad: usize, eta: f64) -> Result<Vec<Component>> {
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    let (palette, labels) = median_cut(img, cfg.max_colors);
    let mut border = vec![0usize; palette.len()];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                border[labels[y * w + x]] += 1;
            }
        }
    }
    let bg = (0..palette.len()).fold(0, |b, k| if border[k] > border[b] { k } else { b });
    let mut regions: Vec<(BinaryMask, usize, (usize, usize), usize)> = Vec::new();
    for (l, _) in palette.iter().enumerate() {
        let m = BinaryMask::from_fn(w, h, |x, y| labels[y * w + x] == l);
        if m.is_empty() {
            continue;
        }
        let cc = connected_components(&m, Connectivity::Eight);
        for (label, &area) in cc.areas().iter().enumerate().skip(1) {
            if area < cfg.min_area {
                continue;
            }
            let rm = cc.mask_of(label as u32);
            // slivers without a 3x3 interior are anti-aliasing fringes
            if rm.erode().is_empty() {
                continue;
            }
            let mut first = None;
            let mut touches = false;
            for y in 0..h {
                for x in 0..w {
                    if rm.get(x, y) {
                        first.get_or_insert((y, x));
                        touches |= x == 0 || y == 0 || x + 1 == w || y + 1 == h;
                    }
                }
            }
            if l == bg && touches {
                continue;
            }
            regions.push((rm, area, first.unwrap_or((0, 0)), l));
        }
    }
    if regions.is_empty() {
        return Err(Error::NoComponents);
    }
    regions.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    regions
        .into_iter()
        .enumerate()
        .map(|(z, (canvas_mask, area, _, _))| {
            let (crop, transform) = make_crop(&canvas_mask, crop_size, pad)?;
            let mask = binarize(&crop, eta);
            let color = recover_color(img, &canvas_mask)?;
            Ok(Component { crop, mask, canvas_mask, transform, color, canvas_area: area, z_order: z })
        })
        .collect()
}

/// Maps every control point from the crop frame back to the canvas.
pub fn apply_inverse_transform(path: &VectorPath, t: &CropTransform) -> VectorPath {
    if *t == CropTransform::IDENTITY {
        return path.clone();
    }
    path.map_points(|p| t.to_canvas(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub id: usize,
    pub area: usize,
    pub anchors: usize,
    pub segments: usize,
    pub f: f64,
    pub rounds: usize,
    pub flags: Vec<&'static str>,
}

impl ComponentReport {
    /// `id area anchors segments f rounds flags`
    pub fn line(&self) -> String {
        let flags = if self.flags.is_empty() { "-".to_string() } else { self.flags.join(",") };
        format!("{} {} {} {} {:.4} {} {}", self.id, self.area, self.anchors, self.segments, self.f, self.rounds, flags)
    }
}

fn polygon_path(contour: &Contour) -> Result<VectorPath> {
    let n = contour.len().min(64);
    let c = if n >= 3 && contour.len() > 64 { resample_arclength(contour, n)? } else { contour.clone() };
    let pts = c.points();
    let k = pts.len();
    let segs = (0..k).map(|i| CubicSegment::line(pts[i], pts[(i + 1) % k])).collect();
    VectorPath::new(segs, true, Rgba::BLACK)
}

fn box_path(mask: &BinaryMask) -> Result<VectorPath> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                (x0, y0, x1, y1) = (x0.min(x as f64), y0.min(y as f64), x1.max(x as f64), y1.max(y as f64));
            }
        }
    }
    if x0 > x1 {
        return Err(Error::EmptyComponent);
    }
    let c = [Point::new(x0 - 0.5, y0 - 0.5), Point::new(x0 - 0.5, y1 + 0.5), Point::new(x1 + 0.5, y1 + 0.5), Point::new(x1 + 0.5, y0 - 0.5)];
    VectorPath::new((0..4).map(|i| CubicSegment::line(c[i], c[(i + 1) % 4])).collect(), true, Rgba::BLACK)
}

/// Fits one crop: predicted (or given) field, then refinement, repair and
/// simplification.
pub fn fit_crop(crop: &GrayImage, field: Option<&AnchorField>, cfg: &PipelineConfig) -> Result<RefineOutcome> {
    let (field, contour) = match field {
        Some(f) => {
            if f.width() != crop.width() || f.height() != crop.height() {
                return Err(invalid("field size does not match the input"));
            }
            (f.clone(), crop_contour(crop, cfg.eta, cfg.field.contour_offset)?)
        }
        None => predict_field(crop, cfg.eta, &cfg.field)?,
    };
    let ctx = FitContext::new(crop.clone(), contour, cfg.eta, cfg.field, cfg.pull, cfg.refine, cfg.render.inner_supersample)?;
    reconstruct(&ctx, &field)
}

/// Canvas-frame path and report for one component. Fitting failures fall
/// back to the traced contour polygon and are flagged.
pub fn reconstruct_component(id: usize, comp: &Component, cfg: &PipelineConfig) -> (VectorPath, ComponentReport) {
    let mut report = ComponentReport { id, area: comp.canvas_area, anchors: 0, segments: 0, f: 0.0, rounds: 0, flags: Vec::new() };
    let local = match fit_crop(&comp.crop, None, cfg) {
        Ok(out) => {
            report.f = out.score.f;
            report.rounds = out.rounds;
            if out.path.fallback {
                report.flags.push("fallback");
            }
            if out.densified {
                report.flags.push("densified");
            }
            if out.score.f < cfg.refine.tau_f {
                report.flags.push("below_tau");
            }
            Some(out.path.path)
        }
        Err(_) => None,
    };
    let local = local.or_else(|| {
        report.flags.push("polygon");
        crop_contour(&comp.crop, cfg.eta, cfg.field.contour_offset).and_then(|c| polygon_path(&c)).ok()
    });
    let mut path = match local {
        Some(p) => apply_inverse_transform(&p, &comp.transform),
        None => {
            report.flags.push("box");
            box_path(&comp.canvas_mask).expect("component mask is nonempty")
        }
    };
    path.fill = comp.color;
    report.segments = path.segments.len();
    report.anchors = path.anchors().len();
    (path, report)
}

/// Paths painted in z order on a canvas of the given size.
pub fn assemble(mut items: Vec<(usize, VectorPath)>, width: usize, height: usize) -> Result<SvgDocument> {
    items.sort_by_key(|(z, _)| *z);
    SvgDocument::new(width, height, items.into_iter().map(|(_, p)| p).collect())
}

fn composite(covs: &[GrayImage], colors: &[[f64; 3]], w: usize, h: usize) -> Vec<[f64; 3]> {
    let mut img = vec![[1.0; 3]; w * h];
    for (cov, rgb) in covs.iter().zip(colors) {
        for (i, px) in img.iter_mut().enumerate() {
            let a = cov.data()[i];
            if a > 0.0 {
                *px = [0, 1, 2].map(|k| px[k] * (1.0 - a) + rgb[k] * a);
            }
        }
    }
    img
}

fn photo_loss(img: &[[f64; 3]], target: &RgbImage) -> f64 {
    let t = target.data();
    img.iter().enumerate().map(|(i, p)| (0..3).map(|k| (p[k] - t[3 * i + k]).powi(2)).sum::<f64>()).sum::<f64>() / t.len() as f64
}

/// Color-only coordinate descent: each path takes the median target color
/// over the pixels where it is topmost; a change that raises the photo
/// loss is undone. Returns the document and the loss after each iteration,
/// starting with the initial loss.
pub fn global_color_refine(doc: &SvgDocument, target: &RgbImage, iters: usize, opts: &RenderOptions) -> Result<(SvgDocument, Vec<f64>)> {
    let (w, h) = (target.width(), target.height());
    let opts = opts.with_size(w, h);
    let covs: Vec<GrayImage> = doc.paths.iter().map(|p| rasterize_path(p, &opts)).collect::<Result<_>>()?;
    let mut top = vec![usize::MAX; w * h];
    for (k, cov) in covs.iter().enumerate() {
        for (i, t) in top.iter_mut().enumerate() {
            if cov.data()[i] >= 0.5 {
                *t = k;
            }
        }
    }
    let mut colors: Vec<[f64; 3]> = doc.paths.iter().map(|p| p.fill.rgb()).collect();
    let mut loss = photo_loss(&composite(&covs, &colors, w, h), target);
    let mut history = vec![loss];
    for _ in 0..iters {
        for k in 0..colors.len() {
            let px: Vec<usize> = (0..w * h).filter(|&i| top[i] == k).collect();
            if px.is_empty() {
                continue;
            }
            let new = [0, 1, 2].map(|c| snap(median(px.iter().map(|&i| target.data()[3 * i + c]).collect())));
            if new == colors[k] {
                continue;
            }
            let old = std::mem::replace(&mut colors[k], new);
            let l = photo_loss(&composite(&covs, &colors, w, h), target);
            if l <= loss {
                loss = l;
            } else {
                colors[k] = old;
            }
        }
        history.push(loss);
    }
    let mut out = doc.clone();
    for (p, c) in out.paths.iter_mut().zip(&colors) {
        p.fill = Rgba { a: p.fill.a, ..Rgba::opaque(*c) };
    }
    Ok((out, history))
}

#[derive(Debug, Clone)]
pub struct ImageResult {
    pub doc: SvgDocument,
    pub reports: Vec<ComponentReport>,
    pub color_losses: Vec<f64>,
}

impl ImageResult {
    pub fn report_text(&self) -> String {
        let mut s = String::from("# id area anchors segments f rounds flags\n");
        for r in &self.reports {
            s.push_str(&r.line());
            s.push('\n');
        }
        s
    }
}

/// Decompose, fit every component in parallel, assemble and polish colors.
/// Output does not depend on scheduling.
pub fn reconstruct_image(img: &RgbImage, cfg: &PipelineConfig) -> Result<ImageResult> {
    cfg.validate()?;
    let comps = decompose(img, &cfg.decompose, cfg.crop_size, cfg.pad, cfg.eta)?;
    let fitted: Vec<(VectorPath, ComponentReport)> =
        comps.par_iter().enumerate().map(|(i, c)| reconstruct_component(i, c, cfg)).collect();
    let mut reports = Vec::with_capacity(fitted.len());
    let mut items = Vec::with_capacity(fitted.len());
    for ((path, rep), comp) in fitted.into_iter().zip(&comps) {
        items.push((comp.z_order, path));
        reports.push(rep);
    }
    let doc = assemble(items, img.width(), img.height())?;
    let (doc, color_losses) = global_color_refine(&doc, img, cfg.color_iters, &cfg.render_options(img.width(), img.height()))?;
    Ok(ImageResult { doc, reports, color_losses })
}

#[derive(Debug, Clone)]
pub struct SinglePathResult {
    pub doc: SvgDocument,
    pub outcome: RefineOutcome,
    pub params: ParamCount,
}

/// One path for an image that holds exactly one dark foreground region,
/// reconstructed in the image's own frame.
pub fn single_path(img: &GrayImage, field: Option<&AnchorField>, cfg: &PipelineConfig) -> Result<SinglePathResult> {
    cfg.validate()?;
    let mask = binarize(img, cfg.eta);
    let n = connected_components(&mask, Connectivity::Eight).count;
    match n {
        0 => return Err(Error::NoComponents),
        1 => {}
        _ => return Err(Error::MultipleComponents(n)),
    }
    let outcome = fit_crop(img, field, cfg)?;
    let mut path = outcome.path.path.clone();
    path.fill = recover_color(&img.to_rgb(), &mask)?;
    let doc = SvgDocument::new(img.width(), img.height(), vec![path])?;
    let params = ParamCount::of_document(&doc);
    Ok(SinglePathResult { doc, outcome, params })
}
