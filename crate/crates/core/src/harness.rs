//! Evaluation support: image metrics, the boundary perturbation protocol,
//! the synthetic shape corpus and tabular reports.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::geom::Point;
use crate::raster::{
    binarize, connected_components, largest_outer_contour, resample_arclength, BinaryMask, Connectivity, GrayImage,
    RgbImage,
};
use crate::refine::f_delta;
use crate::render::{rasterize_polygons, render_document, FillRule, RenderOptions};
use crate::svg::{ParamCount, SvgDocument};

/// Reported PSNR when the images are identical.
pub const PSNR_CAP: f64 = 99.0;

fn same_size(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(invalid(format!("image sizes differ: {}x{} vs {}x{}", a.width(), a.height(), b.width(), b.height())));
    }
    Ok(())
}

/// Mean squared error over all pixels and channels.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_size(a, b)?;
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(s / a.data().len() as f64)
}

pub fn psnr(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

const SSIM_WIN: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

/// Symmetric reflection of an index into `0..n`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Mean SSIM of the luma channels over all positions where the 11x11
/// Gaussian window fits. Images smaller than the window are padded by
/// symmetric reflection first.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_size(a, b)?;
    let (la, lb) = (a.luma(), b.luma());
    let (w0, h0) = (a.width(), a.height());
    let (w, h) = (w0.max(SSIM_WIN), h0.max(SSIM_WIN));
    let (ox, oy) = (((w - w0) / 2) as i64, ((h - h0) / 2) as i64);
    let pad = |img: &GrayImage| -> Vec<f64> {
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| img.get(reflect(x as i64 - ox, w0), reflect(y as i64 - oy, h0)))
            .collect()
    };
    let (pa, pb) = (pad(&la), pad(&lb));
    let r = (SSIM_WIN / 2) as i64;
    let g: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let gs: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / gs).collect();
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(h - SSIM_WIN) {
        for x0 in 0..=(w - SSIM_WIN) {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..SSIM_WIN {
                for i in 0..SSIM_WIN {
                    let wt = g[i] * g[j];
                    let k = (y0 + j) * w + x0 + i;
                    let (va, vb) = (pa[k], pb[k]);
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Relative parameter growth in percent.
pub fn delta_params(clean: f64, perturbed: f64) -> Result<f64> {
    if clean <= 0.0 {
        return Err(invalid("clean parameter count must be positive"));
    }
    Ok(100.0 * (perturbed - clean) / clean)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbConfig {
    pub jitter_amp_min: f64,
    pub jitter_amp_max: f64,
    /// Smoothing width of the normal displacement noise, in 1 px samples.
    pub jitter_sigma: f64,
    pub chip_prob: f64,
    pub bump_prob: f64,
    pub iou_min: f64,
    pub area_ratio_min: f64,
    pub area_ratio_max: f64,
    pub max_resamples: usize,
    pub seed: u64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            jitter_amp_min: 0.7,
            jitter_amp_max: 1.3,
            jitter_sigma: 8.0,
            chip_prob: 0.40,
            bump_prob: 0.30,
            iou_min: 0.90,
            area_ratio_min: 0.93,
            area_ratio_max: 1.07,
            max_resamples: 50,
            seed: 0,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let ok = self.jitter_amp_min >= 0.0
            && self.jitter_amp_min <= self.jitter_amp_max
            && self.jitter_sigma > 0.0
            && prob(self.chip_prob)
            && prob(self.bump_prob)
            && prob(self.iou_min)
            && self.area_ratio_min <= self.area_ratio_max
            && self.area_ratio_min >= 0.0
            && self.max_resamples >= 1;
        if ok {
            Ok(())
        } else {
            Err(invalid("invalid perturb config"))
        }
    }
}

fn circular_smooth(v: &[f64], sigma: f64) -> Vec<f64> {
    let n = v.len() as i64;
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let ks: f64 = k.iter().sum();
    (0..n)
        .map(|i| (-r..=r).zip(&k).map(|(o, w)| w * v[(i + o).rem_euclid(n) as usize]).sum::<f64>() / ks)
        .collect()
}

/// Enclosed background: background pixels not 4-connected to the border.
fn holes_of(mask: &BinaryMask) -> BinaryMask {
    let inv = mask.invert();
    let cc = connected_components(&inv, Connectivity::Four);
    let (w, h) = (mask.width(), mask.height());
    let mut border = std::collections::BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x + 1 == w || y + 1 == h) && inv.get(x, y) {
                border.insert(cc.get(x, y));
            }
        }
    }
    BinaryMask::from_fn(w, h, |x, y| inv.get(x, y) && !border.contains(&cc.get(x, y)))
}

fn jitter(mask: &BinaryMask, amp: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Result<BinaryMask> {
    let outer = largest_outer_contour(mask)?.offset(0.5)?;
    let n = (outer.length().round() as usize).max(8);
    let c = resample_arclength(&outer, n)?;
    let noise: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let smooth = circular_smooth(&noise, sigma);
    let peak = smooth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { amp / peak } else { 0.0 };
    let moved = c.offset(1.0)?;
    // unit outward normals from a unit offset
    let pts: Vec<Point> = (0..n).map(|i| c.points()[i] + (moved.points()[i] - c.points()[i]) * (smooth[i] * scale)).collect();
    let opts = RenderOptions { fill_rule: FillRule::NonZero, ..RenderOptions::new(mask.width(), mask.height()).with_supersample(1) };
    let cov = rasterize_polygons(&[pts], &opts)?;
    let holes = holes_of(mask);
    Ok(BinaryMask::from_fn(mask.width(), mask.height(), |x, y| cov.get(x, y) >= 0.5 && !holes.get(x, y)))
}

fn stamp_disk(mask: &mut BinaryMask, rng: &mut ChaCha8Rng, value: bool) {
    let b = mask.boundary();
    let pts: Vec<(usize, usize)> =
        (0..b.height()).flat_map(|y| (0..b.width()).map(move |x| (x, y))).filter(|&(x, y)| b.get(x, y)).collect();
    if pts.is_empty() {
        return;
    }
    let (cx, cy) = pts[rng.random_range(0..pts.len())];
    let r: f64 = rng.random_range(1.0..=3.0);
    let ri = r.ceil() as i64;
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            let (x, y) = (cx as i64 + dx, cy as i64 + dy);
            if x < 0 || y < 0 || x as usize >= mask.width() || y as usize >= mask.height() {
                continue;
            }
            if ((dx * dx + dy * dy) as f64).sqrt() <= r {
                mask.set(x as usize, y as usize, value);
            }
        }
    }
}

/// Drops components smaller than 1% of the largest; returns the cleaned
/// mask and the number of components kept.
fn drop_fragments(mask: &BinaryMask) -> (BinaryMask, usize) {
    let cc = connected_components(mask, Connectivity::Eight);
    let areas = cc.areas();
    let main = areas[1..].iter().copied().max().unwrap_or(0);
    let keep: Vec<bool> = areas.iter().enumerate().map(|(l, &a)| l > 0 && 100 * a >= main).collect();
    let kept = keep.iter().filter(|k| **k).count();
    let out = BinaryMask::from_fn(mask.width(), mask.height(), |x, y| keep[cc.get(x, y) as usize]);
    (out, kept)
}

/// Seeded boundary perturbation of a single-component mask: smoothed normal
/// jitter, optional chip and bump, fragment removal, then the IoU and area
/// guards. Attempt `k` uses stream `k` of the seed. Returns the accepted mask
/// and the number of attempts.
pub fn perturb_boundary(mask: &BinaryMask, cfg: &PerturbConfig) -> Result<(BinaryMask, usize)> {
    cfg.validate()?;
    let n = connected_components(mask, Connectivity::Eight).count;
    match n {
        0 => return Err(Error::NoComponents),
        1 => {}
        _ => return Err(Error::MultipleComponents(n)),
    }
    let area0 = mask.count() as f64;
    for attempt in 0..cfg.max_resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt as u64);
        let amp = if cfg.jitter_amp_max > cfg.jitter_amp_min {
            rng.random_range(cfg.jitter_amp_min..=cfg.jitter_amp_max)
        } else {
            cfg.jitter_amp_min
        };
        let mut m = if amp > 0.0 { jitter(mask, amp, cfg.jitter_sigma, &mut rng)? } else { mask.clone() };
        if rng.random::<f64>() < cfg.chip_prob {
            stamp_disk(&mut m, &mut rng, false);
        }
        if rng.random::<f64>() < cfg.bump_prob {
            stamp_disk(&mut m, &mut rng, true);
        }
        let (m, kept) = drop_fragments(&m);
        let ratio = m.count() as f64 / area0;
        if kept == 1 && m.iou(mask) >= cfg.iou_min && (cfg.area_ratio_min..=cfg.area_ratio_max).contains(&ratio) {
            return Ok((m, attempt + 1));
        }
    }
    Err(Error::PerturbFailed(cfg.max_resamples))
}

/// Mean color of `img` over `mask`.
pub fn mean_color(img: &RgbImage, mask: &BinaryMask) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut n = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                let c = img.get(x, y);
                (0..3).for_each(|k| acc[k] += c[k]);
                n += 1.0;
            }
        }
    }
    if n == 0.0 {
        return [0.0; 3];
    }
    acc.map(|v| v / n)
}

/// Perturbs the single dark component of `img` and renders it back on white
/// with the mean foreground color.
pub fn perturb_image(img: &RgbImage, eta: f64, cfg: &PerturbConfig) -> Result<(RgbImage, usize)> {
    let mask = binarize(&img.luma(), eta);
    let (m, attempts) = perturb_boundary(&mask, cfg)?;
    Ok((m.to_rgb(mean_color(img, &mask)), attempts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub image: RgbImage,
    pub mask: BinaryMask,
    /// Ground-truth corner vertices; empty for smooth families.
    pub vertices: Vec<Point>,
    /// Ground-truth outline (closed polygon, canvas coordinates).
    pub outline: Vec<Point>,
}

pub const CORPUS_SIZE: usize = 128;
pub const FAMILIES: [&str; 10] =
    ["circle", "ellipse", "square", "rectangle", "rounded_rect", "triangle", "trapezoid", "pentagon", "hexagon", "star5"];

fn regular(n: usize, c: Point, r: f64, rot: f64) -> Vec<Point> {
    (0..n).map(|i| {
        let t = rot + 2.0 * PI * i as f64 / n as f64;
        Point::new(c.x + r * t.cos(), c.y + r * t.sin())
    }).collect()
}

fn rotate(pts: &[Point], c: Point, a: f64) -> Vec<Point> {
    let (s, co) = a.sin_cos();
    pts.iter().map(|p| {
        let d = *p - c;
        Point::new(c.x + d.x * co - d.y * s, c.y + d.x * s + d.y * co)
    }).collect()
}

fn rounded_rect(c: Point, hw: f64, hh: f64, r: f64) -> Vec<Point> {
    let mut pts = Vec::new();
    let corners = [(hw - r, hh - r, 0.0), (-(hw - r), hh - r, 0.5 * PI), (-(hw - r), -(hh - r), PI), (hw - r, -(hh - r), 1.5 * PI)];
    for (dx, dy, a0) in corners {
        for k in 0..=16 {
            let t = a0 + 0.5 * PI * k as f64 / 16.0;
            pts.push(Point::new(c.x + dx + r * t.cos(), c.y + dy + r * t.sin()));
        }
    }
    pts
}

/// Ten antialiased dark-on-white shape families at 128x128. The seed moves
/// and slightly rotates shapes; the square stays axis-aligned.
pub fn synth_corpus(seed: u64) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = CORPUS_SIZE as f64;
    let mut out = Vec::new();
    for name in FAMILIES {
        let c = Point::new(s / 2.0 + rng.random_range(-4i32..=4) as f64, s / 2.0 + rng.random_range(-4i32..=4) as f64);
        let rot: f64 = rng.random_range(-0.2..0.2);
        let (outline, vertices) = match name {
            "circle" => (regular(256, c, 40.0, 0.0), vec![]),
            "ellipse" => {
                let e: Vec<Point> = (0..256).map(|i| {
                    let t = 2.0 * PI * i as f64 / 256.0;
                    Point::new(c.x + 46.0 * t.cos(), c.y + 28.0 * t.sin())
                }).collect();
                (rotate(&e, c, rot), vec![])
            }
            "square" => {
                let (x0, y0) = (c.x.round() - 40.0, c.y.round() - 40.0);
                let v = vec![Point::new(x0, y0), Point::new(x0, y0 + 80.0), Point::new(x0 + 80.0, y0 + 80.0), Point::new(x0 + 80.0, y0)];
                (v.clone(), v)
            }
            "rectangle" => {
                let v = vec![Point::new(c.x - 46.0, c.y - 26.0), Point::new(c.x - 46.0, c.y + 26.0), Point::new(c.x + 46.0, c.y + 26.0), Point::new(c.x + 46.0, c.y - 26.0)];
                let v = rotate(&v, c, rot);
                (v.clone(), v)
            }
            "rounded_rect" => (rotate(&rounded_rect(c, 44.0, 32.0, 12.0), c, rot), vec![]),
            "triangle" => {
                let v = regular(3, c + Point::new(0.0, 6.0), 48.0, -PI / 2.0 + rot);
                (v.clone(), v)
            }
            "trapezoid" => {
                let v = vec![Point::new(c.x - 26.0, c.y - 30.0), Point::new(c.x - 46.0, c.y + 30.0), Point::new(c.x + 46.0, c.y + 30.0), Point::new(c.x + 26.0, c.y - 30.0)];
                let v = rotate(&v, c, rot);
                (v.clone(), v)
            }
            "pentagon" => {
                let v = regular(5, c, 44.0, -PI / 2.0 + rot);
                (v.clone(), v)
            }
            "hexagon" => {
                let v = regular(6, c, 44.0, rot);
                (v.clone(), v)
            }
            _ => {
                let v: Vec<Point> = (0..10).map(|i| {
                    let r = if i % 2 == 0 { 50.0 } else { 22.0 };
                    let t = -PI / 2.0 + rot + PI * i as f64 / 5.0;
                    Point::new(c.x + r * t.cos(), c.y + r * t.sin())
                }).collect();
                (v.clone(), v)
            }
        };
        // outline coordinates are pixel-edge based: shift onto pixel centers
        let shifted: Vec<Point> = outline.iter().map(|p| *p - Point::new(0.5, 0.5)).collect();
        let cov = rasterize_polygons(&[shifted.clone()], &RenderOptions::new(CORPUS_SIZE, CORPUS_SIZE))?;
        let gray = cov.map(|v| 1.0 - v);
        let mask = binarize(&gray, 0.5);
        let vertices = vertices.iter().map(|p| *p - Point::new(0.5, 0.5)).collect();
        out.push(CorpusEntry { name: name.to_string(), image: gray.to_rgb(), mask, vertices, outline: shifted });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub name: String,
    pub params: f64,
    pub paths: f64,
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub f_delta: f64,
    pub time_seconds: f64,
}

/// Metrics of a document rendered at the ground-truth size.
pub fn evaluate(name: &str, doc: &SvgDocument, gt: &RgbImage, eta: f64, delta: f64, opts: &RenderOptions, time_seconds: f64) -> Result<EvalRow> {
    let img = render_document(doc, &opts.with_size(gt.width(), gt.height()))?;
    let m = mse(&img, gt)?;
    let f = f_delta(&img.luma(), &gt.luma(), eta, delta)?;
    let pc = ParamCount::of_document(doc);
    Ok(EvalRow {
        name: name.to_string(),
        params: pc.params as f64,
        paths: pc.n_paths as f64,
        mse: m,
        psnr: psnr(m),
        ssim: ssim(&img, gt)?,
        f_delta: f.f,
        time_seconds,
    })
}

pub const CSV_HEADER: &str = "name,params,paths,mse,psnr,ssim,f_delta,time_seconds";

/// Column means, each metric averaged per image.
pub fn mean_row(rows: &[EvalRow]) -> Option<EvalRow> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let avg = |f: fn(&EvalRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Some(EvalRow {
        name: "mean".into(),
        params: avg(|r| r.params),
        paths: avg(|r| r.paths),
        mse: avg(|r| r.mse),
        psnr: avg(|r| r.psnr),
        ssim: avg(|r| r.ssim),
        f_delta: avg(|r| r.f_delta),
        time_seconds: avg(|r| r.time_seconds),
    })
}

fn csv_line(r: &EvalRow) -> String {
    format!("{},{},{},{:.8},{:.4},{:.6},{:.6},{:.4}", r.name, r.params, r.paths, r.mse, r.psnr, r.ssim, r.f_delta, r.time_seconds)
}

/// Text table and CSV: rows in the given order followed by the mean row.
pub fn eval_report(rows: &[EvalRow]) -> (String, String) {
    let all: Vec<EvalRow> = rows.iter().cloned().chain(mean_row(rows)).collect();
    let mut csv = format!("{CSV_HEADER}\n");
    let mut text = format!("{:<16} {:>8} {:>6} {:>12} {:>8} {:>8} {:>8} {:>8}\n", "name", "params", "paths", "mse", "psnr", "ssim", "f_delta", "time_s");
    for r in &all {
        csv.push_str(&csv_line(r));
        csv.push('\n');
        let _ = writeln!(
            text,
            "{:<16} {:>8.1} {:>6.1} {:>12.8} {:>8.3} {:>8.4} {:>8.4} {:>8.3}",
            r.name, r.params, r.paths, r.mse, r.psnr, r.ssim, r.f_delta, r.time_seconds
        );
    }
    (text, csv)
}
