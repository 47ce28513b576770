//! Rendering-guided refinement: stroke score, residual guidance, bounded
//! field updates with accept/rollback, and densify/simplify repair.

use crate::error::{invalid, Error, Result};
use crate::field::{AnchorField, FieldConfig};
use crate::fit::{build_sdf_target, project_self_intersections, pull_control_points, pull_segments, PullConfig, SdfTarget};
use crate::geom::{project_on_segment, Point};
use crate::raster::{binarize, distance_transform, Contour, GrayImage};
use crate::render::{render_candidate_gray, stroke_evidence, RenderOptions};
use crate::resolver::{init_beziers, resolve_on_contour, structure_from_arcs, ResolvedPath};

const F_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub delta: f64,
}

/// Tolerance-based stroke score of a rendered prediction against the
/// target, both binarized at `eta`.
pub fn f_delta(pred: &GrayImage, target: &GrayImage, eta: f64, delta: f64) -> Result<StrokeScore> {
    if pred.width() != target.width() || pred.height() != target.height() {
        return Err(invalid("f_delta: image sizes differ"));
    }
    let my = binarize(pred, eta);
    let mx = binarize(target, eta);
    let frac = |from: &crate::raster::BinaryMask, to: &crate::raster::BinaryMask| {
        let n = from.count();
        if n == 0 {
            return 1.0;
        }
        if to.is_empty() {
            return 0.0;
        }
        let d = distance_transform(to);
        let hit = from.bits().iter().zip(d.data()).filter(|(&b, &dv)| b && dv <= delta).count();
        hit as f64 / n as f64
    };
    let precision = frac(&my, &mx);
    let recall = frac(&mx, &my);
    let f = if my.is_empty() && mx.is_empty() { 1.0 } else { 2.0 * precision * recall / (precision + recall + F_EPS) };
    Ok(StrokeScore { precision, recall, f, delta })
}

/// Missing (E⁺) and extra (E⁻) evidence.
pub fn residual_maps(s_x: &GrayImage, s_y: &GrayImage) -> (GrayImage, GrayImage) {
    let (w, h) = (s_x.width(), s_x.height());
    let plus = GrayImage::from_fn(w, h, |x, y| (s_x.get(x, y) - s_y.get(x, y)).max(0.0));
    let minus = GrayImage::from_fn(w, h, |x, y| (s_y.get(x, y) - s_x.get(x, y)).max(0.0));
    (plus, minus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceMaps {
    pub w_plus: GrayImage,
    pub w_minus: GrayImage,
}

/// Below this width blurring is skipped.
const MIN_BLUR_SIGMA: f64 = 0.3;

/// Separable Gaussian blur truncated at 3σ; the kernel is renormalized over
/// in-bounds taps.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma < MIN_BLUR_SIGMA {
        return img.clone();
    }
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let (w, h) = (img.width() as i64, img.height() as i64);
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                let (mut acc, mut norm) = (0.0, 0.0);
                for (ki, i) in (-r..=r).enumerate() {
                    let (qx, qy) = if horizontal { (x + i, y) } else { (x, y + i) };
                    if qx < 0 || qy < 0 || qx >= w || qy >= h {
                        continue;
                    }
                    acc += k[ki] * src[(qy * w + qx) as usize];
                    norm += k[ki];
                }
                out[(y * w + x) as usize] = acc / norm;
            }
        }
        out
    };
    let data = pass(&pass(img.data(), true), false);
    GrayImage::from_fn(img.width(), img.height(), |x, y| data[y * img.width() + x])
}

pub fn guidance_maps(e_plus: &GrayImage, e_minus: &GrayImage, smooth_sigma: f64) -> GuidanceMaps {
    GuidanceMaps { w_plus: gaussian_blur(e_plus, smooth_sigma), w_minus: gaussian_blur(e_minus, smooth_sigma) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub delta: f64,
    pub tau_f: f64,
    pub max_rounds: usize,
    pub alpha: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub lambda_f: f64,
    pub tau_soft: f64,
    pub smooth_sigma: f64,
    pub steps: usize,
    pub step_size: f64,
    /// Simplification gate: absolute and relative true-render loss increase.
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Allow the last-resort midpoint insertion.
    pub densify: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            delta: 2.0,
            tau_f: 0.93,
            max_rounds: 2,
            alpha: 0.35,
            lambda_plus: 1.0,
            lambda_minus: 0.5,
            lambda_f: 0.05,
            tau_soft: 0.6,
            smooth_sigma: 1.5,
            steps: 100,
            step_size: 1.0,
            eps_abs: 1e-4,
            eps_rel: 0.02,
            densify: true,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.lambda_plus, self.lambda_minus, self.lambda_f];
        let ok = self.delta >= 0.0
            && self.tau_f > 0.0
            && self.tau_f <= 1.0
            && self.alpha > 0.0
            && weights.iter().all(|w| *w >= 0.0)
            && self.smooth_sigma >= 0.0
            && self.step_size > 0.0
            && self.eps_abs >= 0.0
            && self.eps_rel >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid("invalid refine config"))
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Loss of a bounded field perturbation; exposed for inspection.
pub fn refine_loss(f0: &AnchorField, maps: &GuidanceMaps, cfg: &RefineConfig, f: &[f64]) -> f64 {
    let (wp, wm) = (maps.w_plus.data(), maps.w_minus.data());
    f.iter()
        .enumerate()
        .map(|(i, &v)| {
            cfg.lambda_plus * wp[i] * softplus(cfg.tau_soft - v)
                + cfg.lambda_minus * wm[i] * v
                + cfg.lambda_f * (v - f0.values()[i]).abs()
        })
        .sum()
}

/// Gradient descent on a per-pixel perturbation ΔF with
/// F = clip(F₀ + α·tanh(ΔF), 0, 1), so |F − F₀| ≤ α everywhere.
pub fn refine_field(f0: &AnchorField, maps: &GuidanceMaps, cfg: &RefineConfig) -> AnchorField {
    let n = f0.values().len();
    let (wp, wm) = (maps.w_plus.data(), maps.w_minus.data());
    let base = f0.values();
    let mut dz = vec![0.0f64; n];
    let field = |dz: &[f64]| -> Vec<f64> { base.iter().zip(dz).map(|(b, d)| b + cfg.alpha * d.tanh()).collect() };
    for _ in 0..cfg.steps {
        let u = field(&dz);
        for i in 0..n {
            let raw = u[i];
            if !(0.0..=1.0).contains(&raw) {
                continue; // clipped: no gradient
            }
            let diff = raw - base[i];
            let l1 = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            let dl_df = -cfg.lambda_plus * wp[i] * sigmoid(cfg.tau_soft - raw) + cfg.lambda_minus * wm[i] + cfg.lambda_f * l1;
            let th = dz[i].tanh();
            dz[i] -= cfg.step_size * dl_df * cfg.alpha * (1.0 - th * th);
        }
    }
    AnchorField::from_clamped(f0.width(), f0.height(), field(&dz))
}

/// Everything needed to build, fit and score candidates for one component.
#[derive(Debug, Clone)]
pub struct FitContext {
    pub crop: GrayImage,
    pub contour: Contour,
    pub sdf: SdfTarget,
    pub eta: f64,
    pub field: FieldConfig,
    pub pull: PullConfig,
    pub refine: RefineConfig,
    /// Fast render settings for the inner loop.
    pub render: RenderOptions,
}

impl FitContext {
    pub fn new(crop: GrayImage, contour: Contour, eta: f64, field: FieldConfig, pull: PullConfig, refine: RefineConfig, supersample: usize) -> Result<Self> {
        field.validate()?;
        pull.validate()?;
        refine.validate()?;
        let sdf = build_sdf_target(&crop, eta, pull.sdf_source)?;
        let render = RenderOptions::new(crop.width(), crop.height()).with_supersample(supersample);
        render.validate()?;
        Ok(FitContext { crop, contour, sdf, eta, field, pull, refine, render })
    }

    pub fn render(&self, path: &ResolvedPath) -> Result<GrayImage> {
        render_candidate_gray(&path.path, &self.render)
    }

    pub fn score(&self, path: &ResolvedPath) -> Result<StrokeScore> {
        f_delta(&self.render(path)?, &self.crop, self.eta, self.refine.delta)
    }

    /// Mean absolute error of the inner-loop render against the crop.
    pub fn true_loss(&self, path: &ResolvedPath) -> Result<f64> {
        let r = self.render(path)?;
        let n = r.data().len() as f64;
        Ok(r.data().iter().zip(self.crop.data()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
    }

    /// Resolve a field on the component contour and fit its handles.
    pub fn candidate(&self, field: &AnchorField) -> Result<ResolvedPath> {
        let r = resolve_on_contour(field, &self.contour, &self.field)?;
        pull_control_points(&r, &self.crop, self.eta, &self.pull, &self.render)
    }

    fn pull_only(&self, path: &ResolvedPath, segs: &[usize]) -> ResolvedPath {
        let mut out = path.clone();
        out.path = project_self_intersections(&pull_segments(&path.path, segs, &self.sdf, &self.pull));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub f: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub path: ResolvedPath,
    pub score: StrokeScore,
    /// Refinement rounds actually run (round 0 excluded).
    pub rounds: usize,
    pub history: Vec<RoundRecord>,
    pub densified: bool,
}

impl RefineOutcome {
    /// One line per round: `round f accepted`.
    pub fn history_text(&self) -> String {
        self.history.iter().map(|r| format!("{} {:.6} {}\n", r.round, r.f, r.accepted)).collect()
    }

    /// f values of accepted rounds, in order.
    pub fn accepted_scores(&self) -> Vec<f64> {
        self.history.iter().filter(|r| r.accepted).map(|r| r.f).collect()
    }
}

/// Round 0 resolves and fits `field`; further rounds refine the field from
/// render residuals, re-resolve and keep the candidate only if it beats the
/// best score so far or meets τ_F.
pub fn refine_loop(ctx: &FitContext, field: &AnchorField) -> Result<RefineOutcome> {
    let cfg = &ctx.refine;
    let mut best = ctx.candidate(field)?;
    let mut best_score = ctx.score(&best)?;
    let mut history = vec![RoundRecord { round: 0, f: best_score.f, accepted: true }];
    let mut latest = field.clone();
    let mut rounds = 0;
    let s_x = stroke_evidence(&ctx.crop);
    while best_score.f < cfg.tau_f && rounds < cfg.max_rounds {
        rounds += 1;
        let s_y = stroke_evidence(&ctx.render(&best)?);
        let (ep, em) = residual_maps(&s_x, &s_y);
        let maps = guidance_maps(&ep, &em, cfg.smooth_sigma);
        latest = refine_field(&latest, &maps, cfg);
        let cand = ctx.candidate(&latest).and_then(|c| ctx.score(&c).map(|s| (c, s)));
        match cand {
            Ok((c, s)) if s.f > best_score.f || s.f >= cfg.tau_f => {
                history.push(RoundRecord { round: rounds, f: s.f, accepted: true });
                best = c;
                best_score = s;
            }
            Ok((_, s)) => history.push(RoundRecord { round: rounds, f: s.f, accepted: false }),
            Err(_) => history.push(RoundRecord { round: rounds, f: 0.0, accepted: false }),
        }
    }
    Ok(RefineOutcome { path: best, score: best_score, rounds, history, densified: false })
}

/// Splits segment `j` at the contour point halfway along its routed arc.
/// The two new segments get fresh handles; all others are kept.
pub fn densify_midpoint(path: &ResolvedPath, contour: &Contour, j: usize, tangent_window: f64) -> Result<ResolvedPath> {
    let st = &path.structure;
    if j >= st.segment_count() {
        return Err(invalid(format!("segment {j} out of range")));
    }
    let l = st.chord_lens[j];
    if l < 2.0 {
        return Err(Error::DensifyRejected(format!("routed length {l:.3} < 2 px")));
    }
    let mid = contour.wrap_s(st.arc_pos[j] + l / 2.0);
    let mut arcs = st.arc_pos.clone();
    arcs.push(mid);
    let nst = structure_from_arcs(&arcs, contour, tangent_window)?;
    if nst.len() != st.len() + 1 {
        return Err(Error::DensifyRejected("midpoint merged with an existing anchor".into()));
    }
    let fresh = init_beziers(nst)?;
    let mut out = fresh.clone();
    // untouched segments keep their fitted handles
    for seg in out.path.segments.iter_mut() {
        if let Some(old) = path.path.segments.iter().find(|o| o.p0 == seg.p0 && o.p3 == seg.p3) {
            *seg = *old;
        }
    }
    out.fallback = path.fallback;
    Ok(out)
}

/// Segment whose nearest-pixel attributed render error is largest.
pub fn worst_segment(ctx: &FitContext, path: &ResolvedPath) -> Result<usize> {
    let render = ctx.render(path)?;
    let polys: Vec<Vec<Point>> = path.path.segments.iter().map(|s| crate::svg::flatten(s, ctx.render.flatten_tol)).collect();
    let mut err = vec![0.0; polys.len()];
    for y in 0..ctx.crop.height() {
        for x in 0..ctx.crop.width() {
            let e = (render.get(x, y) - ctx.crop.get(x, y)).abs();
            if e == 0.0 {
                continue;
            }
            let p = Point::new(x as f64, y as f64);
            let mut best = (f64::INFINITY, 0);
            for (j, poly) in polys.iter().enumerate() {
                for w in poly.windows(2) {
                    let d = p.dist(w[0].lerp(w[1], project_on_segment(p, w[0], w[1])));
                    if d < best.0 {
                        best = (d, j);
                    }
                }
            }
            err[best.1] += e;
        }
    }
    Ok((0..err.len()).fold(0, |b, j| if err[j] > err[b] { j } else { b }))
}

/// Last-resort repair: one midpoint insertion on the worst segment, kept
/// only if the stroke score strictly improves.
pub fn densify_if_needed(ctx: &FitContext, out: RefineOutcome) -> Result<RefineOutcome> {
    if !ctx.refine.densify || out.score.f >= ctx.refine.tau_f {
        return Ok(out);
    }
    let j = worst_segment(ctx, &out.path)?;
    let Ok(dense) = densify_midpoint(&out.path, &ctx.contour, j, ctx.field.tangent_window) else {
        return Ok(out);
    };
    let new_segs: Vec<usize> = (0..dense.path.segments.len())
        .filter(|&i| !out.path.path.segments.contains(&dense.path.segments[i]))
        .collect();
    let fitted = ctx.pull_only(&dense, &new_segs);
    let s = ctx.score(&fitted)?;
    if s.f > out.score.f {
        Ok(RefineOutcome { path: fitted, score: s, densified: true, ..out })
    } else {
        Ok(out)
    }
}

/// Path with anchor `i` removed: its two segments become one refit cubic.
fn without_anchor(ctx: &FitContext, path: &ResolvedPath, i: usize) -> Result<ResolvedPath> {
    let st = &path.structure;
    let arcs: Vec<f64> = st.arc_pos.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &s)| s).collect();
    let nst = structure_from_arcs(&arcs, &ctx.contour, ctx.field.tangent_window)?;
    let mut cand = init_beziers(nst)?;
    let mut merged = Vec::new();
    for (k, seg) in cand.path.segments.iter_mut().enumerate() {
        match path.path.segments.iter().find(|o| o.p0 == seg.p0 && o.p3 == seg.p3) {
            Some(old) => *seg = *old,
            None => merged.push(k),
        }
    }
    cand.fallback = path.fallback;
    Ok(ctx.pull_only(&cand, &merged))
}

/// Greedy anchor removal under the true-render loss gate; stops when no
/// removal passes. Closed paths keep at least three anchors.
pub fn simplify(ctx: &FitContext, path: &ResolvedPath) -> Result<ResolvedPath> {
    let (eps_abs, eps_rel) = (ctx.refine.eps_abs, ctx.refine.eps_rel);
    let mut cur = path.clone();
    let mut cur_loss = ctx.true_loss(&cur)?;
    loop {
        let min = if cur.structure.closed { 3 } else { 2 };
        if cur.structure.len() <= min {
            return Ok(cur);
        }
        let mut best: Option<(f64, ResolvedPath, f64)> = None;
        for i in 0..cur.structure.len() {
            let Ok(cand) = without_anchor(ctx, &cur, i) else { continue };
            let loss = ctx.true_loss(&cand)?;
            let inc = loss - cur_loss;
            let pass = inc <= eps_abs || (cur_loss > 0.0 && inc / cur_loss <= eps_rel);
            if pass && best.as_ref().is_none_or(|b| inc < b.0) {
                best = Some((inc, cand, loss));
            }
        }
        match best {
            Some((_, cand, loss)) => {
                cur = cand;
                cur_loss = loss;
            }
            None => return Ok(cur),
        }
    }
}

/// refine_loop, then last-resort densification, then simplification.
pub fn reconstruct(ctx: &FitContext, field: &AnchorField) -> Result<RefineOutcome> {
    let out = densify_if_needed(ctx, refine_loop(ctx, field)?)?;
    let simple = simplify(ctx, &out.path)?;
    if simple.structure.len() == out.path.structure.len() {
        return Ok(out);
    }
    let score = ctx.score(&simple)?;
    Ok(RefineOutcome { path: simple, score, ..out })
}
