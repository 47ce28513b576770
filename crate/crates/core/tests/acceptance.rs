//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the report is
//! always printed.

use std::f64::consts::PI;
use std::time::Instant;

use anchorvec::config::PipelineConfig;
use anchorvec::field::{build_target_field, crop_contour, predict_field, AnchorField, FieldConfig};
use anchorvec::fit::{pull_loss, PullConfig, SdfSource, SdfTarget};
use anchorvec::harness::{delta_params, mse, perturb_boundary, synth_corpus, CorpusEntry, PerturbConfig};
use anchorvec::pipeline::{reconstruct_image, single_path};
use anchorvec::raster::{distance_transform, BinaryMask, DistanceField, GrayImage, RgbImage};
use anchorvec::refine::{densify_midpoint, f_delta, refine_loop, simplify, FitContext};
use anchorvec::render::{rasterize_polygons, render_document, RenderOptions};
use anchorvec::resolver::{detect_anchors, detect_peaks, init_beziers, project_and_order, structure_from_arcs};
use anchorvec::svg::{count_params, parse_svg, serialize_svg, CubicSegment, ParamCount, Rgba, SvgDocument, VectorPath};
use anchorvec::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- 1: distance transform -------------------------------------------------

fn brute_edt(m: &BinaryMask) -> Vec<f64> {
    let (w, h) = (m.width(), m.height());
    let fg: Vec<(i64, i64)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).filter(|&(x, y)| m.get(x, y)).map(|(x, y)| (x as i64, y as i64)).collect();
    if fg.is_empty() {
        // documented sentinel for masks without foreground
        return vec![(w + h) as f64; w * h];
    }
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x as i64, y as i64)))
        .map(|(x, y)| {
            fg.iter().map(|&(fx, fy)| ((fx - x).pow(2) + (fy - y).pow(2)) as f64).fold(f64::INFINITY, f64::min).sqrt()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut r = rng(1);
    let mut bad = 0;
    for _ in 0..100 {
        let (w, h) = (r.random_range(1..=48), r.random_range(1..=48));
        let p: f64 = r.random_range(0.0..0.3);
        let m = BinaryMask::from_fn(w, h, |_, _| r.random::<f64>() < p);
        if distance_transform(&m).data() != brute_edt(&m).as_slice() {
            bad += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    (bad == 0 && secs < 10.0, format!("{bad}/100 mismatches, {secs:.2} s"))
}

// ---- 2: NMS ----------------------------------------------------------------

fn oracle_nms(f: &AnchorField, tau: f64, r: usize) -> Vec<(usize, usize)> {
    let (w, h) = (f.width(), f.height());
    let mut cands = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = f.get(x, y);
            if v < tau {
                continue;
            }
            let mut ok = true;
            for qy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for qx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    ok &= f.get(qx, qy) <= v;
                }
            }
            if ok {
                cands.push((v, y * w + x));
            }
        }
    }
    // descending value, ties by row-major index
    cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (_, i) in cands {
        let (x, y) = (i % w, i / w);
        if kept.iter().all(|&(kx, ky)| ((kx as f64 - x as f64).powi(2) + (ky as f64 - y as f64).powi(2)).sqrt() > r as f64) {
            kept.push((x, y));
        }
    }
    kept
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let cfg = FieldConfig::default();
    let mut bad = 0;
    for _ in 0..200 {
        let (w, h) = (r.random_range(8..=48), r.random_range(8..=48));
        let levels = [0.5, 0.6, 0.75, 0.9, 1.0];
        let vals: Vec<f64> = (0..w * h)
            .map(|_| if r.random::<f64>() < 0.08 { levels[r.random_range(0..levels.len())] } else { r.random_range(0.0..0.45) })
            .collect();
        let f = AnchorField::new(w, h, vals).unwrap();
        let mut got: Vec<(usize, usize)> = detect_peaks(&f, &cfg).iter().map(|p| (p.x, p.y)).collect();
        let mut want = oracle_nms(&f, cfg.tau_a, cfg.nms_radius);
        got.sort();
        want.sort();
        if got != want {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad}/200 peak-set mismatches"))
}

// ---- 3: F_delta ------------------------------------------------------------

fn oracle_f(pred: &BinaryMask, target: &BinaryMask, delta: f64) -> (f64, f64, f64) {
    let pts = |m: &BinaryMask| -> Vec<(f64, f64)> {
        (0..m.height()).flat_map(|y| (0..m.width()).map(move |x| (x, y))).filter(|&(x, y)| m.get(x, y)).map(|(x, y)| (x as f64, y as f64)).collect()
    };
    let (py, px) = (pts(pred), pts(target));
    let frac = |a: &[(f64, f64)], b: &[(f64, f64)]| {
        if a.is_empty() {
            return 1.0;
        }
        a.iter().filter(|p| b.iter().any(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() <= delta)).count() as f64 / a.len() as f64
    };
    let (p, rc) = (frac(&py, &px), frac(&px, &py));
    let f = if py.is_empty() && px.is_empty() { 1.0 } else { 2.0 * p * rc / (p + rc + 1e-8) };
    (p, rc, f)
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let mut bad = 0;
    for _ in 0..100 {
        let (da, db): (f64, f64) = (r.random_range(0.0..0.3), r.random_range(0.0..0.3));
        let a = BinaryMask::from_fn(32, 32, |_, _| r.random::<f64>() < da);
        let b = BinaryMask::from_fn(32, 32, |_, _| r.random::<f64>() < db);
        let delta = [0.5, 1.0, 1.5, 2.0, 3.0][r.random_range(0..5)];
        let s = f_delta(&a.to_gray(0.0), &b.to_gray(0.0), 0.5, delta).unwrap();
        if (s.precision, s.recall, s.f) != oracle_f(&a, &b, delta) {
            bad += 1;
        }
    }
    let l0 = BinaryMask::from_fn(32, 32, |x, y| x == 12 && (3..29).contains(&y)).to_gray(0.0);
    let l1 = BinaryMask::from_fn(32, 32, |x, y| x == 13 && (3..29).contains(&y)).to_gray(0.0);
    let f2 = f_delta(&l0, &l1, 0.5, 2.0).unwrap().f;
    let f05 = f_delta(&l0, &l1, 0.5, 0.5).unwrap().f;
    let line_ok = (f2 - 1.0).abs() < 1e-7 && f05 == 0.0;
    (bad == 0 && line_ok, format!("{bad}/100 mismatches; shifted line f={f2:.8} (delta 2), f={f05} (delta 0.5)"))
}

// ---- 4: pull gradients -----------------------------------------------------

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, w) = (48usize, 48usize);
        let (cx, cy) = (r.random_range(10.0..38.0), r.random_range(10.0..38.0));
        let (a, b, ph): (f64, f64, f64) = (r.random_range(0.1..0.6), r.random_range(0.05..0.3), r.random_range(0.0..PI));
        // strictly positive smooth distance-like target
        let vals: Vec<f64> = (0..n * w)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                1.0 + ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() * a + (x * b + ph).sin() * 0.5
            })
            .collect();
        let sdf = SdfTarget::new(DistanceField::from_raw(w, n, vals), SdfSource::Edge);
        let pt = |r: &mut ChaCha8Rng| Point::new(r.random_range(8.0..40.0), r.random_range(8.0..40.0));
        let (p0, p3, p6) = (pt(&mut r), pt(&mut r), pt(&mut r));
        let init = VectorPath::new(
            vec![CubicSegment::line(p0, p3), CubicSegment::line(p3, p6)],
            false,
            Rgba::BLACK,
        )
        .unwrap();
        // fold the handles back past each other so every regularizer is active
        let mut cur = init.clone();
        for s in cur.segments.iter_mut() {
            let d = s.p3 - s.p0;
            s.p1 = s.p0 + d * r.random_range(0.55..0.8) + Point::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            s.p2 = s.p0 + d * r.random_range(0.2..0.45) + Point::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            s.p1 = s.p0 - (s.p1 - s.p0) * 0.3;
        }
        let m = |r: &mut ChaCha8Rng| r.random_range(0.5..2.0);
        let d = PullConfig::default();
        let cfg = PullConfig {
            lambda_h: d.lambda_h * m(&mut r),
            lambda_l: d.lambda_l * m(&mut r),
            lambda_t: d.lambda_t * m(&mut r),
            lambda_p: d.lambda_p * m(&mut r),
            lambda_s: d.lambda_s * m(&mut r),
            lambda_sep: d.lambda_sep * m(&mut r),
            ..d
        };
        let bad = [0, 1];
        let l = pull_loss(&cur, &bad, &sdf, &init, &cfg);
        let h = 1e-6;
        for (si, &seg) in bad.iter().enumerate() {
            for which in 0..2 {
                for axis in 0..2 {
                    let eval = |dv: f64| {
                        let mut q = cur.clone();
                        let t = if which == 0 { &mut q.segments[seg].p1 } else { &mut q.segments[seg].p2 };
                        if axis == 0 {
                            t.x += dv;
                        } else {
                            t.y += dv;
                        }
                        pull_loss(&q, &bad, &sdf, &init, &cfg).loss
                    };
                    let num = (eval(h) - eval(-h)) / (2.0 * h);
                    let g = if which == 0 { l.grads[si].0 } else { l.grads[si].1 };
                    let ana = if axis == 0 { g.x } else { g.y };
                    let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
                    worst = worst.max(rel);
                }
            }
        }
    }
    (worst <= 1e-4, format!("max relative error {worst:.2e} over 50 configurations"))
}

// ---- 5: field round trip ---------------------------------------------------

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let cfg = FieldConfig::default();
    let sep = 4.0 * cfg.sigma_a;
    let mut ok = 0;
    for _ in 0..100 {
        let k = r.random_range(3..=10);
        let mut pts: Vec<Point> = Vec::new();
        while pts.len() < k {
            let p = Point::new(r.random_range(6.0..58.0), r.random_range(6.0..58.0));
            if pts.iter().all(|q| q.dist(p) >= sep) {
                pts.push(p);
            }
        }
        let f = build_target_field(&pts, None, &cfg, 64, 64).unwrap();
        let det = detect_anchors(&f, &cfg);
        let matched = det.len() == pts.len() && pts.iter().all(|p| det.iter().any(|d| d.dist(*p) <= 1.0));
        ok += matched as usize;
    }
    (ok == 100, format!("{ok}/100 trials recovered every anchor within 1 px"))
}

// ---- 6: ordering -----------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut ok = 0;
    let opts = RenderOptions::new(128, 128);
    for _ in 0..200 {
        let n = r.random_range(5..=12);
        let c = Point::new(r.random_range(58.0..70.0), r.random_range(58.0..70.0));
        let verts: Vec<Point> = loop {
            let mut ang: Vec<f64> = (0..n).map(|_| r.random_range(0.0..2.0 * PI)).collect();
            ang.sort_by(f64::total_cmp);
            let v: Vec<Point> = ang.iter().map(|a| {
                let rad = r.random_range(35.0..48.0);
                Point::new(c.x + rad * a.cos(), c.y + rad * a.sin())
            }).collect();
            let convex = (0..n).all(|i| {
                let (a, b, d) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
                (b - a).cross(d - b) > 0.0
            });
            let spaced = (0..n).all(|i| v[i].dist(v[(i + 1) % n]) > 6.0);
            if convex && spaced {
                break v;
            }
        };
        let crop = rasterize_polygons(&[verts.clone()], &opts).unwrap().map(|v| 1.0 - v);
        let contour = crop_contour(&crop, 0.5, 0.5).unwrap();
        let mut shuffled: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        let input: Vec<Point> = shuffled.iter().map(|&i| verts[i]).collect();
        let st = project_and_order(&input, &contour, None).unwrap();
        // the vertex list is ordered with positive shoelace area; walk it the
        // same way as the contour
        let gt: Vec<Point> = if contour.signed_area() > 0.0 { verts.clone() } else { verts.iter().rev().copied().collect() };
        let same_len = st.anchors.len() == n;
        let start = gt.iter().position(|v| v.dist(st.anchors[0]) < 1.5);
        let cyclic = same_len
            && start.is_some_and(|s0| (0..n).all(|i| gt[(s0 + i) % n].dist(st.anchors[i]) < 1.5));
        ok += cyclic as usize;
    }
    (ok == 200, format!("{ok}/200 polygons in ground-truth cyclic order"))
}

// ---- 7: single-path fidelity -----------------------------------------------

struct CleanRun {
    name: String,
    params: usize,
    mse: f64,
    anchors: usize,
    secs: f64,
}

fn run_single(e: &CorpusEntry, img: &RgbImage, cfg: &PipelineConfig) -> anchorvec::Result<(usize, f64, usize)> {
    let res = single_path(&img.luma(), None, cfg)?;
    let out = render_document(&res.doc, &cfg.render_options(img.width(), img.height()))?;
    let _ = e;
    Ok((res.params.params, mse(&out, &e.image)?, res.outcome.path.structure.len()))
}

fn clean_runs(corpus: &[CorpusEntry], cfg: &PipelineConfig) -> Vec<CleanRun> {
    corpus
        .iter()
        .map(|e| {
            let t = Instant::now();
            let (params, m, anchors) = run_single(e, &e.image, cfg).unwrap_or((usize::MAX, f64::INFINITY, 0));
            CleanRun { name: e.name.clone(), params, mse: m, anchors, secs: t.elapsed().as_secs_f64() }
        })
        .collect()
}

fn criterion_7(runs: &[CleanRun]) -> Outcome {
    let mut fails = Vec::new();
    let mut detail = Vec::new();
    for r in runs {
        detail.push(format!("{}:{}p/{:.5}/{}a/{:.2}s", r.name, r.params, r.mse, r.anchors, r.secs));
        let mut ok = r.mse <= 0.005 && r.params <= 120 && r.secs < 2.0;
        if r.name == "square" {
            ok &= r.anchors == 4;
        }
        if r.name == "star5" {
            ok &= r.anchors == 10;
        }
        if !ok {
            fails.push(r.name.clone());
        }
    }
    (fails.is_empty(), format!("failing {:?}; {}", fails, detail.join(" ")))
}

// ---- 8: robustness ---------------------------------------------------------

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_8(corpus: &[CorpusEntry], clean: &[CleanRun], cfg: &PipelineConfig) -> Outcome {
    let mut dparams = Vec::new();
    let mut pert_mse = Vec::new();
    let mut guard_viol = 0;
    let mut failed = 0;
    for (k, (e, c)) in corpus.iter().zip(clean).enumerate() {
        for seed in 0..5u64 {
            let pc = PerturbConfig { seed: 1000 * k as u64 + seed, ..cfg.perturb };
            let Ok((m, _)) = perturb_boundary(&e.mask, &pc) else {
                failed += 1;
                continue;
            };
            let ratio = m.count() as f64 / e.mask.count() as f64;
            if m.iou(&e.mask) < 0.90 || !(0.93..=1.07).contains(&ratio) {
                guard_viol += 1;
            }
            let img = m.to_rgb([0.0; 3]);
            match run_single(e, &img, cfg) {
                Ok((p, mse_clean, _)) => {
                    dparams.push(delta_params(c.params as f64, p as f64).unwrap_or(f64::INFINITY));
                    pert_mse.push(mse_clean);
                }
                Err(_) => failed += 1,
            }
        }
    }
    let md = median(dparams.clone());
    let mm = median(pert_mse);
    let clean_mse = median(clean.iter().map(|c| c.mse).collect());
    let ok = guard_viol == 0 && failed == 0 && md <= 10.0 && mm <= 2.0 * clean_mse;
    (
        ok,
        format!(
            "median dParams {md:+.2}%, median MSE vs clean {mm:.5} (clean median {clean_mse:.5}, bound {:.5}), guard violations {guard_viol}, failures {failed}",
            2.0 * clean_mse
        ),
    )
}

// ---- 9: refinement ---------------------------------------------------------

fn criterion_9(corpus: &[CorpusEntry], cfg: &PipelineConfig) -> Outcome {
    // 128 px crop with the pipeline's 8 px padding, one corner left out of the field
    let (lo, hi) = (8usize, 120usize);
    let crop = GrayImage::from_fn(128, 128, |x, y| if (lo..hi).contains(&x) && (lo..hi).contains(&y) { 0.0 } else { 1.0 });
    let contour = crop_contour(&crop, cfg.eta, cfg.field.contour_offset).unwrap();
    let refine = anchorvec::refine::RefineConfig { max_rounds: 2, ..cfg.refine };
    let ctx = FitContext::new(crop, contour, cfg.eta, cfg.field, cfg.pull, refine, cfg.render.inner_supersample).unwrap();
    let (a, b) = (lo as f64 - 0.5, hi as f64 - 0.5);
    let three = [Point::new(a, b), Point::new(b, b), Point::new(b, a)];
    let field = build_target_field(&three, Some(&ctx.contour), &ctx.field, 128, 128).unwrap();
    let out = refine_loop(&ctx, &field).unwrap();
    let f0 = out.history[0].f;
    let gain = out.score.f - f0;
    let anchors = out.path.structure.len();
    let square_ok = gain >= 0.05 && anchors == 4;

    let mut monotone = true;
    for e in corpus {
        let gray = e.image.luma();
        let Ok((f, contour)) = predict_field(&gray, cfg.eta, &cfg.field) else {
            monotone = false;
            continue;
        };
        let ctx = FitContext::new(gray, contour, cfg.eta, cfg.field, cfg.pull, refine, cfg.render.inner_supersample).unwrap();
        let Ok(o) = refine_loop(&ctx, &f) else {
            monotone = false;
            continue;
        };
        monotone &= o.accepted_scores().windows(2).all(|w| w[1] >= w[0]) && o.score.f >= f0_of(&o);
    }
    (
        square_ok && monotone,
        format!(
            "3-anchor square: round-0 f {f0:.4}, final f {:.4} (gain {gain:+.4}), rounds {}, anchors {anchors}; corpus histories non-decreasing: {monotone}",
            out.score.f, out.rounds
        ),
    )
}

fn f0_of(o: &anchorvec::refine::RefineOutcome) -> f64 {
    o.history[0].f
}

// ---- 10: simplification ----------------------------------------------------

fn criterion_10(corpus: &[CorpusEntry], cfg: &PipelineConfig) -> Outcome {
    let sq = corpus.iter().find(|e| e.name == "square").unwrap();
    let gray = sq.image.luma();
    let contour = crop_contour(&gray, cfg.eta, cfg.field.contour_offset).unwrap();
    let ctx = FitContext::new(gray, contour, cfg.eta, cfg.field, cfg.pull, cfg.refine, cfg.render.inner_supersample).unwrap();
    let s_of = |p: Point| anchorvec::raster::point_contour_distance(p, &ctx.contour).1;
    let arcs: Vec<f64> = sq.vertices.iter().map(|&v| s_of(v)).collect();
    let four = init_beziers(structure_from_arcs(&arcs, &ctx.contour, cfg.field.tangent_window).unwrap()).unwrap();
    let five = densify_midpoint(&four, &ctx.contour, 0, cfg.field.tangent_window).unwrap();
    let out = simplify(&ctx, &five).unwrap();
    let removed = five.structure.len() - out.structure.len();
    let corners_kept = sq.vertices.iter().all(|v| out.structure.anchors.iter().any(|a| a.dist(*v) < 1e-6));
    let four_kept = simplify(&ctx, &four).unwrap().structure.len() == 4;

    let mut never_more = true;
    for e in corpus {
        let gray = e.image.luma();
        let (f, contour) = predict_field(&gray, cfg.eta, &cfg.field).unwrap();
        let ctx = FitContext::new(gray, contour, cfg.eta, cfg.field, cfg.pull, cfg.refine, cfg.render.inner_supersample).unwrap();
        let o = refine_loop(&ctx, &f).unwrap();
        let s = simplify(&ctx, &o.path).unwrap();
        let pc = |p: &VectorPath| count_params(&serialize_svg(&SvgDocument::new(128, 128, vec![p.clone()]).unwrap())).unwrap().params;
        never_more &= pc(&s.path) <= pc(&o.path.path);
    }
    (
        removed >= 1 && corners_kept && four_kept && never_more,
        format!("densified square: removed {removed}, corners kept {corners_kept}; plain square kept 4: {four_kept}; corpus params never increase: {never_more}"),
    )
}

// ---- 11: full image --------------------------------------------------------

const PALETTE: [[u8; 3]; 10] = [
    [200, 30, 40],
    [30, 120, 200],
    [40, 160, 60],
    [240, 180, 20],
    [120, 50, 160],
    [20, 20, 20],
    [250, 120, 170],
    [0, 170, 170],
    [140, 90, 40],
    [110, 110, 120],
];

struct Scene {
    img: RgbImage,
    labels: Vec<usize>,
    regions: usize,
}

fn make_scene(seed: u64) -> Scene {
    let mut r = rng(11_000 + seed);
    let (w, h) = (160usize, 160usize);
    let n = r.random_range(3..=8);
    let mut colors: Vec<usize> = (0..PALETTE.len()).collect();
    for i in (1..colors.len()).rev() {
        colors.swap(i, r.random_range(0..=i));
    }
    let mut shapes: Vec<(Point, f64, Vec<Point>)> = Vec::new();
    let mut tries = 0;
    while shapes.len() < n && tries < 10_000 {
        tries += 1;
        let rad = r.random_range(12.0..26.0);
        let c = Point::new(r.random_range(rad + 3.0..w as f64 - rad - 3.0), r.random_range(rad + 3.0..h as f64 - rad - 3.0));
        if shapes.iter().any(|s| s.0.dist(c) < s.1 + rad + 4.0) {
            continue;
        }
        let kind = r.random_range(0..4);
        let rot: f64 = r.random_range(0.0..PI);
        let poly: Vec<Point> = match kind {
            0 => (0..96).map(|i| {
                let t = 2.0 * PI * i as f64 / 96.0;
                Point::new(c.x + rad * t.cos(), c.y + rad * t.sin())
            }).collect(),
            1 => (0..4).map(|i| {
                let t = rot + PI / 4.0 + PI / 2.0 * i as f64;
                Point::new(c.x + rad * t.cos(), c.y + rad * t.sin())
            }).collect(),
            2 => (0..3).map(|i| {
                let t = rot + 2.0 * PI / 3.0 * i as f64;
                Point::new(c.x + rad * t.cos(), c.y + rad * t.sin())
            }).collect(),
            _ => (0..64).map(|i| {
                let t = 2.0 * PI * i as f64 / 64.0;
                let (ex, ey) = (rad * t.cos(), rad * 0.6 * t.sin());
                Point::new(c.x + ex * rot.cos() - ey * rot.sin(), c.y + ex * rot.sin() + ey * rot.cos())
            }).collect(),
        };
        shapes.push((c, rad, poly));
    }
    let paths: Vec<VectorPath> = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let k = s.2.len();
            let segs = (0..k).map(|j| CubicSegment::line(s.2[j], s.2[(j + 1) % k])).collect();
            let c = PALETTE[colors[i]];
            VectorPath::new(segs, true, Rgba::opaque(c.map(|v| v as f64 / 255.0))).unwrap()
        })
        .collect();
    let doc = SvgDocument::new(w, h, paths).unwrap();
    let img = render_document(&doc, &RenderOptions::new(w, h)).unwrap();
    let mut labels = vec![0usize; w * h];
    for (i, s) in shapes.iter().enumerate() {
        let cov = rasterize_polygons(&[s.2.clone()], &RenderOptions::new(w, h).with_supersample(1)).unwrap();
        for (k, l) in labels.iter_mut().enumerate() {
            if cov.data()[k] >= 0.5 {
                *l = i + 1;
            }
        }
    }
    Scene { img, labels, regions: shapes.len() }
}

fn interior_mask(labels: &[usize], w: usize, h: usize) -> BinaryMask {
    let boundary = BinaryMask::from_fn(w, h, |x, y| {
        let l = labels[y * w + x];
        [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h && labels[ny as usize * w + nx as usize] != l
        })
    });
    let d = distance_transform(&boundary);
    BinaryMask::from_fn(w, h, |x, y| d.get(x, y) >= 2.0)
}

fn criterion_11(cfg: &PipelineConfig) -> Outcome {
    let mut worst_frac: f64 = 1.0;
    let mut count_bad = Vec::new();
    let mut nondet = Vec::new();
    for seed in 0..20 {
        let sc = make_scene(seed);
        let (w, h) = (sc.img.width(), sc.img.height());
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let res = pool(1).install(|| reconstruct_image(&sc.img, cfg));
        let Ok(res) = res else {
            count_bad.push((seed, 0, sc.regions));
            worst_frac = 0.0;
            continue;
        };
        let svg = serialize_svg(&res.doc);
        let again = pool(4).install(|| reconstruct_image(&sc.img, cfg)).map(|r| serialize_svg(&r.doc));
        if again.ok().as_deref() != Some(svg.as_str()) {
            nondet.push(seed);
        }
        if res.doc.paths.len() != sc.regions {
            count_bad.push((seed, res.doc.paths.len(), sc.regions));
        }
        let out = render_document(&res.doc, &cfg.render_options(w, h)).unwrap();
        let inner = interior_mask(&sc.labels, w, h);
        let (mut good, mut total) = (0usize, 0usize);
        for y in 0..h {
            for x in 0..w {
                if !inner.get(x, y) {
                    continue;
                }
                total += 1;
                let (a, b) = (out.get(x, y), sc.img.get(x, y));
                good += (0..3).all(|k| (a[k] - b[k]).abs() <= 2.0 / 255.0 + 1e-9) as usize;
            }
        }
        worst_frac = worst_frac.min(good as f64 / total as f64);
    }
    (
        worst_frac >= 0.95 && count_bad.is_empty() && nondet.is_empty(),
        format!("worst interior agreement {:.2}%, path-count mismatches {count_bad:?}, nondeterministic {nondet:?}", 100.0 * worst_frac),
    )
}

// ---- 12: parameter counting ------------------------------------------------

fn numeric_tokens(d: &str) -> usize {
    d.split(|c: char| c.is_whitespace() || c == ',').filter(|t| t.parse::<f64>().is_ok()).count()
}

fn criterion_12() -> Outcome {
    let cases: [&[&str]; 5] = [
        &["M 0 0 C 1 1 2 2 3 3 Z"],
        &["M 1 2 L 3 4 L 5 6 Z"],
        &["M 0 0 C 1 1 2 2 3 3 C 4 4 5 5 6 6 Z", "M 10,10 L 20,10 L 20,20 Z"],
        &["M -1.5 2e1 C 0.25 1 2 -3 4 4 L 7 7 Z", "M 0 0 L 1 0 L 1 1 Z", "M 5 5 C 6 5 6 6 5 6 Z"],
        &["M 3 3 L 9 3 C 9 9 9 9 3 9 Z"],
    ];
    let mut bad = Vec::new();
    for (i, ds) in cases.iter().enumerate() {
        let body: String = ds.iter().map(|d| format!("<path d=\"{d}\" fill=\"#102030\"/>")).collect();
        let svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"32\" height=\"32\">{body}</svg>");
        let geom: usize = ds.iter().map(|d| numeric_tokens(d)).sum();
        let want = geom + 4 * ds.len();
        match count_params(&svg) {
            Ok(pc) if pc.params == want && pc.n_paths == ds.len() => {}
            _ => bad.push(i),
        }
    }
    let mut r = rng(12);
    let mut rt_bad = 0;
    for _ in 0..50 {
        let paths: Vec<VectorPath> = (0..r.random_range(1..4))
            .map(|_| {
                let k = r.random_range(2..7);
                let pts: Vec<Point> = (0..k).map(|_| Point::new(r.random_range(-5.0..70.0), r.random_range(-5.0..70.0))).collect();
                let segs = (0..k)
                    .map(|j| {
                        let (a, b) = (pts[j], pts[(j + 1) % k]);
                        let jit = |r: &mut ChaCha8Rng| Point::new(r.random_range(-9.0..9.0), r.random_range(-9.0..9.0));
                        CubicSegment::new(a, a.lerp(b, 0.3) + jit(&mut r), a.lerp(b, 0.7) + jit(&mut r), b)
                    })
                    .collect();
                let fill = Rgba::opaque([r.random::<f64>(), r.random::<f64>(), r.random::<f64>()]);
                VectorPath::new(segs, true, fill).unwrap()
            })
            .collect();
        let doc = SvgDocument::new(64, 64, paths).unwrap();
        let s1 = serialize_svg(&doc);
        let ok = parse_svg(&s1).map(|(d, pc)| serialize_svg(&d) == s1 && pc == ParamCount::of_document(&doc)).unwrap_or(false);
        rt_bad += (!ok) as usize;
    }
    (bad.is_empty() && rt_bad == 0, format!("count mismatches in cases {bad:?}; round-trip failures {rt_bad}/50"))
}

fn main() {
    let cfg = PipelineConfig::default();
    let corpus = synth_corpus(0).expect("corpus");
    let names = [
        "distance transform oracle",
        "NMS oracle",
        "F_delta oracle",
        "pull_loss gradients",
        "field round trip",
        "resolver ordering",
        "single-path fidelity",
        "robustness",
        "refinement efficacy",
        "simplification gate",
        "full-image reconstruction",
        "parameter counting",
    ];
    let mut results: Vec<Outcome> = Vec::new();
    let t = Instant::now();
    results.push(criterion_1());
    results.push(criterion_2());
    results.push(criterion_3());
    results.push(criterion_4());
    results.push(criterion_5());
    results.push(criterion_6());
    let clean = clean_runs(&corpus, &cfg);
    results.push(criterion_7(&clean));
    results.push(criterion_8(&corpus, &clean, &cfg));
    results.push(criterion_9(&corpus, &cfg));
    results.push(criterion_10(&corpus, &cfg));
    results.push(criterion_11(&cfg));
    results.push(criterion_12());
    let mut failed = 0;
    for (i, ((ok, detail), name)) in results.iter().zip(names).enumerate() {
        println!("criterion {:>2} {:<28} {}  {}", i + 1, name, if *ok { "PASS" } else { "FAIL" }, detail);
        failed += (!ok) as usize;
    }
    println!("acceptance: {}/{} passed in {:.1} s", results.len() - failed, results.len(), t.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
