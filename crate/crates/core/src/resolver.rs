//! Hard resolution of an anchor field into an ordered cubic Bézier path.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::field::{contour_direction, crop_contour, propose_arc_positions, AnchorField, FieldConfig};
use crate::geom::Point;
use crate::raster::{point_contour_distance, Contour, GrayImage};
use crate::svg::{CubicSegment, Rgba, VectorPath};

/// Anchors closer than this along the contour are merged.
pub const MERGE_DIST: f64 = 1.0;

/// A pixel peak kept by non-maximum suppression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: usize,
    pub y: usize,
    pub value: f64,
}

/// Threshold, local-maximum test over the (2r+1)² window, then greedy
/// suppression within Euclidean distance r in descending value order
/// (ties by row-major index). Returned in kept order.
pub fn detect_peaks(field: &AnchorField, cfg: &FieldConfig) -> Vec<Peak> {
    let (w, h) = (field.width(), field.height());
    let r = cfg.nms_radius as i64;
    let mut cands = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = field.get(x, y);
            if v < cfg.tau_a {
                continue;
            }
            let mut is_max = true;
            'win: for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                    if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 {
                        continue;
                    }
                    if field.get(qx as usize, qy as usize) > v {
                        is_max = false;
                        break 'win;
                    }
                }
            }
            if is_max {
                cands.push(Peak { x, y, value: v });
            }
        }
    }
    // stable sort keeps row-major order among equal values
    cands.sort_by(|a, b| b.value.total_cmp(&a.value));
    let r2 = (r * r) as f64;
    let mut kept: Vec<Peak> = Vec::new();
    for c in cands {
        let close = kept.iter().any(|k| {
            let (dx, dy) = (k.x as f64 - c.x as f64, k.y as f64 - c.y as f64);
            dx * dx + dy * dy <= r2
        });
        if !close {
            kept.push(c);
        }
    }
    kept
}

/// Subpixel position of a peak: centroid of its equal-valued plateau when
/// the peak is flat (e.g. clipped at 1), else the 3×3 value-weighted centroid.
pub fn refine_peak(field: &AnchorField, peak: Peak, radius: usize) -> Point {
    let (w, h) = (field.width() as i64, field.height() as i64);
    let (px, py) = (peak.x as i64, peak.y as i64);
    let r = radius as i64;
    let mut seen = vec![peak.x + peak.y * field.width()];
    let mut queue = VecDeque::from([(px, py)]);
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    while let Some((x, y)) = queue.pop_front() {
        sx += x as f64;
        sy += y as f64;
        n += 1;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (qx, qy) = (x + dx, y + dy);
                if qx < 0 || qy < 0 || qx >= w || qy >= h || (qx - px).abs() > r || (qy - py).abs() > r {
                    continue;
                }
                let idx = (qx + qy * w) as usize;
                if seen.contains(&idx) || field.get(qx as usize, qy as usize) != peak.value {
                    continue;
                }
                seen.push(idx);
                queue.push_back((qx, qy));
            }
        }
    }
    if n > 1 {
        return Point::new(sx / n as f64, sy / n as f64);
    }
    let (mut cx, mut cy, mut wsum) = (0.0, 0.0, 0.0);
    for dy in -1..=1 {
        for dx in -1..=1 {
            let (qx, qy) = (px + dx, py + dy);
            if qx < 0 || qy < 0 || qx >= w || qy >= h {
                continue;
            }
            let v = field.get(qx as usize, qy as usize);
            cx += v * qx as f64;
            cy += v * qy as f64;
            wsum += v;
        }
    }
    if wsum > 0.0 {
        Point::new(cx / wsum, cy / wsum)
    } else {
        Point::new(px as f64, py as f64)
    }
}

/// Detected anchors with their peak responses.
pub fn detect_with_response(field: &AnchorField, cfg: &FieldConfig) -> Vec<(Point, f64)> {
    detect_peaks(field, cfg)
        .into_iter()
        .map(|p| (refine_peak(field, p, cfg.nms_radius), p.value))
        .collect()
}

pub fn detect_anchors(field: &AnchorField, cfg: &FieldConfig) -> Vec<Point> {
    detect_with_response(field, cfg).into_iter().map(|(p, _)| p).collect()
}

/// Discrete path structure: ordered anchors on a contour.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStructure {
    pub anchors: Vec<Point>,
    pub arc_pos: Vec<f64>,
    /// Central-difference unit tangents at the anchors.
    pub tangents: Vec<Point>,
    pub closed: bool,
    /// Arc length of each segment (wrapping segment included when closed).
    pub chord_lens: Vec<f64>,
    /// One-sided contour directions per segment: leaving its start anchor
    /// and arriving at its end anchor.
    pub seg_dirs: Vec<(Point, Point)>,
}

impl PathStructure {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.anchors.len()
        } else {
            self.anchors.len().saturating_sub(1)
        }
    }

    /// One line per anchor: `x y s tx ty`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.anchors.len() {
            let (a, t) = (self.anchors[i], self.tangents.get(i).copied().unwrap_or(Point::ZERO));
            out.push_str(&format!("{:.3} {:.3} {:.3} {:.6} {:.6}\n", a.x, a.y, self.arc_pos[i], t.x, t.y));
        }
        out
    }
}

fn chord_lengths(arcs: &[f64], closed: bool, total: f64) -> Vec<f64> {
    let k = arcs.len();
    let mut out: Vec<f64> = arcs.windows(2).map(|w| w[1] - w[0]).collect();
    if closed && k > 0 {
        out.push(arcs[0] + total - arcs[k - 1]);
    }
    out
}

/// Sorted, merged arc positions; `resp` breaks merge ties (higher wins,
/// else the earlier position).
fn merge_arcs(mut items: Vec<(f64, f64)>, closed: bool, total: f64) -> Vec<f64> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for it in items {
        match kept.last_mut() {
            Some(last) if it.0 - last.0 < MERGE_DIST => {
                if it.1 > last.1 {
                    *last = it;
                }
            }
            _ => kept.push(it),
        }
    }
    if closed && kept.len() > 1 {
        let (first, last) = (kept[0], kept[kept.len() - 1]);
        if first.0 + total - last.0 < MERGE_DIST {
            if last.1 > first.1 {
                kept[0] = last;
            }
            kept.pop();
            kept.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }
    kept.into_iter().map(|k| k.0).collect()
}

fn structure_from_sorted(arcs: Vec<f64>, contour: &Contour) -> PathStructure {
    let total = contour.length();
    PathStructure {
        anchors: arcs.iter().map(|&s| contour.point_at(s)).collect(),
        chord_lens: chord_lengths(&arcs, contour.closed(), total),
        arc_pos: arcs,
        tangents: Vec::new(),
        closed: contour.closed(),
        seg_dirs: Vec::new(),
    }
}

/// Closed paths need three anchors; a two-anchor loop gets the midpoint of
/// its longer arc.
fn ensure_three(arcs: &mut Vec<f64>, contour: &Contour) {
    if contour.closed() && arcs.len() == 2 {
        let total = contour.length();
        let (a, b) = (arcs[0], arcs[1]);
        let mid = if b - a >= total - (b - a) { (a + b) / 2.0 } else { contour.wrap_s(b + (total - (b - a)) / 2.0) };
        arcs.push(mid);
        arcs.sort_by(f64::total_cmp);
    }
}

/// Projects anchors onto their nearest contour points, orders them by arc
/// position and merges near-duplicates. Tangents are left empty.
pub fn project_and_order(anchors: &[Point], contour: &Contour, responses: Option<&[f64]>) -> Result<PathStructure> {
    let items: Vec<(f64, f64)> = anchors
        .iter()
        .enumerate()
        .map(|(i, &a)| (point_contour_distance(a, contour).1, responses.map_or(0.0, |r| r[i])))
        .collect();
    let mut arcs = merge_arcs(items, contour.closed(), contour.length());
    if arcs.len() < 2 {
        return Err(Error::ResolutionFailed(format!("{} anchor(s) after merging", arcs.len())));
    }
    ensure_three(&mut arcs, contour);
    Ok(structure_from_sorted(arcs, contour))
}

fn dir(a: Point, b: Point) -> Option<Point> {
    (b - a).normalized()
}

/// Central-difference tangents plus one-sided per-segment directions.
/// The window is clamped to half the contour (or to its ends when open).
pub fn estimate_tangents(mut st: PathStructure, contour: &Contour, window: f64) -> PathStructure {
    let total = contour.length();
    let w = window.min(total / 2.0).max(1e-3);
    let k = st.anchors.len();
    st.tangents = (0..k)
        .map(|i| {
            let s = st.arc_pos[i];
            let (s0, s1) = if contour.closed() { (s - w, s + w) } else { ((s - w).max(0.0), (s + w).min(total)) };
            dir(contour.point_at(s0), contour.point_at(s1))
                .or_else(|| {
                    let next = st.anchors[(i + 1) % k];
                    dir(st.anchors[i], next)
                })
                .unwrap_or(Point::new(1.0, 0.0))
        })
        .collect();
    let n = st.segment_count();
    st.seg_dirs = (0..n)
        .map(|i| {
            let (a, b) = (st.anchors[i], st.anchors[(i + 1) % k]);
            let (s, l) = (st.arc_pos[i], st.chord_lens[i]);
            let reach = (l / 3.0).max(window.min(l / 2.0));
            let chord = dir(a, b).unwrap_or(st.tangents[i]);
            let d0 = contour_direction(contour, s, reach, 1.0).unwrap_or(chord);
            let d1 = contour_direction(contour, s + l, reach, -1.0).map(|d| -d).unwrap_or(chord);
            (d0, d1)
        })
        .collect();
    st
}

/// Structure from arbitrary arc positions (sorted and merged), with tangents.
pub fn structure_from_arcs(arcs: &[f64], contour: &Contour, window: f64) -> Result<PathStructure> {
    let items = arcs.iter().map(|&s| (contour.wrap_s(s), 0.0)).collect();
    let mut arcs = merge_arcs(items, contour.closed(), contour.length());
    if arcs.len() < 2 {
        return Err(Error::ResolutionFailed(format!("{} anchor(s) after merging", arcs.len())));
    }
    ensure_three(&mut arcs, contour);
    Ok(estimate_tangents(structure_from_sorted(arcs, contour), contour, window))
}

/// Resolved path with its structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPath {
    pub structure: PathStructure,
    pub path: VectorPath,
    /// Set when field detection was insufficient and proposed anchors were used.
    pub fallback: bool,
}

/// One cubic per consecutive anchor pair with handles of a third of the arc
/// gap along the one-sided contour directions.
pub fn init_beziers(structure: PathStructure) -> Result<ResolvedPath> {
    let k = structure.anchors.len();
    let n = structure.segment_count();
    if n == 0 || structure.seg_dirs.len() != n {
        return Err(Error::ResolutionFailed("structure has no segments or no tangents".into()));
    }
    let segments = (0..n)
        .map(|i| {
            let (a, b) = (structure.anchors[i], structure.anchors[(i + 1) % k]);
            let l = structure.chord_lens[i] / 3.0;
            let (d0, d1) = structure.seg_dirs[i];
            CubicSegment::new(a, a + d0 * l, b - d1 * l, b)
        })
        .collect();
    let path = VectorPath::new(segments, structure.closed, Rgba::BLACK)?;
    Ok(ResolvedPath { structure, path, fallback: false })
}

/// Resolution against an already traced contour.
pub fn resolve_on_contour(field: &AnchorField, contour: &Contour, cfg: &FieldConfig) -> Result<ResolvedPath> {
    let det = detect_with_response(field, cfg);
    if det.len() >= 2 {
        let pts: Vec<Point> = det.iter().map(|d| d.0).collect();
        let resp: Vec<f64> = det.iter().map(|d| d.1).collect();
        if let Ok(st) = project_and_order(&pts, contour, Some(&resp)) {
            return init_beziers(estimate_tangents(st, contour, cfg.tangent_window));
        }
    }
    let arcs = propose_arc_positions(contour, &cfg.proposal).map_err(|e| Error::ResolutionFailed(e.to_string()))?;
    let mut r = init_beziers(structure_from_arcs(&arcs, contour, cfg.tangent_window)?)?;
    r.fallback = true;
    Ok(r)
}

/// detect → project/order → tangents → initial cubics on the crop's contour.
pub fn hard_resolve(field: &AnchorField, crop: &GrayImage, cfg: &FieldConfig, eta: f64) -> Result<ResolvedPath> {
    cfg.validate()?;
    let contour = crop_contour(crop, eta, cfg.contour_offset)?;
    resolve_on_contour(field, &contour, cfg)
}
