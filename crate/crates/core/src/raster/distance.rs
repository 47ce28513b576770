//! Exact Euclidean distance transform (separable lower-envelope of parabolas).

use super::BinaryMask;

/// Per-pixel Euclidean distance (pixels) to the nearest foreground pixel center.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn from_raw(width: usize, height: usize, dist: Vec<f64>) -> Self {
        assert_eq!(dist.len(), width * height);
        DistanceField { width, height, dist }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.dist
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.dist[y * self.width + x]
    }

    /// Bilinear sample with border clamping. Returns the value and its
    /// gradient; a clamped axis has zero gradient.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (w, h) = (self.width, self.height);
        let (cx, gx_on) = clamp_axis(x, w);
        let (cy, gy_on) = clamp_axis(y, h);
        let ix = if w > 1 { (cx.floor() as usize).min(w - 2) } else { 0 };
        let iy = if h > 1 { (cy.floor() as usize).min(h - 2) } else { 0 };
        let fx = cx - ix as f64;
        let fy = cy - iy as f64;
        let ix1 = (ix + 1).min(w - 1);
        let iy1 = (iy + 1).min(h - 1);
        let v00 = self.get(ix, iy);
        let v10 = self.get(ix1, iy);
        let v01 = self.get(ix, iy1);
        let v11 = self.get(ix1, iy1);
        let top = v00 + (v10 - v00) * fx;
        let bot = v01 + (v11 - v01) * fx;
        let v = top + (bot - top) * fy;
        let gx = if gx_on { (v10 - v00) * (1.0 - fy) + (v11 - v01) * fy } else { 0.0 };
        let gy = if gy_on { bot - top } else { 0.0 };
        (v, gx, gy)
    }
}

fn clamp_axis(v: f64, n: usize) -> (f64, bool) {
    let hi = (n.max(1) - 1) as f64;
    if v < 0.0 {
        (0.0, false)
    } else if v > hi {
        (hi, false)
    } else {
        (v, n > 1)
    }
}

/// Exact EDT. An empty mask yields `width + height` everywhere.
pub fn distance_transform(mask: &BinaryMask) -> DistanceField {
    let (w, h) = (mask.width(), mask.height());
    if mask.is_empty() {
        return DistanceField { width: w, height: h, dist: vec![(w + h) as f64; w * h] };
    }
    // Squared distances stay integral in f64, so the result is exact.
    let mut sq: Vec<f64> =
        mask.bits().iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..w {
        for y in 0..h {
            f[y] = sq[y * w + x];
        }
        envelope_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            sq[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
        envelope_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        sq[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    DistanceField { width: w, height: h, dist: sq.into_iter().map(f64::sqrt).collect() }
}

/// Lower envelope of the parabolas `(q - p)^2 + f[p]` over the finite sites `p`.
fn envelope_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let mut k: Option<usize> = None;
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            match k {
                None => {
                    k = Some(0);
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                Some(kk) => {
                    let p = v[kk];
                    let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
                    if s <= z[kk] {
                        k = kk.checked_sub(1);
                        continue;
                    }
                    v[kk + 1] = q;
                    z[kk + 1] = s;
                    z[kk + 2] = f64::INFINITY;
                    k = Some(kk + 1);
                    break;
                }
            }
        }
    }
    if k.is_none() {
        d.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let m = BinaryMask::from_fn(6, 6, |x, y| x == 0 && y == 0);
        let d = distance_transform(&m);
        assert_eq!(d.get(3, 4), 5.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn empty_sentinel() {
        let d = distance_transform(&BinaryMask::empty(7, 3));
        assert!(d.data().iter().all(|&v| v == 10.0));
    }

    #[test]
    fn bilinear_sample_and_clamp() {
        let d = DistanceField::from_raw(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        let (v, gx, gy) = d.sample(0.5, 0.5);
        assert!((v - 1.5).abs() < 1e-12);
        assert!((gx - 1.0).abs() < 1e-12 && (gy - 2.0).abs() < 1e-12);
        let (v, gx, gy) = d.sample(-3.0, 0.25);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(gx, 0.0);
        assert!(gy > 0.0);
    }
}
