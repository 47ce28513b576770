//! Raster containers and the pixel-level building blocks of the pipeline:
//! thresholding, connected components, the exact Euclidean distance
//! transform, thinning, and boundary tracing.

mod components;
mod contour;
mod distance;
pub mod pnm;
mod skeleton;

pub use components::{connected_components, largest_component, Connectivity, Labels};
pub use contour::{
    largest_outer_contour, point_contour_distance, resample_arclength, trace_contour, Contour,
};
pub use distance::{distance_transform, DistanceField};
pub use skeleton::skeletonize;

use crate::error::{invalid, Result};

/// Single-channel image, row-major, values in `[0, 1]` with 0 = ink and 1 = paper.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(invalid(format!(
                "gray data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(invalid(format!("gray value {v} outside [0, 1]")));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        GrayImage { width, height, data: vec![value.clamp(0.0, 1.0); width * height] }
    }

    /// Builds an image from a per-pixel closure; results are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        GrayImage { width, height, data }
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
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v).clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn to_rgb(&self) -> RgbImage {
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RgbImage { width: self.width, height: self.height, data }
    }
}

/// Three-channel image, row-major interleaved RGB with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * width * height {
            return Err(invalid(format!(
                "rgb data length {} != 3x{}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(invalid(format!("rgb value {v} outside [0, 1]")));
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let px = rgb.map(|c| c.clamp(0.0, 1.0));
        RgbImage { width, height, data: px.repeat(width * height) }
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
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = 3 * (y * self.width + x);
        for c in 0..3 {
            self.data[i + c] = rgb[c].clamp(0.0, 1.0);
        }
    }

    /// Rec. 601 luma.
    pub fn luma(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0))
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    /// Places `other` to the right of `self`; the shorter image is padded with white.
    pub fn side_by_side(&self, other: &RgbImage) -> RgbImage {
        let w = self.width + other.width;
        let h = self.height.max(other.height);
        let mut out = RgbImage::filled(w, h, [1.0; 3]);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, self.get(x, y));
            }
        }
        for y in 0..other.height {
            for x in 0..other.width {
                out.set(self.width + x, y, other.get(x, y));
            }
        }
        out
    }
}

/// Boolean raster, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(invalid(format!(
                "mask length {} != {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask { width, height, bits }
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
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn invert(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Foreground pixels that have at least one 4-neighbor in the background
    /// (pixels outside the image count as background).
    pub fn boundary(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            if !self.get(x, y) {
                return false;
            }
            let (x, y) = (x as i64, y as i64);
            !(self.get_signed(x - 1, y)
                && self.get_signed(x + 1, y)
                && self.get_signed(x, y - 1)
                && self.get_signed(x, y + 1))
        })
    }

    /// 3x3 erosion; outside the image counts as background.
    pub fn erode(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as i64, y as i64);
            (-1..=1).all(|dy| (-1..=1).all(|dx| self.get_signed(x + dx, y + dy)))
        })
    }

    /// 3x3 dilation.
    pub fn dilate(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as i64, y as i64);
            (-1..=1).any(|dy| (-1..=1).any(|dx| self.get_signed(x + dx, y + dy)))
        })
    }

    /// 3x3 morphological close (dilate then erode). The erosion treats the
    /// image border as foreground so shapes touching the edge are not eaten.
    pub fn close(&self) -> BinaryMask {
        let d = self.dilate();
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as i64, y as i64);
            (-1..=1).all(|dy| {
                (-1..=1).all(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    let outside = nx < 0
                        || ny < 0
                        || nx as usize >= self.width
                        || ny as usize >= self.height;
                    outside || d.get(nx as usize, ny as usize)
                })
            })
        })
    }

    /// Dark-on-white rendering: foreground gets `ink`, background 1.0.
    pub fn to_gray(&self, ink: f64) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| if self.get(x, y) { ink } else { 1.0 })
    }

    /// Foreground painted with `color` over a white background.
    pub fn to_rgb(&self, color: [f64; 3]) -> RgbImage {
        let mut img = RgbImage::filled(self.width, self.height, [1.0; 3]);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    img.set(x, y, color);
                }
            }
        }
        img
    }

    pub fn iou(&self, other: &BinaryMask) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            inter += (*a && *b) as usize;
            union += (*a || *b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// `bit(p) = img(p) < eta`.
pub fn binarize(img: &GrayImage, eta: f64) -> BinaryMask {
    BinaryMask {
        width: img.width,
        height: img.height,
        bits: img.data.iter().map(|&v| v < eta).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_extremes() {
        assert!(binarize(&GrayImage::filled(5, 4, 1.0), 0.5).is_empty());
        assert_eq!(binarize(&GrayImage::filled(5, 4, 0.0), 0.5).count(), 20);
    }

    #[test]
    fn binarize_checkerboard() {
        let img = GrayImage::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 1.0 });
        let m = binarize(&img, 0.5);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(m.get(x, y), (x + y) % 2 == 0);
            }
        }
    }

    #[test]
    fn constructors_reject_bad_data() {
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(RgbImage::new(1, 1, vec![0.0; 2]).is_err());
        assert!(BinaryMask::new(2, 2, vec![true; 5]).is_err());
    }

    #[test]
    fn boundary_of_block() {
        let m = BinaryMask::from_fn(5, 5, |x, y| (1..4).contains(&x) && (1..4).contains(&y));
        let b = m.boundary();
        assert_eq!(b.count(), 8);
        assert!(!b.get(2, 2));
    }
}
