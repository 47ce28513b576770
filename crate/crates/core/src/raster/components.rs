use std::collections::VecDeque;

use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(i64, i64); 8] =
            [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Dense component labels: 0 is background, components are `1..=count`
/// numbered in raster order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: usize,
}

impl Labels {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per label, index 0 = background.
    pub fn areas(&self) -> Vec<usize> {
        let mut a = vec![0usize; self.count + 1];
        for &l in &self.labels {
            a[l as usize] += 1;
        }
        a
    }

    pub fn mask_of(&self, label: u32) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get(x, y) == label)
    }
}

pub fn connected_components(mask: &BinaryMask, conn: Connectivity) -> Labels {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.bits()[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    Labels { width: w, height: h, labels, count: next as usize }
}

/// The largest 8-connected component (first in raster order on ties), or
/// `None` for an empty mask.
pub fn largest_component(mask: &BinaryMask) -> Option<BinaryMask> {
    let labels = connected_components(mask, Connectivity::Eight);
    let areas = labels.areas();
    let best = (1..=labels.count).max_by(|&a, &b| areas[a].cmp(&areas[b]).then(b.cmp(&a)))?;
    Some(labels.mask_of(best as u32))
}
